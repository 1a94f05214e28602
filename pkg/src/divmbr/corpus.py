"""JSONL corpus, utility sidecar and selection file I/O."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .model import Candidate, CandidateSet, UtilityMatrix, ValidationError, validate_candidate_set, validate_utility_matrix


class CorpusError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _parse_candidate(obj, lineno: int, i: int) -> Candidate:
    if not isinstance(obj, dict):
        raise CorpusError(f"candidate {i} must be an object", lineno)
    text = obj.get("text")
    if not isinstance(text, str):
        raise CorpusError(f"candidate {i}: 'text' must be a string", lineno)
    lp = obj.get("logprob")
    if lp is not None and not _is_number(lp):
        raise CorpusError(f"candidate {i}: 'logprob' must be a number", lineno)
    emb = obj.get("embedding")
    if emb is not None:
        if not isinstance(emb, list) or not all(_is_number(x) for x in emb):
            raise CorpusError(f"candidate {i}: 'embedding' must be a list of numbers", lineno)
        emb = tuple(float(x) for x in emb)
    return Candidate(text, None if lp is None else float(lp), emb)


def parse_instance(line: str, lineno: int) -> CandidateSet:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed JSON ({exc.msg})", lineno) from None
    if not isinstance(obj, dict):
        raise CorpusError("expected a JSON object", lineno)
    iid = obj.get("id")
    if not isinstance(iid, str):
        raise CorpusError("'id' must be a string", lineno)
    cands = obj.get("candidates")
    if not isinstance(cands, list):
        raise CorpusError("'candidates' must be a list", lineno)
    source = obj.get("source")
    if source is not None and not isinstance(source, str):
        raise CorpusError("'source' must be a string", lineno)
    refs = obj.get("references")
    if refs is not None:
        if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
            raise CorpusError("'references' must be a list of strings", lineno)
        refs = tuple(refs)
    cs = CandidateSet(iid, tuple(_parse_candidate(c, lineno, i) for i, c in enumerate(cands)), source, refs)
    try:
        return validate_candidate_set(cs)
    except ValidationError as exc:
        raise CorpusError(str(exc), lineno) from None


def _lines(path):
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh.read().split("\n"), start=1):
            if line.strip():
                yield lineno, line


def load_corpus(path) -> list:
    """Read one instance per line; ids must be unique."""
    corpus, seen = [], set()
    for lineno, line in _lines(path):
        cs = parse_instance(line, lineno)
        if cs.instance_id in seen:
            raise CorpusError(f"duplicate id {cs.instance_id!r}", lineno)
        seen.add(cs.instance_id)
        corpus.append(cs)
    return corpus


def load_utility_sidecar(path, corpus: Iterable[CandidateSet]) -> dict:
    """Read ``{"id", "utility"}`` lines into validated matrices keyed by id."""
    sizes = {cs.instance_id: len(cs) for cs in corpus}
    out = {}
    for lineno, line in _lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"malformed JSON ({exc.msg})", lineno) from None
        iid = obj.get("id") if isinstance(obj, dict) else None
        if not isinstance(iid, str):
            raise CorpusError("'id' must be a string", lineno)
        if iid not in sizes:
            raise CorpusError(f"sidecar id {iid!r} not present in corpus", lineno)
        if iid in out:
            raise CorpusError(f"duplicate sidecar id {iid!r}", lineno)
        try:
            out[iid] = validate_utility_matrix(obj.get("utility"), sizes[iid])
        except (ValidationError, TypeError, ValueError) as exc:
            raise CorpusError(f"id {iid!r}: {exc}", lineno) from None
    return out


def instance_to_json(cs: CandidateSet) -> dict:
    obj = {"id": cs.instance_id}
    if cs.source is not None:
        obj["source"] = cs.source
    cands = []
    for c in cs.candidates:
        d = {"text": c.text}
        if c.logprob is not None:
            d["logprob"] = c.logprob
        if c.embedding is not None:
            d["embedding"] = list(c.embedding)
        cands.append(d)
    obj["candidates"] = cands
    if cs.references is not None:
        obj["references"] = list(cs.references)
    return obj


def dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, allow_nan=False)


def write_corpus(corpus: Iterable[CandidateSet], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for cs in corpus:
            fh.write(dumps(instance_to_json(cs)) + "\n")


def write_utility_sidecar(matrices: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for iid, m in matrices.items():
            vals = m.values if isinstance(m, UtilityMatrix) else m
            fh.write(dumps({"id": iid, "utility": [[float(x) for x in row] for row in vals]}) + "\n")


def load_selections(path) -> list:
    rows = []
    for lineno, line in _lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"malformed JSON ({exc.msg})", lineno) from None
        if not isinstance(obj, dict) or not isinstance(obj.get("id"), str):
            raise CorpusError("selection line needs a string 'id'", lineno)
        rows.append(obj)
    return rows


def fixture_path() -> Path:
    """Path of the bundled synthetic paraphrase corpus."""
    return Path(__file__).with_name("data") / "fixture.jsonl"
