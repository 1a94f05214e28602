"""Command-line front end: select, sweep, oracle and evaluate over JSONL corpora.

Exit codes: 0 success, 1 at least one instance failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from .corpus import CorpusError, dumps, load_corpus, load_selections, load_utility_sidecar
from .metrics import QUALITY_METRICS, EvalReport, evaluate_set
from .model import (
    DEFAULT_LAMBDA_GRID,
    CandidateSet,
    SelectorConfig,
    ValidationError,
    dedup_candidates,
)
from .selection import select
from .utility import TOKENIZER_MODES, UTILITY_KINDS, Tokenizer, UtilityKind, build_utility_matrix

log = logging.getLogger("divmbr")

JOBS_ENV = "DIVMBR_JOBS"
CSV_COLUMNS = (
    "selector", "k", "lambda", "mean_quality", "min_quality", "max_quality",
    "p_bleu", "distinct_1", "distinct_2", "distinct_3", "p_cosine",
)


def selector_name(cfg: SelectorConfig) -> str:
    return f"oracle_{cfg.oracle_objective}" if cfg.kind == "oracle" else cfg.kind


def _select_instance(payload) -> list:
    cs, matrix, kind, configs, dedup = payload
    lines = []
    try:
        kept = list(range(len(cs)))
        work = cs
        if dedup:
            work, kept = dedup_candidates(cs)
            if matrix is not None:
                matrix = matrix.take(kept)
        u = build_utility_matrix(work, kind, matrix)
    except ValueError as exc:
        return [_error_line(cs.instance_id, cfg, exc) for cfg in configs]
    for cfg in configs:
        try:
            res = select(work, u, cfg)
        except ValueError as exc:
            lines.append(_error_line(cs.instance_id, cfg, exc))
            continue
        selected = [kept[i] for i in res.selected]
        lines.append({
            "id": cs.instance_id,
            "selector": selector_name(cfg),
            "k": cfg.k,
            "lambda": cfg.lam,
            "seed": cfg.seed,
            "selected": selected,
            "selected_texts": [cs.candidates[i].text for i in selected],
            "objective": float(res.objective),
        })
    return lines


def _error_line(iid: str, cfg: SelectorConfig, exc: Exception) -> dict:
    return {"id": iid, "selector": selector_name(cfg), "k": cfg.k, "lambda": cfg.lam, "error": str(exc)}


def _pmap(fn, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def run_select(
    corpus: Sequence[CandidateSet],
    configs: Sequence[SelectorConfig],
    utility: UtilityKind = UtilityKind(),
    matrices: Optional[dict] = None,
    dedup: bool = False,
    jobs: int = 1,
) -> list:
    """One output dict per (instance, config), instance-major in corpus order."""
    matrices = matrices or {}
    payloads = [(cs, matrices.get(cs.instance_id), utility, list(configs), dedup) for cs in corpus]
    return [line for lines in _pmap(_select_instance, payloads, jobs) for line in lines]


def _evaluate_line(payload) -> dict:
    line, cs, quality, cosine, tokenizer = payload
    selected = line["selected"]
    bad = [i for i in selected if not (isinstance(i, int) and 0 <= i < len(cs))]
    if bad:
        return {"instance_id": cs.instance_id, "p_bleu": None, "distinct": {}, "p_cosine": None,
                "quality": {}, "errors": {"selection": f"invalid indices {bad}"}}
    texts = [cs.candidates[i].text for i in selected]
    embs = [cs.candidates[i].embedding for i in selected]
    return evaluate_set(cs.instance_id, texts, cs.references, embs, quality, cosine, tokenizer)


def run_evaluate(
    selections: Sequence[dict],
    corpus: Sequence[CandidateSet],
    quality: Optional[str] = "sentence_bleu",
    cosine: bool = False,
    tokenizer: Tokenizer = Tokenizer(),
    jobs: int = 1,
) -> dict:
    """Group selection lines by (selector, k, lambda) and score each group.

    Raises CorpusError when a selection id is absent from the corpus.
    """
    by_id = {cs.instance_id: cs for cs in corpus}
    missing = sorted({s["id"] for s in selections} - by_id.keys())
    if missing:
        raise CorpusError(f"selection ids not in corpus: {missing[:5]}")
    groups, selection_errors, payloads = {}, [], []
    for s in selections:
        if "error" in s:
            selection_errors.append(s)
            continue
        key = (s["selector"], s["k"], s["lambda"])
        groups.setdefault(key, []).append(len(payloads))
        payloads.append((s, by_id[s["id"]], quality, cosine, tokenizer))
    rows = _pmap(_evaluate_line, payloads, jobs)
    reports = []
    for (name, k, lam), idx in groups.items():
        rep = EvalReport.from_rows([rows[i] for i in idx])
        reports.append({"selector": name, "k": k, "lambda": lam, "report": rep})
    return {"reports": reports, "selection_errors": selection_errors}


def csv_rows(result: dict, quality: Optional[str]) -> list:
    rows = []
    for entry in result["reports"]:
        c = entry["report"].corpus
        row = {"selector": entry["selector"], "k": entry["k"], "lambda": entry["lambda"]}
        for stat in ("mean", "min", "max"):
            row[f"{stat}_quality"] = c.get(f"{stat}_{quality}") if quality else None
        for col in ("p_bleu", "distinct_1", "distinct_2", "distinct_3", "p_cosine"):
            row[col] = c.get(col)
        rows.append(row)
    return rows


def format_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(["" if row[c] is None else repr(row[c]) if isinstance(row[c], float) else row[c]
                         for c in CSV_COLUMNS])
    return buf.getvalue()


def _has_failures(result: dict) -> bool:
    if result["selection_errors"]:
        return True
    return any(row["errors"] for e in result["reports"] for row in e["report"].per_instance)


def report_json(result: dict) -> str:
    out = {
        "reports": [
            {"selector": e["selector"], "k": e["k"], "lambda": e["lambda"], **e["report"].to_dict()}
            for e in result["reports"]
        ],
        "selection_errors": result["selection_errors"],
    }
    return json.dumps(out, ensure_ascii=False, indent=1, allow_nan=False) + "\n"


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divmbr", description="Diverse MBR subset selection and evaluation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", required=True, help="JSONL corpus")
        p.add_argument("--output", default="-", help="output path (default stdout)")
        p.add_argument("--jobs", type=int, default=_default_jobs())
        p.add_argument("--tokenizer", choices=TOKENIZER_MODES, default="punct_split")
        p.add_argument("--no-lowercase", action="store_true")

    for name in ("select", "sweep", "oracle"):
        p = sub.add_parser(name)
        common(p)
        if name == "oracle":
            p.add_argument("--selector", choices=("dmbr", "kmbr", "oversample"), default="dmbr",
                           help="objective to optimize exhaustively")
        else:
            p.add_argument("--selector", choices=("mbr_topk", "dmbr", "kmbr", "oversample"),
                           default="mbr_topk" if name == "select" else "dmbr")
        p.add_argument("--k", type=int, default=4)
        p.add_argument("--utility", choices=UTILITY_KINDS, default=None,
                       help="default: precomputed if --utility-file is given, else sentence_bleu")
        p.add_argument("--utility-file", help="JSONL sidecar of precomputed utility matrices")
        p.add_argument("--lambda", dest="lambdas", type=float, action="append",
                       help="diversity strength; repeat for a sweep")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-iter", type=int, default=300)
        p.add_argument("--prob-mode", choices=("raw", "normalized"), default="normalized")
        p.add_argument("--dedup", action="store_true", help="collapse exact duplicate texts first")

    p = sub.add_parser("evaluate")
    common(p)
    p.add_argument("--selections", required=True, help="JSONL output of select/sweep/oracle")
    p.add_argument("--quality", choices=QUALITY_METRICS + ("none",), default="sentence_bleu")
    p.add_argument("--cosine", action="store_true", help="also report pairwise embedding cosine")
    p.add_argument("--csv", help="write corpus-level rows as CSV to this path")
    return parser


def _configs(args) -> list:
    lambdas = args.lambdas
    if args.command == "sweep":
        lambdas = lambdas or list(DEFAULT_LAMBDA_GRID)
    else:
        if lambdas and len(lambdas) > 1:
            raise ValidationError(f"{args.command} takes a single --lambda; use sweep for a grid")
        lambdas = lambdas or [0.0]
    kind, objective = args.selector, "dmbr"
    if args.command == "oracle":
        kind, objective = "oracle", args.selector
    return [
        SelectorConfig(kind=kind, k=args.k, lam=lam, seed=args.seed, max_iter=args.max_iter,
                       prob_mode=args.prob_mode, oracle_objective=objective)
        for lam in lambdas
    ]


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    tokenizer = Tokenizer(args.tokenizer, not args.no_lowercase)
    try:
        if args.jobs < 1:
            raise ValidationError("--jobs must be >= 1")
        corpus = load_corpus(args.input)
        if args.command == "evaluate":
            quality = None if args.quality == "none" else args.quality
            result = run_evaluate(load_selections(args.selections), corpus, quality, args.cosine,
                                  tokenizer, args.jobs)
            _write(args.output, report_json(result))
            if args.csv:
                _write(args.csv, format_csv(csv_rows(result, quality)))
            return 1 if _has_failures(result) else 0
        configs = _configs(args)
        matrices = load_utility_sidecar(args.utility_file, corpus) if args.utility_file else None
        kind = args.utility or ("precomputed" if args.utility_file else "sentence_bleu")
        utility = UtilityKind(kind, args.tokenizer, not args.no_lowercase)
    except (OSError, ValueError) as exc:
        print(f"divmbr: error: {exc}", file=sys.stderr)
        return 2
    lines = run_select(corpus, configs, utility, matrices, args.dedup, args.jobs)
    _write(args.output, "".join(dumps(line) + "\n" for line in lines))
    failed = [line for line in lines if "error" in line]
    for line in failed:
        log.warning("instance %s failed: %s", line["id"], line["error"])
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
