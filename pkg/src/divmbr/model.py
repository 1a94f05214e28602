"""Shared data model: candidate pools, utility matrices, selector configs and results."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

SELECTOR_KINDS = ("mbr_topk", "dmbr", "kmbr", "oversample", "oracle")
PROB_MODES = ("raw", "normalized")
DEFAULT_LAMBDA_GRID = (0.0, 0.1, 0.3, 0.5, 1.0, 2.0)


class ValidationError(ValueError):
    """Invalid input. ``index`` / ``position`` point at the offending element when known."""

    def __init__(self, message: str, index: Optional[int] = None, position: Optional[tuple] = None):
        super().__init__(message)
        self.index = index
        self.position = position


@dataclass(frozen=True)
class Candidate:
    text: str
    logprob: Optional[float] = None
    embedding: Optional[tuple] = None


@dataclass(frozen=True)
class CandidateSet:
    instance_id: str
    candidates: tuple
    source: Optional[str] = None
    references: Optional[tuple] = None

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def texts(self) -> list:
        return [c.text for c in self.candidates]

    def has_embeddings(self) -> bool:
        return all(c.embedding is not None for c in self.candidates)

    def has_logprobs(self) -> bool:
        return all(c.logprob is not None for c in self.candidates)


def make_candidate_set(
    instance_id: str,
    texts: Sequence[str],
    logprobs: Optional[Sequence[float]] = None,
    embeddings: Optional[Sequence[Sequence[float]]] = None,
    references: Optional[Sequence[str]] = None,
    source: Optional[str] = None,
) -> CandidateSet:
    """Convenience constructor from parallel lists; result is validated."""
    cands = []
    for i, t in enumerate(texts):
        lp = None if logprobs is None else logprobs[i]
        emb = None if embeddings is None else embeddings[i]
        cands.append(Candidate(t, lp, None if emb is None else tuple(float(x) for x in emb)))
    refs = None if references is None else tuple(references)
    return validate_candidate_set(CandidateSet(instance_id, tuple(cands), source, refs))


def _normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def validate_candidate_set(cs: CandidateSet) -> CandidateSet:
    """Check the pool invariants and return it with line endings normalized.

    Raises ValidationError carrying the index of the first offending candidate.
    """
    if len(cs.candidates) == 0:
        raise ValidationError(f"instance {cs.instance_id!r}: empty candidate pool")
    dim = None
    cands = []
    for i, c in enumerate(cs.candidates):
        if not isinstance(c.text, str):
            raise ValidationError(f"candidate {i}: text must be a string", index=i)
        lp = c.logprob
        if lp is not None:
            lp = float(lp)
            if math.isnan(lp):
                raise ValidationError(f"candidate {i}: logprob is NaN", index=i)
            if lp > 0:
                raise ValidationError(f"candidate {i}: logprob {lp} > 0", index=i)
        emb = c.embedding
        if emb is not None:
            emb = tuple(float(x) for x in emb)
            if len(emb) == 0:
                raise ValidationError(f"candidate {i}: embedding has dimension 0", index=i)
            if not all(math.isfinite(x) for x in emb):
                raise ValidationError(f"candidate {i}: embedding has non-finite entries", index=i)
            if dim is None:
                dim = len(emb)
            elif len(emb) != dim:
                raise ValidationError(
                    f"candidate {i}: inconsistent embedding dimension {len(emb)} (expected {dim})",
                    index=i,
                )
        cands.append(Candidate(_normalize_newlines(c.text), lp, emb))
    refs = cs.references
    if refs is not None:
        refs = tuple(_normalize_newlines(r) for r in refs)
    source = None if cs.source is None else _normalize_newlines(cs.source)
    return CandidateSet(str(cs.instance_id), tuple(cands), source, refs)


def dedup_candidates(cs: CandidateSet) -> tuple:
    """Collapse exact text duplicates, keeping first occurrences.

    Returns ``(deduplicated_set, kept)`` where ``kept[i]`` is the original index
    of the i-th surviving candidate.
    """
    seen = set()
    kept = []
    for i, c in enumerate(cs.candidates):
        if c.text not in seen:
            seen.add(c.text)
            kept.append(i)
    return replace(cs, candidates=tuple(cs.candidates[i] for i in kept)), kept


@dataclass(frozen=True)
class UtilityMatrix:
    """Row i holds u(candidate_i as hypothesis, candidate_j as reference)."""

    values: np.ndarray = field(repr=False)
    positive: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def take(self, idx: Sequence[int]) -> "UtilityMatrix":
        idx = np.asarray(idx, dtype=np.intp)
        return validate_utility_matrix(self.values[np.ix_(idx, idx)], len(idx))

    def permute(self, perm: Sequence[int]) -> "UtilityMatrix":
        return self.take(perm)


def validate_utility_matrix(values, n: int) -> UtilityMatrix:
    """Accept an n-by-n finite matrix; widens to float64 and freezes it."""
    if isinstance(values, UtilityMatrix):
        values = values.values
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape != (n, n):
        raise ValidationError(f"utility matrix shape {arr.shape} does not match n={n}")
    bad = np.argwhere(~np.isfinite(arr))
    if len(bad):
        r, c = (int(x) for x in bad[0])
        raise ValidationError(f"non-finite utility entry at ({r}, {c})", position=(r, c))
    arr.setflags(write=False)
    return UtilityMatrix(arr, bool(np.all(arr > 0)))


@dataclass(frozen=True)
class SelectorConfig:
    kind: str = "dmbr"
    k: int = 4
    lam: float = 0.0
    seed: int = 0
    max_iter: int = 300
    prob_mode: str = "normalized"
    # objective used by kind="oracle": one of dmbr, kmbr, oversample
    oracle_objective: str = "dmbr"

    def __post_init__(self):
        if self.kind not in SELECTOR_KINDS:
            raise ValidationError(f"unknown selector kind {self.kind!r}")
        if int(self.k) < 1:
            raise ValidationError(f"k must be positive, got {self.k}")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValidationError(f"lambda must be a finite nonnegative number, got {self.lam}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")
        if int(self.max_iter) < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.prob_mode not in PROB_MODES:
            raise ValidationError(f"unknown prob_mode {self.prob_mode!r}")
        if self.oracle_objective not in ("dmbr", "kmbr", "oversample"):
            raise ValidationError(f"unknown oracle objective {self.oracle_objective!r}")

    @property
    def tag(self) -> str:
        if self.kind == "mbr_topk":
            return f"mbr_topk(k={self.k})"
        if self.kind == "kmbr":
            return f"kmbr(k={self.k},seed={self.seed},max_iter={self.max_iter})"
        if self.kind == "oversample":
            return f"oversample(k={self.k},lambda={self.lam},prob_mode={self.prob_mode})"
        if self.kind == "oracle":
            return f"oracle[{self.oracle_objective}](k={self.k},lambda={self.lam})"
        return f"dmbr(k={self.k},lambda={self.lam})"


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple
    objective: float
    selector: str
    trace: Optional[tuple] = None

    def texts(self, cs: CandidateSet) -> list:
        return [cs.candidates[i].text for i in self.selected]


def check_k(k: int, n: int) -> None:
    if k < 1:
        raise ValidationError(f"k must be positive, got {k}")
    if k > n:
        raise ValidationError(f"k={k} exceeds pool size N={n}")


def instance_rng(seed: int, instance_id: str = "") -> np.random.Generator:
    """PCG64 stream keyed on (seed, instance_id); independent of run order."""
    digest = hashlib.blake2b(instance_id.encode("utf-8"), digest_size=8).digest()
    ss = np.random.SeedSequence([int(seed), int.from_bytes(digest, "little")])
    return np.random.Generator(np.random.PCG64(ss))
