"""Quality and diversity metrics for a selected output set."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from .utility import DEFAULT_TOKENIZER, Tokenizer, embedding_cosine, ngrams, sentence_bleu, unigram_f1

QUALITY_METRICS = ("sentence_bleu", "unigram_f1")
DISTINCT_ORDERS = (1, 2, 3)


class MetricError(ValueError):
    pass


def pairwise_bleu(texts: Sequence[str], tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> float:
    """Mean sentence BLEU over ordered pairs (i, j), i != j. Lower is more diverse."""
    if len(texts) < 2:
        raise MetricError(f"pairwise BLEU needs at least 2 outputs, got {len(texts)}")
    toks = [tokenizer(t) for t in texts]
    scores = [
        sentence_bleu(toks[i], [toks[j]])
        for i in range(len(toks))
        for j in range(len(toks))
        if i != j
    ]
    return math.fsum(scores) / len(scores)


def distinct_n(texts: Sequence[str], n: int, tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> float:
    """Unique n-grams over total n-grams, pooled across the whole set."""
    if not texts:
        raise MetricError("distinct-n needs at least one output")
    unique = set()
    total = 0
    for t in texts:
        counts = ngrams(tokenizer(t), n)
        unique.update(counts)
        total += sum(counts.values())
    if total == 0:
        raise MetricError(f"no {n}-grams in the set")
    return len(unique) / total


def pairwise_cosine(embeddings) -> float:
    """Mean cosine similarity over unordered pairs of embedding vectors."""
    if embeddings is None or any(e is None for e in embeddings):
        raise MetricError("pairwise cosine needs an embedding for every output")
    if len(embeddings) < 2:
        raise MetricError(f"pairwise cosine needs at least 2 outputs, got {len(embeddings)}")
    try:
        sims = [
            embedding_cosine(embeddings[i], embeddings[j], i, j)
            for i, j in combinations(range(len(embeddings)), 2)
        ]
    except ValueError as exc:
        raise MetricError(str(exc)) from exc
    return math.fsum(sims) / len(sims)


def quality_stats(
    texts: Sequence[str],
    references: Sequence[str],
    metric: str = "sentence_bleu",
    tokenizer: Tokenizer = DEFAULT_TOKENIZER,
) -> dict:
    """min / mean / max of per-output quality against the references.

    BLEU scores each output against all references at once; unigram F1 takes
    the best single reference. ``max`` is the oracle score of the set.
    """
    if not references:
        raise MetricError("quality statistics need at least one reference")
    if not texts:
        raise MetricError("quality statistics need at least one output")
    refs = [tokenizer(r) for r in references]
    if metric == "sentence_bleu":
        scores = [sentence_bleu(tokenizer(t), refs) for t in texts]
    elif metric == "unigram_f1":
        scores = [max(unigram_f1(tokenizer(t), r) for r in refs) for t in texts]
    else:
        raise MetricError(f"unknown quality metric {metric!r}")
    return {"min": min(scores), "mean": math.fsum(scores) / len(scores), "max": max(scores)}


def evaluate_set(
    instance_id: str,
    texts: Sequence[str],
    references: Optional[Sequence[str]] = None,
    embeddings=None,
    quality_metric: Optional[str] = "sentence_bleu",
    cosine: bool = False,
    tokenizer: Tokenizer = DEFAULT_TOKENIZER,
    orders: Sequence[int] = DISTINCT_ORDERS,
) -> dict:
    """Score one selected set. Failing metrics are recorded under ``errors``."""
    row = {"instance_id": instance_id, "p_bleu": None, "distinct": {}, "p_cosine": None, "quality": {}}
    errors = {}
    try:
        row["p_bleu"] = pairwise_bleu(texts, tokenizer)
    except MetricError as exc:
        errors["p_bleu"] = str(exc)
    for n in orders:
        try:
            row["distinct"][n] = distinct_n(texts, n, tokenizer)
        except MetricError as exc:
            errors[f"distinct_{n}"] = str(exc)
    if cosine:
        try:
            row["p_cosine"] = pairwise_cosine(embeddings)
        except MetricError as exc:
            errors["p_cosine"] = str(exc)
    if quality_metric:
        try:
            row["quality"][quality_metric] = quality_stats(texts, references or [], quality_metric, tokenizer)
        except MetricError as exc:
            errors["quality"] = str(exc)
    row["errors"] = errors
    return row


def _flatten(row: dict) -> dict:
    flat = {}
    if row.get("p_bleu") is not None:
        flat["p_bleu"] = row["p_bleu"]
    for n, v in row.get("distinct", {}).items():
        flat[f"distinct_{n}"] = v
    if row.get("p_cosine") is not None:
        flat["p_cosine"] = row["p_cosine"]
    for metric, stats in row.get("quality", {}).items():
        for stat, v in stats.items():
            flat[f"{stat}_{metric}"] = v
    return flat


@dataclass
class EvalReport:
    per_instance: list
    corpus: dict = field(default_factory=dict)
    # instances excluded from each metric's corpus mean
    excluded: dict = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: Sequence[dict]) -> "EvalReport":
        """Unweighted corpus means (exactly rounded sums) over instances that produced each metric."""
        values = {}
        excluded = {}
        for row in rows:
            for key, v in _flatten(row).items():
                values.setdefault(key, []).append(v)
            for key in row.get("errors", {}):
                excluded[key] = excluded.get(key, 0) + 1
        corpus = {key: math.fsum(vs) / len(vs) for key, vs in sorted(values.items())}
        return cls(list(rows), corpus, dict(sorted(excluded.items())))

    def to_dict(self) -> dict:
        per = []
        for row in self.per_instance:
            out = dict(row)
            out["distinct"] = {str(n): v for n, v in row["distinct"].items()}
            per.append(out)
        return {"per_instance": per, "corpus": self.corpus, "excluded": self.excluded}


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    return float(spearmanr(np.asarray(x), np.asarray(y)).statistic)
