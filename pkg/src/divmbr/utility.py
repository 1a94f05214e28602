"""Utility functions u(h, y) and utility-matrix construction over a candidate pool.

Built-in utilities are lexical (sentence BLEU, unigram F1) or embedding based
(cosine, rescaled to [0, 1]). Any other metric, BERTScore included, enters as a
precomputed matrix.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .model import CandidateSet, UtilityMatrix, ValidationError, validate_utility_matrix

UTILITY_KINDS = ("sentence_bleu", "unigram_f1", "embedding_cosine", "precomputed")
TOKENIZER_MODES = ("whitespace", "punct_split")


@dataclass(frozen=True)
class Tokenizer:
    mode: str = "punct_split"
    lowercase: bool = True

    def __post_init__(self):
        if self.mode not in TOKENIZER_MODES:
            raise ValidationError(f"unknown tokenizer mode {self.mode!r}")

    def __call__(self, text: str) -> list:
        return tokenize(text, self.mode, self.lowercase)


DEFAULT_TOKENIZER = Tokenizer()


@dataclass(frozen=True)
class UtilityKind:
    kind: str = "sentence_bleu"
    tokenizer_mode: str = "punct_split"
    lowercase: bool = True

    def __post_init__(self):
        if self.kind not in UTILITY_KINDS:
            raise ValidationError(f"unknown utility kind {self.kind!r}")
        Tokenizer(self.tokenizer_mode, self.lowercase)

    @property
    def tokenizer(self) -> Tokenizer:
        return Tokenizer(self.tokenizer_mode, self.lowercase)


def _simple_lower(text: str) -> str:
    # str.lower() applies full case mapping; keep one code point per character
    return "".join(ch.lower()[0] for ch in text)


def tokenize(text: str, mode: str = "punct_split", lowercase: bool = True) -> list:
    """Split on Unicode whitespace; ``punct_split`` also isolates punctuation characters.

    >>> tokenize("Hello, world!")
    ['hello', ',', 'world', '!']
    """
    if lowercase:
        text = _simple_lower(text)
    if mode == "whitespace":
        return text.split()
    if mode != "punct_split":
        raise ValidationError(f"unknown tokenizer mode {mode!r}")
    tokens = []
    for chunk in text.split():
        buf = []
        for ch in chunk:
            if unicodedata.category(ch).startswith("P"):
                if buf:
                    tokens.append("".join(buf))
                    buf = []
                tokens.append(ch)
            else:
                buf.append(ch)
        if buf:
            tokens.append("".join(buf))
    return tokens


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def closest_ref_length(hyp_len: int, ref_lens: Sequence[int]) -> int:
    return min(ref_lens, key=lambda r: (abs(r - hyp_len), r))


def bleu_from_stats(hyp_len: int, ref_len: int, matches: Sequence[int], max_n: int = 4) -> float:
    """BLEU from clipped match counts per order (``matches[0]`` is unigrams).

    Orders above ``min(max_n, hyp_len)`` are ignored; orders >= 2 get add-one
    smoothing on both numerator and denominator.
    """
    order = min(max_n, hyp_len)
    if order == 0 or matches[0] == 0:
        return 0.0
    log_sum = math.log(matches[0] / hyp_len)
    for n in range(2, order + 1):
        total = hyp_len - n + 1
        log_sum += math.log((matches[n - 1] + 1) / (total + 1))
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_sum / order)


def sentence_bleu(hyp: Sequence[str], refs: Sequence[Sequence[str]], max_n: int = 4) -> float:
    """Smoothed sentence-level BLEU of a token sequence against one or more references."""
    if len(refs) == 0:
        raise ValidationError("sentence_bleu needs at least one reference")
    if max_n < 1:
        raise ValidationError(f"max_n must be >= 1, got {max_n}")
    hyp_len = len(hyp)
    if hyp_len == 0:
        return 0.0
    order = min(max_n, hyp_len)
    matches = []
    for n in range(1, order + 1):
        hyp_counts = ngrams(hyp, n)
        max_ref = Counter()
        for ref in refs:
            for g, c in ngrams(ref, n).items():
                if c > max_ref[g]:
                    max_ref[g] = c
        matches.append(sum(min(c, max_ref[g]) for g, c in hyp_counts.items()))
    ref_len = closest_ref_length(hyp_len, [len(r) for r in refs])
    return bleu_from_stats(hyp_len, ref_len, matches, max_n)


def unigram_f1(hyp: Sequence[str], ref: Sequence[str]) -> float:
    if not hyp and not ref:
        return 1.0
    if not hyp or not ref:
        return 0.0
    hc, rc = Counter(hyp), Counter(ref)
    overlap = sum(min(c, rc[g]) for g, c in hc.items())
    return 2.0 * overlap / (len(hyp) + len(ref))


def embedding_cosine(a, b, index_a: Optional[int] = None, index_b: Optional[int] = None) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"embedding dimensions differ: {a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0:
        raise ValidationError(f"zero-norm embedding (candidate {index_a})", index=index_a)
    if nb == 0.0:
        raise ValidationError(f"zero-norm embedding (candidate {index_b})", index=index_b)
    return float(min(1.0, max(-1.0, float(np.dot(a, b)) / (na * nb))))


def _clipped_matches(token_lists: Sequence[Sequence[str]], n: int) -> np.ndarray:
    """Pairwise sum_g min(count_i[g], count_j[g]) for order-n n-grams, exact integers."""
    vocab = {}
    rows, cols, vals = [], [], []
    for i, toks in enumerate(token_lists):
        for g, c in ngrams(toks, n).items():
            rows.append(i)
            cols.append(vocab.setdefault(g, len(vocab)))
            vals.append(c)
    size = len(token_lists)
    out = np.zeros((size, size), dtype=np.int64)
    if not vocab:
        return out
    counts = sp.csr_matrix(
        (np.asarray(vals, dtype=np.int64), (rows, cols)), shape=(size, len(vocab))
    )
    # min(a, b) = sum_t [a >= t][b >= t]
    for t in range(1, int(counts.max()) + 1):
        ind = (counts >= t).astype(np.int64)
        out += (ind @ ind.T).toarray()
    return out


def bleu_matrix(token_lists: Sequence[Sequence[str]], max_n: int = 4) -> np.ndarray:
    """Entry (i, j) = sentence_bleu(token_lists[i], [token_lists[j]])."""
    size = len(token_lists)
    lens = [len(t) for t in token_lists]
    order = min(max_n, max(lens, default=0))
    matches = [_clipped_matches(token_lists, n) for n in range(1, order + 1)]
    out = np.zeros((size, size), dtype=np.float64)
    for i in range(size):
        li = lens[i]
        if li == 0:
            continue
        eff = min(max_n, li)
        rows = [m[i] for m in matches[:eff]]
        for j in range(size):
            out[i, j] = bleu_from_stats(li, lens[j], [int(r[j]) for r in rows], max_n)
    return out


def unigram_f1_matrix(token_lists: Sequence[Sequence[str]]) -> np.ndarray:
    size = len(token_lists)
    lens = np.array([len(t) for t in token_lists], dtype=np.float64)
    overlap = _clipped_matches(token_lists, 1).astype(np.float64)
    denom = lens[:, None] + lens[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = 2.0 * overlap / denom
    out[denom == 0] = 1.0
    return out.reshape(size, size)


def cosine_matrix(cs: CandidateSet) -> np.ndarray:
    """Raw cosine similarity between candidate embeddings, symmetric with unit diagonal."""
    missing = [i for i, c in enumerate(cs.candidates) if c.embedding is None]
    if missing:
        raise ValidationError(f"candidate {missing[0]}: missing embedding", index=missing[0])
    emb = np.array([c.embedding for c in cs.candidates], dtype=np.float64)
    norms = np.linalg.norm(emb, axis=1)
    zero = np.flatnonzero(norms == 0)
    if len(zero):
        raise ValidationError(f"candidate {int(zero[0])}: zero-norm embedding", index=int(zero[0]))
    unit = emb / norms[:, None]
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    cos = np.triu(cos, 1)
    cos = cos + cos.T
    np.fill_diagonal(cos, 1.0)
    return cos


def build_utility_matrix(
    cs: CandidateSet,
    kind="sentence_bleu",
    precomputed=None,
) -> UtilityMatrix:
    """Materialize u over all ordered candidate pairs, diagonal included."""
    if isinstance(kind, str):
        kind = UtilityKind(kind)
    n = len(cs)
    if kind.kind == "precomputed":
        if precomputed is None:
            raise ValidationError(f"instance {cs.instance_id!r}: precomputed utility matrix missing")
        return validate_utility_matrix(precomputed, n)
    if kind.kind == "embedding_cosine":
        return validate_utility_matrix((cosine_matrix(cs) + 1.0) / 2.0, n)
    toks = [kind.tokenizer(c.text) for c in cs.candidates]
    if kind.kind == "sentence_bleu":
        return validate_utility_matrix(bleu_matrix(toks), n)
    return validate_utility_matrix(unigram_f1_matrix(toks), n)
