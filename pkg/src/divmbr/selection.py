"""Subset selectors over a utility matrix.

All selectors return indices into the original candidate order. Ties always go
to the smallest index or the lexicographically smallest set.
"""

from __future__ import annotations

import itertools
import math
from typing import Optional, Sequence

import numpy as np

from .model import (
    CandidateSet,
    SelectionResult,
    SelectorConfig,
    UtilityMatrix,
    ValidationError,
    check_k,
    instance_rng,
)

ORACLE_BUDGET = 10**6


class BudgetExceeded(ValueError):
    def __init__(self, n_subsets: int):
        super().__init__(f"exhaustive search over C(N, k) = {n_subsets} subsets exceeds {ORACLE_BUDGET}")
        self.n_subsets = n_subsets


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, UtilityMatrix) else np.asarray(u, dtype=np.float64)


def _index_set(h: Sequence[int], n: int) -> list:
    idx = [int(i) for i in h]
    if not idx:
        raise ValidationError("index set must be nonempty")
    if len(set(idx)) != len(idx):
        raise ValidationError(f"duplicate indices in {idx}")
    for i in idx:
        if not 0 <= i < n:
            raise ValidationError(f"index {i} out of range for N={n}")
    return idx


def expected_utilities(u) -> np.ndarray:
    """Monte Carlo expected utility of each candidate against the whole pool."""
    vals = _values(u)
    return vals.sum(axis=1) / vals.shape[1]


def mbr_topk(u, k: int) -> SelectionResult:
    eu = expected_utilities(u)
    check_k(k, len(eu))
    order = sorted(range(len(eu)), key=lambda i: (-eu[i], i))[:k]
    return SelectionResult(
        tuple(order), float(sum(eu[i] for i in order)), f"mbr_topk(k={k})"
    )


def pairwise_penalty(u, h: Sequence[int]) -> float:
    """Sum of u[i][j] over ordered pairs of distinct members of h."""
    vals = _values(u)
    total = 0.0
    for i in h:
        for j in h:
            if i != j:
                total += float(vals[i, j])
    return total


def dmbr_objective(u, h: Sequence[int], lam: float, k: int) -> float:
    """Expected-utility sum of h minus (lam / k) times its within-set pairwise utility."""
    vals = _values(u)
    idx = _index_set(h, vals.shape[0])
    eu = expected_utilities(vals)
    quality = sum(float(eu[i]) for i in idx)
    if lam == 0:
        return quality
    return float(quality - lam / k * pairwise_penalty(vals, idx))


def _greedy(quality: np.ndarray, vals: np.ndarray, lam: float, k: int) -> tuple:
    n = len(quality)
    check_k(k, n)
    penalty = np.zeros(n)
    available = np.ones(n, dtype=bool)
    selected, gains = [], []
    scale = lam / k
    for _ in range(k):
        gain = quality - scale * penalty
        gain = np.where(available, gain, -np.inf)
        best = int(np.argmax(gain))
        selected.append(best)
        gains.append(float(gain[best]))
        available[best] = False
        penalty += vals[:, best] + vals[best, :]
    return selected, gains


def dmbr_greedy(u, cfg: SelectorConfig) -> SelectionResult:
    """Greedy maximization of the DMBR objective; ``trace`` holds the k marginal gains."""
    vals = _values(u)
    selected, gains = _greedy(expected_utilities(vals), vals, cfg.lam, cfg.k)
    obj = dmbr_objective(vals, selected, cfg.lam, cfg.k)
    return SelectionResult(tuple(selected), obj, cfg.tag, tuple(gains))


def kmbr_distance(u) -> np.ndarray:
    """Symmetric dissimilarity 1 - min(u[i][j], u[j][i]), clamped to [0, 1]."""
    vals = _values(u)
    return np.clip(1.0 - np.minimum(vals, vals.T), 0.0, 1.0)


def total_distance(dist: np.ndarray, medoids: Sequence[int]) -> float:
    """Sum over every pool member of its distance to the nearest medoid."""
    return float(dist[list(medoids)].min(axis=0).sum())


def kmedoidspp_init(u, k: int, seed=0, instance_id: str = "") -> list:
    """k-medoids++ seeding. ``seed`` may be an int or a numpy Generator.

    First medoid uniform; each next one drawn with probability proportional to
    the squared distance to its nearest chosen medoid. When every remaining
    weight is zero the smallest unchosen index is taken.
    """
    dist = kmbr_distance(u)
    n = dist.shape[0]
    check_k(k, n)
    rng = seed if isinstance(seed, np.random.Generator) else instance_rng(seed, instance_id)
    chosen = [int(rng.integers(n))]
    nearest = dist[chosen[0]].copy()
    is_chosen = np.zeros(n, dtype=bool)
    is_chosen[chosen[0]] = True
    while len(chosen) < k:
        weights = np.where(is_chosen, 0.0, nearest**2)
        cum = np.cumsum(weights)
        total = cum[-1]
        if total > 0:
            nxt = int(np.searchsorted(cum, rng.random() * total, side="right"))
            nxt = min(nxt, n - 1)
            if is_chosen[nxt] or weights[nxt] == 0:
                # rounding at the top of the cumulative sum
                nxt = int(np.flatnonzero(weights > 0)[-1])
        else:
            nxt = int(np.flatnonzero(~is_chosen)[0])
        chosen.append(nxt)
        is_chosen[nxt] = True
        nearest = np.minimum(nearest, dist[nxt])
    return chosen


def pam_swap(dist: np.ndarray, medoids: Sequence[int], max_iter: int = 300) -> tuple:
    """Steepest-descent PAM swap phase.

    Each iteration applies the single (medoid, non-medoid) swap with the lowest
    resulting cost, ties going to the lexicographically smallest medoid set.
    Returns ``(medoids, costs, converged)`` where ``costs[0]`` is the starting
    cost and each later entry the cost after one accepted swap.
    """
    n = dist.shape[0]
    current = sorted(int(m) for m in medoids)
    cost = total_distance(dist, current)
    costs = [cost]
    for _ in range(max_iter):
        rows = dist[current]
        best_cost, best_set = math.inf, None
        non_medoids = np.setdiff1d(np.arange(n), current)
        if len(non_medoids) == 0:
            return current, costs, True
        for pos, m in enumerate(current):
            others = np.delete(rows, pos, axis=0)
            without = others.min(axis=0) if len(others) else np.full(n, np.inf)
            swap_costs = np.minimum(dist[non_medoids], without[None, :]).sum(axis=1)
            c_min = swap_costs.min()
            if c_min > best_cost:
                continue
            for o in non_medoids[swap_costs == c_min]:
                cand = sorted([x for x in current if x != m] + [int(o)])
                if c_min < best_cost or cand < best_set:
                    best_cost, best_set = float(c_min), cand
        new_cost = total_distance(dist, best_set)
        if not new_cost < cost:
            return current, costs, True
        current, cost = best_set, new_cost
        costs.append(cost)
    # budget exhausted: report whether a further improving swap exists
    converged = _is_local_optimum(dist, current, cost)
    return current, costs, converged


def _is_local_optimum(dist: np.ndarray, medoids: list, cost: float) -> bool:
    n = dist.shape[0]
    for m in medoids:
        for o in range(n):
            if o in medoids:
                continue
            cand = [x for x in medoids if x != m] + [o]
            if total_distance(dist, cand) < cost:
                return False
    return True


def kmbr_pam(u, cfg: SelectorConfig, instance_id: str = "", init: Optional[Sequence[int]] = None) -> SelectionResult:
    """k-medoids selection: PAM from a k-medoids++ start (or ``init``).

    The objective is the total distance of the pool to its nearest medoid;
    ``trace`` holds the cost decrease of each accepted swap.
    """
    dist = kmbr_distance(u)
    check_k(cfg.k, dist.shape[0])
    if init is None:
        init = kmedoidspp_init(u, cfg.k, cfg.seed, instance_id)
    elif len(set(init)) != cfg.k:
        raise ValidationError(f"init must hold {cfg.k} distinct indices")
    medoids, costs, _ = pam_swap(dist, init, cfg.max_iter)
    deltas = tuple(a - b for a, b in zip(costs, costs[1:]))
    return SelectionResult(tuple(medoids), costs[-1], cfg.tag, deltas)


def kmbr_objective(u, h: Sequence[int]) -> float:
    dist = kmbr_distance(u)
    return total_distance(dist, _index_set(h, dist.shape[0]))


def oversample_probabilities(cs: CandidateSet, prob_mode: str = "normalized") -> np.ndarray:
    for i, c in enumerate(cs.candidates):
        if c.logprob is None:
            raise ValidationError(f"candidate {i}: missing logprob", index=i)
    lp = np.array([c.logprob for c in cs.candidates], dtype=np.float64)
    if prob_mode == "raw":
        return np.exp(lp)
    if prob_mode != "normalized":
        raise ValidationError(f"unknown prob_mode {prob_mode!r}")
    p = np.exp(lp - lp.max())
    return p / p.sum()


def oversample_objective(probs, u, h: Sequence[int], lam: float, k: int) -> float:
    vals = _values(u)
    idx = _index_set(h, vals.shape[0])
    quality = sum(float(probs[i]) for i in idx)
    if lam == 0:
        return quality
    return float(quality - lam / k * pairwise_penalty(vals, idx))


def oversample_select(cs: CandidateSet, u, cfg: SelectorConfig) -> SelectionResult:
    """Greedy selection maximizing sequence probability minus the pairwise penalty."""
    vals = _values(u)
    probs = oversample_probabilities(cs, cfg.prob_mode)
    selected, gains = _greedy(probs, vals, cfg.lam, cfg.k)
    obj = oversample_objective(probs, vals, selected, cfg.lam, cfg.k)
    return SelectionResult(tuple(selected), obj, cfg.tag, tuple(gains))


def _subset_chunks(n: int, k: int, chunk: int):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.intp).reshape(len(block), k)


def oracle_exhaustive(
    objective: str,
    u,
    k: int,
    lam: float = 0.0,
    probs: Optional[np.ndarray] = None,
) -> SelectionResult:
    """Brute force over all k-subsets in lexicographic order.

    ``dmbr`` and ``oversample`` are maximized, ``kmbr`` (total distance) is
    minimized. The first best subset wins.
    """
    vals = _values(u)
    n = vals.shape[0]
    check_k(k, n)
    n_subsets = math.comb(n, k)
    if n_subsets > ORACLE_BUDGET:
        raise BudgetExceeded(n_subsets)
    if objective == "kmbr":
        dist = kmbr_distance(vals)
    elif objective == "dmbr":
        quality = expected_utilities(vals)
    elif objective == "oversample":
        if probs is None:
            raise ValidationError("oversample oracle needs candidate probabilities")
        quality = np.asarray(probs, dtype=np.float64)
    else:
        raise ValidationError(f"unknown oracle objective {objective!r}")
    sym = vals + vals.T
    pairs = list(itertools.combinations(range(k), 2))
    best_val, best_set = -math.inf, None
    chunk = max(1, 2**21 // (k * n))
    for subs in _subset_chunks(n, k, chunk):
        if objective == "kmbr":
            # negated so that one argmax serves both directions
            score = -dist[subs].min(axis=1).sum(axis=1)
        else:
            score = quality[subs].sum(axis=1)
            if lam and pairs:
                pen = np.zeros(len(subs))
                for a, b in pairs:
                    pen += sym[subs[:, a], subs[:, b]]
                score = score - lam / k * pen
        i = int(np.argmax(score))
        if score[i] > best_val:
            best_val, best_set = float(score[i]), tuple(int(x) for x in subs[i])
    if objective == "kmbr":
        obj = total_distance(dist, best_set)
    elif objective == "dmbr":
        obj = dmbr_objective(vals, best_set, lam, k)
    else:
        obj = oversample_objective(quality, vals, best_set, lam, k)
    return SelectionResult(best_set, obj, f"oracle[{objective}](k={k},lambda={lam})")


def select(cs: CandidateSet, u: UtilityMatrix, cfg: SelectorConfig) -> SelectionResult:
    """Dispatch on ``cfg.kind``."""
    check_k(cfg.k, len(cs))
    if u.n != len(cs):
        raise ValidationError(f"utility matrix is {u.n}x{u.n} but pool has {len(cs)} candidates")
    if cfg.kind == "mbr_topk":
        return mbr_topk(u, cfg.k)
    if cfg.kind == "dmbr":
        return dmbr_greedy(u, cfg)
    if cfg.kind == "kmbr":
        return kmbr_pam(u, cfg, cs.instance_id)
    if cfg.kind == "oversample":
        return oversample_select(cs, u, cfg)
    probs = None
    if cfg.oracle_objective == "oversample":
        probs = oversample_probabilities(cs, cfg.prob_mode)
    return oracle_exhaustive(cfg.oracle_objective, u, cfg.k, cfg.lam, probs)
