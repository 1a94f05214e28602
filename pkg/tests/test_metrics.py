import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divmbr.metrics import (
    EvalReport,
    MetricError,
    distinct_n,
    evaluate_set,
    pairwise_bleu,
    pairwise_cosine,
    quality_stats,
)

sentences = st.lists(st.sampled_from(["a", "b", "c", "the", "cat", "sat"]), min_size=1, max_size=7).map(" ".join)


class TestPairwiseBleu:
    def test_identical(self):
        assert pairwise_bleu(["the cat sat"] * 4) == 1.0

    def test_disjoint(self):
        assert pairwise_bleu(["a b", "c d"]) == 0.0

    def test_two_directions(self):
        short_vs_long = math.exp(1 - 4 / 3)
        # 4-token hyp vs 3-token ref: p = 3/4, 3/4, 2/3, 1/2 and no brevity penalty
        long_vs_short = (3 / 4 * 3 / 4 * 2 / 3 * 1 / 2) ** 0.25
        got = pairwise_bleu(["the cat sat", "the cat sat down"])
        assert got == pytest.approx((short_vs_long + long_vs_short) / 2, abs=1e-12)

    def test_needs_two(self):
        with pytest.raises(MetricError):
            pairwise_bleu(["a"])

    @settings(max_examples=50, deadline=None)
    @given(texts=st.lists(sentences, min_size=2, max_size=5), data=st.data())
    def test_permutation_invariant(self, texts, data):
        perm = data.draw(st.permutations(texts))
        assert pairwise_bleu(perm) == pairwise_bleu(texts)


class TestDistinctN:
    def test_unigrams(self):
        assert distinct_n(["a b", "a c"], 1) == 0.75

    def test_bigrams(self):
        assert distinct_n(["a b", "a c"], 2) == 1.0

    def test_copies(self):
        assert distinct_n(["a b"] * 4, 1) == 0.25

    def test_no_ngrams(self):
        with pytest.raises(MetricError):
            distinct_n(["a", "b"], 2)

    @given(texts=st.lists(sentences, min_size=1, max_size=5), pick=st.integers(0, 4))
    def test_duplicate_member_decreases(self, texts, pick):
        dup = texts + [texts[pick % len(texts)]]
        assert distinct_n(dup, 1) < distinct_n(texts, 1)

    @given(texts=st.lists(sentences, min_size=1, max_size=5), n=st.integers(1, 3))
    def test_range(self, texts, n):
        try:
            v = distinct_n(texts, n)
        except MetricError:
            return
        assert 0 < v <= 1


class TestPairwiseCosine:
    def test_identical(self):
        assert pairwise_cosine([(1, 2), (1, 2), (1, 2)]) == pytest.approx(1.0, abs=1e-12)

    def test_three_vectors(self):
        assert abs(pairwise_cosine([(1, 0), (0, 1), (-1, 0)]) - (-1 / 3)) < 1e-12

    def test_orthogonal(self):
        assert pairwise_cosine([(1, 0), (0, 1)]) == 0.0

    def test_missing(self):
        with pytest.raises(MetricError):
            pairwise_cosine([(1, 0), None])

    def test_zero_norm(self):
        with pytest.raises(MetricError):
            pairwise_cosine([(1, 0), (0, 0)])

    @given(
        vecs=st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5)).filter(any), min_size=2, max_size=5),
        data=st.data(),
    )
    def test_permutation_invariant(self, vecs, data):
        perm = data.draw(st.permutations(vecs))
        assert pairwise_cosine(perm) == pairwise_cosine(vecs)


class TestQualityStats:
    def test_reference_itself(self):
        assert quality_stats(["the cat sat"], ["the cat sat"]) == {"min": 1.0, "mean": 1.0, "max": 1.0}

    def test_with_disjoint(self):
        assert quality_stats(["the cat sat", "dogs run"], ["the cat sat"]) == {"min": 0.0, "mean": 0.5, "max": 1.0}

    def test_hand_computed_set(self):
        refs = ["the cat sat on the mat", "a cat sat on a mat"]
        texts = ["the cat sat on the mat", "the cat sat", "a dog", "the cat sat on a rug"]
        # "the cat sat": all n-grams match ref 1, max order 3, closest ref length 6
        bp = math.exp(1 - 6 / 3)
        # "a dog": p1 = 1/2, p2 = (0+1)/(1+1), closest ref length 6
        a_dog = math.exp(1 - 6 / 2) * math.sqrt(1 / 2 * 1 / 2)
        # "the cat sat on a rug": only n-grams containing "rug" miss; p1 = 5/6,
        # smoothed p2 = (4+1)/(5+1), p3 = (3+1)/(4+1), p4 = (2+1)/(3+1), no brevity penalty
        mixed = (5 / 6 * 5 / 6 * 4 / 5 * 3 / 4) ** 0.25
        scores = [1.0, bp, a_dog, mixed]
        got = quality_stats(texts, refs)
        assert got["max"] == 1.0
        assert got["min"] == pytest.approx(min(scores), abs=1e-12)
        assert got["mean"] == pytest.approx(sum(scores) / 4, abs=1e-12)

    def test_unigram_f1_best_reference(self):
        got = quality_stats(["a b"], ["c d", "a c"], metric="unigram_f1")
        assert got["max"] == 0.5

    def test_needs_reference(self):
        with pytest.raises(MetricError):
            quality_stats(["a"], [])

    @given(texts=st.lists(sentences, min_size=1, max_size=5), refs=st.lists(sentences, min_size=1, max_size=2),
           extra=sentences)
    def test_order_and_oracle_monotone(self, texts, refs, extra):
        s = quality_stats(texts, refs)
        assert s["min"] <= s["mean"] + 1e-15 and s["mean"] <= s["max"] + 1e-15
        assert quality_stats(texts + [extra], refs)["max"] >= s["max"]


class TestEvaluate:
    def test_row_and_errors(self):
        row = evaluate_set("x", ["a b", "a c"], references=None, embeddings=[None, None], cosine=True)
        assert row["p_bleu"] is not None
        assert row["distinct"][1] == 0.75
        assert set(row["errors"]) == {"distinct_3", "p_cosine", "quality"}

    def test_corpus_mean_excludes_failures(self):
        rows = [
            evaluate_set("x", ["a b", "a c"], ["a b"]),
            evaluate_set("y", ["a", "b"], ["a"]),
        ]
        rep = EvalReport.from_rows(rows)
        assert rep.corpus["distinct_1"] == pytest.approx((0.75 + 1.0) / 2)
        assert rep.corpus["distinct_2"] == 1.0
        assert rep.excluded == {"distinct_2": 1, "distinct_3": 2}
