import math

import numpy as np
import pytest

from divmbr.model import (
    Candidate,
    CandidateSet,
    SelectorConfig,
    ValidationError,
    dedup_candidates,
    instance_rng,
    make_candidate_set,
    validate_candidate_set,
    validate_utility_matrix,
)


class TestValidateCandidateSet:
    def test_minimal(self):
        cs = validate_candidate_set(CandidateSet("a", (Candidate("a"),)))
        assert len(cs) == 1

    def test_inconsistent_embedding_dimension(self):
        cs = CandidateSet("x", (Candidate("a", embedding=(1, 2, 3)), Candidate("b", embedding=(1, 2, 3, 4))))
        with pytest.raises(ValidationError, match="inconsistent embedding dimension") as exc:
            validate_candidate_set(cs)
        assert exc.value.index == 1

    def test_empty_pool(self):
        with pytest.raises(ValidationError, match="empty"):
            validate_candidate_set(CandidateSet("x", ()))

    def test_nan_logprob_reports_index(self):
        cs = CandidateSet("x", (Candidate("a", -1.0), Candidate("b", math.nan)))
        with pytest.raises(ValidationError) as exc:
            validate_candidate_set(cs)
        assert exc.value.index == 1

    def test_positive_logprob_rejected(self):
        with pytest.raises(ValidationError):
            make_candidate_set("x", ["a"], logprobs=[0.5])

    def test_empty_text_is_legal(self):
        assert make_candidate_set("x", ["", "a"]).texts == ["", "a"]

    def test_line_endings_normalized(self):
        cs = make_candidate_set("x", ["a\r\nb", "c\rd"], references=["r\r\n"])
        assert cs.texts == ["a\nb", "c\nd"]
        assert cs.references == ("r\n",)

    def test_idempotent(self):
        cs = make_candidate_set("x", ["a\r\n", "b"], logprobs=[-1, -2], embeddings=[[1, 0], [0, 1]])
        assert validate_candidate_set(cs) == cs


class TestValidateUtilityMatrix:
    def test_all_ones(self):
        m = validate_utility_matrix(np.ones((3, 3)), 3)
        assert m.n == 3 and m.positive

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError, match="shape"):
            validate_utility_matrix(np.ones((3, 3)), 4)

    def test_nonfinite_position(self):
        vals = np.ones((3, 3))
        vals[1, 2] = np.nan
        with pytest.raises(ValidationError) as exc:
            validate_utility_matrix(vals, 3)
        assert exc.value.position == (1, 2)

    def test_records_nonpositive(self):
        vals = np.ones((2, 2))
        vals[0, 1] = 0.0
        assert not validate_utility_matrix(vals, 2).positive

    def test_widens_float32_and_freezes(self):
        m = validate_utility_matrix(np.ones((2, 2), dtype=np.float32), 2)
        assert m.values.dtype == np.float64
        with pytest.raises(ValueError):
            m.values[0, 0] = 2.0

    def test_idempotent(self):
        m = validate_utility_matrix(np.eye(3) + 0.5, 3)
        again = validate_utility_matrix(m, 3)
        assert np.array_equal(again.values, m.values) and again.positive == m.positive


class TestSelectorConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [{"kind": "beam"}, {"k": 0}, {"lam": -0.1}, {"max_iter": 0}, {"prob_mode": "softmax"}, {"seed": 2**64}],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValidationError):
            SelectorConfig(**kwargs)

    def test_defaults(self):
        cfg = SelectorConfig()
        assert (cfg.k, cfg.max_iter, cfg.seed, cfg.prob_mode) == (4, 300, 0, "normalized")


def test_dedup_keeps_first_occurrence():
    cs = make_candidate_set("x", ["a", "b", "a", "c", "b"])
    deduped, kept = dedup_candidates(cs)
    assert deduped.texts == ["a", "b", "c"]
    assert kept == [0, 1, 3]


def test_instance_rng_streams():
    a = instance_rng(7, "doc1").random(4)
    assert np.array_equal(a, instance_rng(7, "doc1").random(4))
    assert not np.array_equal(a, instance_rng(7, "doc2").random(4))
    assert not np.array_equal(a, instance_rng(8, "doc1").random(4))
