"""Diverse subset selection from candidate pools with MBR decoding and its variants."""

from .metrics import EvalReport, distinct_n, pairwise_bleu, pairwise_cosine, quality_stats
from .model import (
    Candidate,
    CandidateSet,
    SelectionResult,
    SelectorConfig,
    UtilityMatrix,
    ValidationError,
    make_candidate_set,
    validate_candidate_set,
    validate_utility_matrix,
)
from .selection import (
    dmbr_greedy,
    dmbr_objective,
    expected_utilities,
    kmbr_pam,
    kmedoidspp_init,
    mbr_topk,
    oracle_exhaustive,
    oversample_select,
    select,
)
from .utility import UtilityKind, build_utility_matrix, sentence_bleu, tokenize, unigram_f1

__version__ = "0.1.0"
