"""Score aggregation and reputation update arithmetic.

Pure functions over scaled integers (see params.SCALE). Numerators are
accumulated exactly in arbitrary-precision integers and every division
floors once, at the very end, so each result is the exact mathematical
value rounded down to the 10^-4 grid. A fraction-based oracle with the
same signatures lives in the test suite.

Conventions:
  - raw per-evaluator scores c, q: plain ints in [1, 100]
  - reputations r: scaled ints >= 0
  - aggregated scores, weights, alpha: scaled ints
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .errors import (
    BadWeights,
    EmptyConsensus,
    OutOfRange,
    QuotaUnmet,
    ZeroTotalReputation,
)
from .params import SCALE, SCORE_MAX, SCORE_MIN


def _check_raw_score(value: int, label: str) -> None:
    if not (SCORE_MIN <= value <= SCORE_MAX):
        raise OutOfRange(f"{label} must lie in [{SCORE_MIN}, {SCORE_MAX}], got {value}")


def consensus_scores(entries: Sequence[tuple[int, int, int]]) -> tuple[int, int]:
    """Reputation-weighted mean completeness and quality.

    `entries` holds (c, q, reputation) for each in-consensus evaluator.
    Raises ZeroTotalReputation when every weight is zero; callers that
    want the unweighted fallback catch it (the weighted mean is
    undefined there).
    """
    if not entries:
        raise EmptyConsensus("no in-consensus evaluators")
    total_rep = 0
    c_num = 0
    q_num = 0
    for c, q, rep in entries:
        _check_raw_score(c, "completeness score")
        _check_raw_score(q, "quality score")
        if rep < 0:
            raise OutOfRange("reputation must be non-negative")
        total_rep += rep
        c_num += c * rep
        q_num += q * rep
    if total_rep == 0:
        raise ZeroTotalReputation("all in-consensus reputations are zero")
    return (c_num * SCALE) // total_rep, (q_num * SCALE) // total_rep


def unweighted_scores(entries: Sequence[tuple[int, int, int]]) -> tuple[int, int]:
    """Plain-mean fallback used when the weighted form is undefined."""
    if not entries:
        raise EmptyConsensus("no in-consensus evaluators")
    n = len(entries)
    c_sum = sum(c for c, _, _ in entries)
    q_sum = sum(q for _, q, _ in entries)
    return (c_sum * SCALE) // n, (q_sum * SCALE) // n


def final_score(complete_score: int, quality_score: int, w_c: int, w_q: int) -> int:
    """Weighted blend of the two aggregated criteria (scaled in, scaled out)."""
    if w_c < 0 or w_q < 0 or w_c + w_q != SCALE:
        raise BadWeights(f"weights must be non-negative and sum to 1, got {w_c}+{w_q}")
    for value in (complete_score, quality_score):
        if not (SCORE_MIN * SCALE <= value <= SCORE_MAX * SCALE):
            raise OutOfRange("aggregated scores must lie in [1, 100] scaled")
    return (w_q * quality_score + w_c * complete_score) // SCALE


def evaluator_score(complete_score: int, quality_score: int, c_i: int, q_i: int) -> int:
    """Closeness of one evaluator's scores to the consensus scores.

    100 for an exact match, dropping half a point per unit of absolute
    deviation on either metric; scaled result in [1, 100].
    """
    for value in (complete_score, quality_score):
        if not (SCORE_MIN * SCALE <= value <= SCORE_MAX * SCALE):
            raise OutOfRange("aggregated scores must lie in [1, 100] scaled")
    _check_raw_score(c_i, "completeness score")
    _check_raw_score(q_i, "quality score")
    dev = abs(quality_score - q_i * SCALE) + abs(complete_score - c_i * SCALE)
    return (200 * SCALE - dev) // 2


def submission_rep_delta(final: int, e_scores: Iterable[int], y: int, alpha: int) -> int:
    """Reputation gained for a settled submission: the final score
    blended with the worker's performance on the y evaluations owed."""
    scores = list(e_scores)
    if y <= 0:
        raise QuotaUnmet("evaluation quota must be positive")
    if len(scores) != y:
        raise QuotaUnmet(f"need exactly {y} completed evaluations, have {len(scores)}")
    if not (0 <= alpha <= SCALE):
        raise OutOfRange("alpha must lie in [0, 1] scaled")
    numerator = (SCALE - alpha) * final * y + alpha * sum(scores)
    return numerator // (SCALE * y)


def volunteer_rep_delta(e_score: int, is_outlier: bool, alpha: int) -> int:
    """Signed reputation change for a voluntary evaluation: +alpha*eScore
    in consensus, -alpha*eScore when tagged an outlier."""
    if not (SCORE_MIN * SCALE <= e_score <= SCORE_MAX * SCALE):
        raise OutOfRange("eScore must lie in [1, 100] scaled")
    if not (0 <= alpha <= SCALE):
        raise OutOfRange("alpha must lie in [0, 1] scaled")
    magnitude = (alpha * e_score) // SCALE
    return -magnitude if is_outlier else magnitude


def reward_for(final: int, escrow: int) -> int:
    """Worker payout: the final score as a percentage of the escrow."""
    if not (SCORE_MIN * SCALE <= final <= SCORE_MAX * SCALE):
        raise OutOfRange("final score must lie in [1, 100] scaled")
    if escrow < 0:
        raise OutOfRange("escrow must be non-negative")
    return (final * escrow) // (100 * SCALE)


def fee_return_for(complete_score: int, acceptance_fee: int) -> int:
    """Acceptance fee refunded pro-rata to completeness."""
    if not (SCORE_MIN * SCALE <= complete_score <= SCORE_MAX * SCALE):
        raise OutOfRange("completeness score must lie in [1, 100] scaled")
    if acceptance_fee < 0:
        raise OutOfRange("acceptance fee must be non-negative")
    return (complete_score * acceptance_fee) // (100 * SCALE)
