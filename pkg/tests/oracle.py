"""Exact-rational reference implementations of the score and settlement
formulas, mirroring the fixed-point functions' signatures.

Everything returns Fractions in true (unscaled) units; tests compare
`fixed_point_result` against `floor(oracle * SCALE)` or assert a
deviation of at most one 10^-4 unit.
"""

from __future__ import annotations

from fractions import Fraction
from math import floor
from typing import Sequence

from crowdrep.params import SCALE


def consensus_scores(entries: Sequence[tuple[int, int, int]]) -> tuple[Fraction, Fraction]:
    total = sum(rep for _, _, rep in entries)
    c = Fraction(sum(c * rep for c, _, rep in entries), total)
    q = Fraction(sum(q * rep for _, q, rep in entries), total)
    return c, q


def unweighted_scores(entries: Sequence[tuple[int, int, int]]) -> tuple[Fraction, Fraction]:
    n = len(entries)
    return (Fraction(sum(c for c, _, _ in entries), n),
            Fraction(sum(q for _, q, _ in entries), n))


def final_score(complete: Fraction, quality: Fraction,
                w_c: Fraction, w_q: Fraction) -> Fraction:
    return (w_q * quality + w_c * complete) / (w_q + w_c)


def evaluator_score(complete: Fraction, quality: Fraction, c_i: int, q_i: int) -> Fraction:
    return Fraction(200 - abs(quality - q_i) - abs(complete - c_i), 2)


def submission_rep_delta(final: Fraction, e_scores: Sequence[Fraction],
                         y: int, alpha: Fraction) -> Fraction:
    return (1 - alpha) * final + alpha * Fraction(sum(e_scores), y)


def volunteer_rep_delta(e_score: Fraction, is_outlier: bool, alpha: Fraction) -> Fraction:
    return -alpha * e_score if is_outlier else alpha * e_score


def reward_for(final: Fraction, escrow: int) -> Fraction:
    return final * escrow / 100


def fee_return_for(complete: Fraction, acceptance_fee: int) -> Fraction:
    return complete * acceptance_fee / 100


def exit_refund(deposit: int, reputation: Fraction, avg_reputation: Fraction) -> int:
    if avg_reputation == 0:
        return deposit
    return floor(deposit * min(Fraction(1), reputation / avg_reputation))


def mean(values: Sequence[int]) -> Fraction:
    return Fraction(sum(values), len(values))


def variance(values: Sequence[int]) -> Fraction:
    mu = mean(values)
    return sum((Fraction(v) - mu) ** 2 for v in values) / len(values)


def outlier_set(scores_c: Sequence[int], scores_q: Sequence[int], k: Fraction) -> set[int]:
    """Indices whose deviation exceeds k*sigma on either metric."""
    mu_c, mu_q = mean(scores_c), mean(scores_q)
    var_c, var_q = variance(scores_c), variance(scores_q)
    out = set()
    for i, (c, q) in enumerate(zip(scores_c, scores_q)):
        if (c - mu_c) ** 2 > k * k * var_c or (q - mu_q) ** 2 > k * k * var_q:
            out.add(i)
    return out


def as_scaled_floor(value: Fraction) -> int:
    return floor(value * SCALE)


def scaled(fp_value: int) -> Fraction:
    return Fraction(fp_value, SCALE)
