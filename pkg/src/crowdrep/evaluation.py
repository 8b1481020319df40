"""Evaluator eligibility, reputation-slot selection, score collection,
outlier-removal consensus, and reassignment rounds.

Outlier detection works on the raw per-metric scores with exact integer
arithmetic: evaluator i is an outlier iff |score_i - mean| > k * sigma
on either metric, compared in squared form so no rounding ever enters
the decision. The consensus result is a pure function of the score
sheet and k; reputations only weight the aggregate scores afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Sequence

from . import reputation as repmath
from .accounts import stats, update_reputation
from .crypto import keccak256
from .errors import (
    BelowThreshold,
    DuplicateScore,
    IncompleteSheet,
    InsufficientEvaluators,
    MaxRoundsExceeded,
    NotAWorker,
    NotSelected,
    OutOfRange,
    SerializationFailure,
    ZeroTotalReputation,
)
from .gasmodel import evaluation_submit_kind
from .params import SCALE, SCORE_MAX, SCORE_MIN
from .submission import revealed_for_round

if TYPE_CHECKING:
    from .state import PlatformState
    from .submission import Submission


@dataclass
class EvaluatorPool:
    submission_id: int
    round: int
    eligible: list[tuple[bytes, int]]        # (worker, reputation at assignment), rep-sorted
    slots: list[list[bytes]]                 # empty when slot selection is disabled
    selected: list[bytes]
    obligated: dict[bytes, bool]             # selected -> had a pending submission of their own
    excluded: tuple[bytes, ...]
    seed: bytes

    def to_canon(self) -> dict[str, Any]:
        return {
            "submission_id": self.submission_id,
            "round": self.round,
            "eligible": [[w, r] for w, r in self.eligible],
            "slots": [list(slot) for slot in self.slots],
            "selected": list(self.selected),
            "obligated": {w: flag for w, flag in self.obligated.items()},
            "excluded": list(self.excluded),
            "seed": self.seed,
        }


@dataclass
class ScoreSheet:
    submission_id: int
    round: int
    entries: list[tuple[bytes, int, int, bytes]] = field(default_factory=list)
    # (evaluator, completeness, quality, review content address)

    def scored(self) -> set[bytes]:
        return {entry[0] for entry in self.entries}

    def to_canon(self) -> dict[str, Any]:
        return {
            "submission_id": self.submission_id,
            "round": self.round,
            "entries": [[e, c, q, ref] for e, c, q, ref in self.entries],
        }


@dataclass(frozen=True)
class ConsensusResult:
    submission_id: int
    round: int
    c_mean: int          # scaled
    q_mean: int
    c_std: int           # scaled population standard deviation
    q_std: int
    outliers: frozenset[bytes]
    in_consensus: frozenset[bytes]
    reached: bool
    forced: bool = False

    def to_canon(self) -> dict[str, Any]:
        return {
            "submission_id": self.submission_id,
            "round": self.round,
            "c_mean": self.c_mean,
            "q_mean": self.q_mean,
            "c_std": self.c_std,
            "q_std": self.q_std,
            "outliers": sorted(self.outliers),
            "in_consensus": sorted(self.in_consensus),
            "reached": self.reached,
            "forced": self.forced,
        }


@dataclass(frozen=True)
class FinalScore:
    submission_id: int
    complete_score: int   # scaled
    quality_score: int
    final_score: int
    round: int
    forced: bool
    unweighted_fallback: bool

    def to_canon(self) -> dict[str, Any]:
        return {
            "submission_id": self.submission_id,
            "complete_score": self.complete_score,
            "quality_score": self.quality_score,
            "final_score": self.final_score,
            "round": self.round,
            "forced": self.forced,
            "unweighted_fallback": self.unweighted_fallback,
        }


# ---------------------------------------------------------------- consensus

def _scaled_std(n: int, total: int, total_sq: int) -> int:
    # floor(SCALE * sigma) via isqrt; sigma^2 = (n*total_sq - total^2) / n^2
    variance_num = n * total_sq - total * total
    return math.isqrt(SCALE * SCALE * variance_num // (n * n))


def run_consensus(sheet: ScoreSheet, k: int | None,
                  expected_size: int | None = None) -> ConsensusResult:
    """Tag outliers per metric and decide whether a strict majority of
    the panel survives. Independent of entry order and reputations."""
    entries = sheet.entries
    n = len(entries)
    if n == 0 or (expected_size is not None and n < expected_size):
        raise IncompleteSheet(f"sheet has {n} of {expected_size} scores")
    c_total = sum(c for _, c, _, _ in entries)
    q_total = sum(q for _, _, q, _ in entries)
    c_sq = sum(c * c for _, c, _, _ in entries)
    q_sq = sum(q * q for _, _, q, _ in entries)
    outliers = set()
    if k is not None:
        c_var_num = n * c_sq - c_total * c_total    # n^2 * variance
        q_var_num = n * q_sq - q_total * q_total
        k_sq = k * k
        for evaluator, c, q, _ in entries:
            # |c - mean| > k*sigma  <=>  SCALE^2*(n*c - total)^2 > k^2 * n^2 * sigma^2
            c_dev = n * c - c_total
            q_dev = n * q - q_total
            if (SCALE * SCALE * c_dev * c_dev > k_sq * c_var_num
                    or SCALE * SCALE * q_dev * q_dev > k_sq * q_var_num):
                outliers.add(evaluator)
    in_consensus = frozenset(sheet.scored() - outliers)
    return ConsensusResult(
        submission_id=sheet.submission_id,
        round=sheet.round,
        c_mean=c_total * SCALE // n,
        q_mean=q_total * SCALE // n,
        c_std=_scaled_std(n, c_total, c_sq),
        q_std=_scaled_std(n, q_total, q_sq),
        outliers=frozenset(outliers),
        in_consensus=in_consensus,
        reached=2 * len(in_consensus) > n,
    )


def forced_consensus(sheet: ScoreSheet) -> ConsensusResult:
    """Fallback after max_rounds: outlier removal skipped, everyone counts."""
    base = run_consensus(sheet, None)
    return ConsensusResult(
        submission_id=base.submission_id, round=base.round,
        c_mean=base.c_mean, q_mean=base.q_mean,
        c_std=base.c_std, q_std=base.q_std,
        outliers=frozenset(), in_consensus=frozenset(sheet.scored()),
        reached=True, forced=True,
    )


# ---------------------------------------------------------------- selection

def partition_slots(ordered: Sequence[bytes], slot_count: int) -> list[list[bytes]]:
    """Equal-count quantile slots over a reputation-ordered pool; sizes
    differ by at most one and no slot is empty while len >= slot_count."""
    n = len(ordered)
    return [list(ordered[i * n // slot_count:(i + 1) * n // slot_count])
            for i in range(slot_count)]


def _draw(seed: bytes, position: int, bound: int) -> int:
    digest = keccak256(seed + position.to_bytes(8, "big"))
    return int.from_bytes(digest, "big") % bound


def select_from_slots(slots: Sequence[Sequence[bytes]], seed: bytes) -> list[bytes]:
    return [slot[_draw(seed, i, len(slot))] for i, slot in enumerate(slots)]


def select_uniform(pool: Sequence[bytes], count: int, seed: bytes) -> list[bytes]:
    remaining = list(pool)
    picks = []
    for i in range(count):
        picks.append(remaining.pop(_draw(seed, i, len(remaining))))
    return picks


def has_pending_submission(state: "PlatformState", worker: bytes) -> bool:
    """Obligated path: an own submission still awaiting evaluation, or a
    finalized one whose y-evaluation quota is not yet discharged."""
    if state.pending_rep.get(worker):
        return True
    return any(s.worker == worker and not s.evaluated
               for s in state.submissions.values())


def prior_outliers(state: "PlatformState", submission_id: int) -> set[bytes]:
    return set().union(*(r.outliers for r in state.consensus.get(submission_id, [])), set())


def eligible_pool(state: "PlatformState", submission: "Submission") -> list[tuple[bytes, int, bool]]:
    """(worker, reputation, obligated) rows for everyone allowed to
    evaluate this submission in its next round, reputation-ordered."""
    task = state.tasks[submission.task_id]
    required = set(task.skills_required)
    excluded = prior_outliers(state, submission.submission_id)
    excluded.add(submission.worker)
    excluded.add(task.poster)
    threshold = stats(state).avg_worker_reputation
    rows = []
    for worker_id in state.volunteers:
        if worker_id in excluded:
            continue
        account = state.accounts[worker_id]
        if not account.is_active_worker or not required <= set(account.skills):
            continue
        obligated = has_pending_submission(state, worker_id)
        if not obligated and state.params.volunteer_threshold == "average" \
                and account.reputation < threshold:
            continue
        rows.append((worker_id, account.reputation, obligated))
    rows.sort(key=lambda row: (row[1], row[0]))
    return rows


def check_assign(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    submission = state.submission(args["submission_id"])
    if submission.evaluated:
        raise MaxRoundsExceeded("submission already evaluated")
    if sender != submission.worker:
        raise NotSelected("assignment entries are issued for the submitting worker")
    rounds = state.pools.get(submission.submission_id, [])
    results = state.consensus.get(submission.submission_id, [])
    if rounds:
        if len(results) < len(rounds):
            raise MaxRoundsExceeded("current round is still collecting scores")
        if results[-1].reached:
            raise MaxRoundsExceeded("evaluation already concluded")
        if len(rounds) >= state.params.max_rounds:
            raise MaxRoundsExceeded(f"round limit {state.params.max_rounds} reached")
    x = state.params.evaluators_per_submission
    pool = eligible_pool(state, submission)
    if len(pool) < x:
        raise InsufficientEvaluators(
            f"eligible pool has {len(pool)} members, need {x}")


def apply_assign(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> EvaluatorPool:
    submission = state.submissions[args["submission_id"]]
    x = state.params.evaluators_per_submission
    round_no = len(state.pools.get(submission.submission_id, [])) + 1
    rows = eligible_pool(state, submission)
    ordered = [worker for worker, _, _ in rows]
    obligated_by_id = {worker: obligated for worker, _, obligated in rows}
    # the seed binds the commitment, the full platform state, and the round
    seed = keccak256(submission.commitment + state.state_root()
                     + round_no.to_bytes(8, "big"))
    if state.params.slot_selection:
        slots = partition_slots(ordered, x)
        selected = select_from_slots(slots, seed)
    else:
        slots = []
        selected = select_uniform(ordered, x, seed)
    pool = EvaluatorPool(
        submission_id=submission.submission_id,
        round=round_no,
        eligible=[(worker, rep) for worker, rep, _ in rows],
        slots=slots,
        selected=selected,
        obligated={worker: obligated_by_id[worker] for worker in selected},
        excluded=tuple(sorted(prior_outliers(state, submission.submission_id)
                              | {submission.worker, state.tasks[submission.task_id].poster})),
        seed=seed,
    )
    state.pools.setdefault(submission.submission_id, []).append(pool)
    state.sheets.setdefault(submission.submission_id, []).append(
        ScoreSheet(submission_id=submission.submission_id, round=round_no))
    submission.round = round_no
    state.needs_assignment.discard(submission.submission_id)
    state.emit("evaluators_assigned", submission=submission.submission_id,
               round=round_no, selected=[s.hex() for s in selected])
    return pool


def check_become_evaluator(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    account = state.accounts.get(sender)
    if account is None or not account.is_active_worker:
        raise NotAWorker(f"{sender.hex()} is not an active worker")
    if has_pending_submission(state, sender):
        return  # obligated path: always allowed
    if state.params.volunteer_threshold == "average" \
            and account.reputation < stats(state).avg_worker_reputation:
        raise BelowThreshold("reputation below the platform average")


def apply_become_evaluator(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    state.volunteers.add(sender)


def check_submit_evaluation(state: "PlatformState", sender: bytes, args: dict[str, Any],
                            kind: str) -> None:
    submission = state.submission(args["submission_id"])
    if submission.round < 1 or submission.evaluated:
        raise NotSelected("no evaluation round is open")
    pool = state.pools[submission.submission_id][submission.round - 1]
    sheet = state.sheets[submission.submission_id][submission.round - 1]
    if sender not in pool.selected:
        raise NotSelected(f"{sender.hex()} is not on the panel this round")
    if sender in sheet.scored():
        raise DuplicateScore("already scored this round")
    if not revealed_for_round(state, submission):
        raise NotSelected("submission not yet revealed to the panel")
    for label, value in (("completeness", args["c"]), ("quality", args["q"])):
        if not (SCORE_MIN <= value <= SCORE_MAX):
            raise OutOfRange(f"{label} score {value} outside [1, 100]")
    expected = evaluation_submit_kind(len(sheet.entries) + 1, len(pool.selected))
    if kind != expected:
        raise SerializationFailure(f"entry kind {kind} does not match position ({expected})")


def apply_submit_evaluation(state: "PlatformState", sender: bytes,
                            args: dict[str, Any]) -> ScoreSheet:
    submission = state.submissions[args["submission_id"]]
    pool = state.pools[submission.submission_id][submission.round - 1]
    sheet = state.sheets[submission.submission_id][submission.round - 1]
    sheet.entries.append((sender, args["c"], args["q"], args["review_ref"]))
    if len(sheet.entries) == len(pool.selected):
        _conclude_round(state, submission, pool, sheet)
    return sheet


# ------------------------------------------------------------- settlement

def _conclude_round(state: "PlatformState", submission: "Submission",
                    pool: EvaluatorPool, sheet: ScoreSheet) -> None:
    params = state.params
    result = run_consensus(sheet, params.outlier_k, len(pool.selected))
    if not result.reached and len(state.pools[submission.submission_id]) >= params.max_rounds:
        state.emit("consensus_forced", submission=submission.submission_id,
                   round=sheet.round,
                   would_be_outliers=sorted(e.hex() for e in result.outliers))
        result = forced_consensus(sheet)
    state.consensus.setdefault(submission.submission_id, []).append(result)
    if not result.reached:
        state.emit("consensus_failed", submission=submission.submission_id,
                   round=sheet.round,
                   outliers=sorted(e.hex() for e in result.outliers))
        state.needs_assignment.add(submission.submission_id)
        return
    _finalize(state, submission, pool, sheet, result)


def _finalize(state: "PlatformState", submission: "Submission", pool: EvaluatorPool,
              sheet: ScoreSheet, result: ConsensusResult) -> None:
    params = state.params
    task = state.tasks[submission.task_id]
    consensus_entries = [(c, q, state.accounts[e].reputation)
                         for e, c, q, _ in sheet.entries if e in result.in_consensus]
    fallback = False
    try:
        complete, quality = repmath.consensus_scores(consensus_entries)
    except ZeroTotalReputation:
        complete, quality = repmath.unweighted_scores(consensus_entries)
        fallback = True
    final = repmath.final_score(complete, quality, task.w_c, task.w_q)
    state.finals[submission.submission_id] = FinalScore(
        submission_id=submission.submission_id,
        complete_score=complete, quality_score=quality, final_score=final,
        round=sheet.round, forced=result.forced, unweighted_fallback=fallback,
    )
    submission.evaluated = True
    state.emit("evaluation_final", submission=submission.submission_id,
               final=final, complete=complete, quality=quality,
               forced=result.forced, fallback=fallback)
    touched = []
    for evaluator, c, q, _ in sheet.entries:
        e_score = repmath.evaluator_score(complete, quality, c, q)
        is_outlier = evaluator in result.outliers
        if pool.obligated.get(evaluator, False):
            # obligated evaluations count toward the quota only when in
            # consensus; an outlier round simply does not count
            if not is_outlier:
                state.credits.setdefault(evaluator, []).append(e_score)
                touched.append(evaluator)
        else:
            delta = repmath.volunteer_rep_delta(e_score, is_outlier, params.alpha)
            if state.accounts[evaluator].is_active_worker:
                update_reputation(state, evaluator, delta)
                state.emit("volunteer_rep", evaluator=evaluator, delta=delta,
                           outlier=is_outlier)
    state.pending_rep.setdefault(submission.worker, []).append(submission.submission_id)
    _resolve_quota(state, submission.worker)
    for evaluator in touched:
        _resolve_quota(state, evaluator)


def _resolve_quota(state: "PlatformState", worker: bytes) -> None:
    """Apply the blended reputation update for each finalized submission
    once the worker has banked enough in-consensus evaluations."""
    params = state.params
    queue = state.pending_rep.get(worker)
    credits = state.credits.setdefault(worker, [])
    while queue and len(credits) >= params.evaluations_owed:
        submission_id = queue.pop(0)
        spent = credits[:params.evaluations_owed]
        del credits[:params.evaluations_owed]
        final = state.finals[submission_id]
        delta = repmath.submission_rep_delta(final.final_score, spent,
                                             params.evaluations_owed, params.alpha)
        if state.accounts[worker].is_active_worker:
            update_reputation(state, worker, delta)
        state.emit("submission_rep", worker=worker, submission=submission_id,
                   delta=delta, e_scores=spent)


def audit_record(state: "PlatformState", submission_id: int) -> dict[str, Any]:
    """Round-by-round JSON record: panel, scores, statistics, outcome."""
    rounds = []
    pools = state.pools.get(submission_id, [])
    sheets = state.sheets.get(submission_id, [])
    results = state.consensus.get(submission_id, [])
    for i, pool in enumerate(pools):
        sheet = sheets[i] if i < len(sheets) else None
        result = results[i] if i < len(results) else None
        rounds.append({
            "round": pool.round,
            "slots": [[w.hex() for w in slot] for slot in pool.slots],
            "selected": [w.hex() for w in pool.selected],
            "obligated": {w.hex(): flag for w, flag in pool.obligated.items()},
            "scores": [[e.hex(), c, q] for e, c, q, _ in (sheet.entries if sheet else [])],
            "c_mean": result.c_mean if result else None,
            "q_mean": result.q_mean if result else None,
            "c_std": result.c_std if result else None,
            "q_std": result.q_std if result else None,
            "outliers": sorted(e.hex() for e in result.outliers) if result else None,
            "reached": result.reached if result else None,
            "forced": result.forced if result else None,
        })
    final = state.finals.get(submission_id)
    return {
        "submission": submission_id,
        "rounds": rounds,
        "final": final.to_canon() if final else None,
    }
