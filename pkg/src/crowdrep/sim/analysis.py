"""Post-run analytics and paired-run experiments.

Combinatorial expectations here come straight from the selection
mechanism: per-slot membership probabilities under slot selection,
hypergeometric counts under plain uniform draws. Empirical rates are
then compared against expectation +/- standard errors by the tests.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Any, Iterable, Sequence

from ..errors import ConfigInvalid
from .config import ScenarioConfig

if TYPE_CHECKING:
    from ..ledger import LedgerEntry
    from ..state import PlatformState
    from .runner import SimResult


# ------------------------------------------------------------- collusion

def co_selection_probability_slots(slots: Sequence[Sequence[bytes]],
                                   ring: set[bytes]) -> float:
    """P(at least two ring members selected) with one uniform pick per
    slot, given the actual slot composition."""
    qs = [sum(1 for m in slot if m in ring) / len(slot) for slot in slots]
    p_none = 1.0
    for q in qs:
        p_none *= 1 - q
    p_one = 0.0
    for i, q in enumerate(qs):
        if q == 0:
            continue
        prod = q
        for j, other in enumerate(qs):
            if j != i:
                prod *= 1 - other
        p_one += prod
    return 1.0 - p_none - p_one


def co_selection_probability_uniform(pool_size: int, ring_in_pool: int,
                                     picks: int) -> float:
    """P(at least two ring members among `picks` draws without
    replacement from the pool)."""
    total = math.comb(pool_size, picks)
    if total == 0:
        return 0.0
    none = math.comb(pool_size - ring_in_pool, picks)
    one = ring_in_pool * math.comb(pool_size - ring_in_pool, picks - 1)
    return 1.0 - (none + one) / total


def collusion_stats(state: "PlatformState", ring: set[bytes],
                    slot_selection: bool) -> dict[str, Any]:
    """Empirical ring co-assignment across every assignment event vs the
    per-event combinatorial expectation."""
    events = 0
    co_assigned = 0
    expected = 0.0
    variance = 0.0
    for sid in sorted(state.pools):
        for pool in state.pools[sid]:
            events += 1
            if slot_selection and pool.slots:
                p = co_selection_probability_slots(pool.slots, ring)
            else:
                eligible = [w for w, _ in pool.eligible]
                p = co_selection_probability_uniform(
                    len(eligible), sum(1 for w in eligible if w in ring),
                    len(pool.selected))
            expected += p
            variance += p * (1 - p)
            if sum(1 for w in pool.selected if w in ring) >= 2:
                co_assigned += 1
    return {
        "ring_size": len(ring),
        "events": events,
        "co_assignments": co_assigned,
        "expected": expected,
        "std_error": math.sqrt(variance),
        "empirical_rate": co_assigned / events if events else 0.0,
        "expected_rate": expected / events if events else 0.0,
    }


# ------------------------------------------------------------ reciprocity

def reciprocity_stats(entries: Iterable["LedgerEntry"], state: "PlatformState",
                      reciprocators: Sequence[tuple[set[bytes], int, str]],
                      slot_selection: bool) -> dict[str, Any]:
    """Frequency with which a reciprocator lands on the panel of someone
    it holds a grudge against, against the mechanism's expectation.

    Reconstructed by a single pass over the chain: grudges accrue as
    score entries appear; each assignment entry is then an opportunity
    when the submitter is already grudged.
    """
    grudges: dict[str, set[bytes]] = {name: set() for _, _, name in reciprocators}
    identity_of = {}
    for ids, threshold, name in reciprocators:
        for account in ids:
            identity_of[account] = name
    thresholds = {name: threshold for _, threshold, name in reciprocators}
    owner = {sid: sub.worker for sid, sub in state.submissions.items()}

    opportunities = 0
    hits = 0
    expected = 0.0
    variance = 0.0
    round_no: dict[int, int] = {}

    for entry in entries:
        kind = entry.kind
        if kind.endswith("_evaluation_submit"):
            args = entry.args()
            sid = args["submission_id"]
            victim = owner.get(sid)
            name = identity_of.get(victim)
            if name is not None and (args["c"] < thresholds[name]
                                     or args["q"] < thresholds[name]):
                grudges[name].add(entry.sender)
        elif kind == "assign_evaluators":
            args = entry.args()
            sid = args["submission_id"]
            pool = state.pools[sid][round_no.get(sid, 0)]
            round_no[sid] = round_no.get(sid, 0) + 1
            submitter = owner[sid]
            eligible_ids = [w for w, _ in pool.eligible]
            for ids, _, name in reciprocators:
                if submitter not in grudges[name]:
                    continue
                for rid in ids:
                    if rid not in eligible_ids:
                        continue
                    opportunities += 1
                    if slot_selection and pool.slots:
                        slot = next(s for s in pool.slots if rid in s)
                        p = 1 / len(slot)
                    else:
                        p = len(pool.selected) / len(eligible_ids)
                    expected += p
                    variance += p * (1 - p)
                    if rid in pool.selected:
                        hits += 1
    return {
        "opportunities": opportunities,
        "hits": hits,
        "empirical_rate": hits / opportunities if opportunities else 0.0,
        "expected": expected,
        "expected_rate": expected / opportunities if opportunities else 0.0,
        "std_error": math.sqrt(variance),
    }


def reciprocity_exposure(config: ScenarioConfig) -> dict[str, Any]:
    """Run the scenario and report the reciprocator assignment exposure."""
    from .runner import run_scenario
    if not any(s.archetype == "reciprocator" for s in config.agents):
        raise ConfigInvalid("scenario configures no reciprocator agents")
    result = run_scenario(config)
    return result.report["reciprocity"]


# ---------------------------------------------------------------- ablation

FEATURES = ("outlier-removal", "slot-selection", "entry-fee")


def _disable(config: ScenarioConfig, feature: str) -> ScenarioConfig:
    if feature == "outlier-removal":
        return config.with_protocol(outlier_k=None)
    if feature == "slot-selection":
        return config.with_protocol(slot_selection=False)
    if feature == "entry-fee":
        return config.with_protocol(registration_fee=0)
    raise ConfigInvalid(f"unknown ablation feature {feature!r}; "
                        f"pick one of {', '.join(FEATURES)}")


def ablate(config: ScenarioConfig, feature: str) -> dict[str, Any]:
    """Two runs, identical seed, feature on vs off; reports plus deltas."""
    from .runner import run_scenario
    on = run_scenario(config)
    off = run_scenario(_disable(config, feature))
    def _mean_final(result: "SimResult"):
        finals = [s["final_score"] for s in result.report["submissions"]
                  if s["final_score"] is not None]
        return sum(finals) // len(finals) if finals else None
    deltas = {
        "honest_mean_rep": _delta(on, off, "honest_mean_rep"),
        "adversary_mean_rep": _delta(on, off, "adversary_mean_rep"),
        "mean_final_score": (_mean_final(on), _mean_final(off)),
        "forced_rounds": (on.report["consensus"]["forced"],
                          off.report["consensus"]["forced"]),
        "registrations": (sum(a["registrations"] for a in on.report["agents"]),
                          sum(a["registrations"] for a in off.report["agents"])),
    }
    return {"feature": feature, "on": on, "off": off, "deltas": deltas}


def _delta(on: "SimResult", off: "SimResult", key: str):
    a = on.report["ticks"][-1][key]
    b = off.report["ticks"][-1][key]
    return (a, b)
