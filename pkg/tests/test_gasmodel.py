from decimal import Decimal

import pytest

from crowdrep import gasmodel
from crowdrep.errors import IncompleteTrace
from crowdrep.gasmodel import (
    GasSchedule,
    TABLE,
    cost_usd,
    evaluation_submit_kind,
    lifecycle_schedule_total,
    lifecycle_total,
)


# published per-function costs at 1 Gwei/gas and $144.30/ether; their
# USD column runs ~0.5% above the raw arithmetic
PUBLISHED = {
    "create_worker": (229_786, "0.0333"),
    "create_taskposter": (228_410, "0.0331"),
    "post_task": (250_502, "0.0363"),
    "create_agreement": (198_134, "0.0287"),
    "accept_agreement": (49_729, "0.0072"),
    "submit_hash": (114_068, "0.0165"),
    "assign_evaluators": (328_702, "0.0477"),
    "first_evaluation_submit": (133_073, "0.0193"),
    "second_evaluation_submit": (105_620, "0.0153"),
    "third_evaluation_submit": (274_360, "0.0398"),
    "become_evaluator": (47_878, "0.0069"),
}

LIFECYCLE_GAS_TOTAL = 1_502_066


def test_schedule_matches_published_gas():
    schedule = GasSchedule.standard()
    assert len(TABLE) == 11
    for kind, (gas, _) in PUBLISHED.items():
        assert schedule.charge(kind) == gas


def test_schedule_spot_values():
    schedule = GasSchedule.standard()
    assert schedule.charge("create_worker") == 229_786
    assert schedule.charge("assign_evaluators") == 328_702


def test_unknown_kind_uses_default():
    schedule = GasSchedule.standard()
    assert schedule.charge("exotic_operation") == 21_000
    assert schedule.charge("reveal_submission") == 21_000


def test_overrides_and_positive_gas_enforced():
    schedule = GasSchedule.standard({"apply_task": 30_000})
    assert schedule.charge("apply_task") == 30_000
    with pytest.raises(ValueError):
        GasSchedule.standard({"apply_task": 0})


def test_uncharged_system_kinds():
    schedule = GasSchedule.standard()
    assert schedule.charge("tick") == 0
    assert schedule.charge("genesis") == 0


def test_lifecycle_schedule_total():
    assert lifecycle_schedule_total() == LIFECYCLE_GAS_TOTAL


@pytest.mark.parametrize("kind,row", PUBLISHED.items())
def test_cost_usd_within_one_percent_of_published(kind, row):
    gas, published = row
    computed = cost_usd(gas)
    assert abs(computed - Decimal(published)) <= Decimal(published) * Decimal("0.01")


def test_cost_usd_lifecycle():
    computed = cost_usd(LIFECYCLE_GAS_TOTAL)
    # 1,502,066 * 1e-9 * 144.30 = 0.21674812...
    assert computed == Decimal("0.2167")
    assert abs(computed - Decimal("0.2178")) <= Decimal("0.2178") * Decimal("0.01")


def test_cost_usd_zero_gas():
    assert cost_usd(0) == Decimal("0.0000")


def test_cost_usd_rejects_bad_prices():
    with pytest.raises(ValueError):
        cost_usd(1000, "0")
    with pytest.raises(ValueError):
        cost_usd(1000, "1", "-1")


def test_evaluation_submit_kind_positions():
    assert evaluation_submit_kind(1, 3) == "first_evaluation_submit"
    assert evaluation_submit_kind(2, 3) == "second_evaluation_submit"
    assert evaluation_submit_kind(3, 3) == "third_evaluation_submit"
    # generalization beyond panels of three
    assert evaluation_submit_kind(1, 1) == "third_evaluation_submit"
    assert evaluation_submit_kind(3, 5) == "second_evaluation_submit"
    assert evaluation_submit_kind(5, 5) == "third_evaluation_submit"
    with pytest.raises(ValueError):
        evaluation_submit_kind(4, 3)


class _FakeEntry:
    def __init__(self, kind, gas):
        self.kind = kind
        self.gas_charged = gas


def _lifecycle_entries():
    schedule = GasSchedule.standard()
    return [_FakeEntry(kind, schedule.charge(kind)) for kind in gasmodel.LIFECYCLE_KINDS]


def test_lifecycle_total_canonical():
    assert lifecycle_total(_lifecycle_entries()) == LIFECYCLE_GAS_TOTAL


def test_lifecycle_total_with_registrations():
    schedule = GasSchedule.standard()
    entries = _lifecycle_entries() + [
        _FakeEntry("create_worker", schedule.charge("create_worker")),
        _FakeEntry("create_taskposter", schedule.charge("create_taskposter")),
    ]
    assert lifecycle_total(entries) == LIFECYCLE_GAS_TOTAL + 229_786 + 228_410


def test_lifecycle_total_order_independent():
    entries = _lifecycle_entries()
    assert lifecycle_total(list(reversed(entries))) == lifecycle_total(entries)


def test_lifecycle_total_empty_trace():
    with pytest.raises(IncompleteTrace):
        lifecycle_total([])


def test_lifecycle_total_missing_op():
    entries = [e for e in _lifecycle_entries() if e.kind != "assign_evaluators"]
    with pytest.raises(IncompleteTrace):
        lifecycle_total(entries)
