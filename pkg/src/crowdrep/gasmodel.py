"""Per-operation gas accounting and fiat cost estimation.

Gas never gates execution here; it is a cost meter recorded on every
ledger entry. The default schedule reproduces the measured per-function
costs of the reference contract deployment, including the full
post-to-evaluated task lifecycle total of 1,502,066 gas.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_EVEN
from typing import Iterable, Mapping, TYPE_CHECKING

from .errors import IncompleteTrace

if TYPE_CHECKING:
    from .ledger import LedgerEntry

DEFAULT_GAS = 21_000
DEFAULT_GAS_PRICE_GWEI = Decimal("1")
DEFAULT_ETHER_USD = Decimal("144.30")

# (operation kind, display label, gas)
TABLE = (
    ("create_worker", "Create worker", 229_786),
    ("create_taskposter", "Create taskposter", 228_410),
    ("post_task", "Post task with fees", 250_502),
    ("create_agreement", "Create agreement", 198_134),
    ("accept_agreement", "Accept agreement", 49_729),
    ("submit_hash", "Submit hash", 114_068),
    ("assign_evaluators", "Assign evaluators", 328_702),
    ("first_evaluation_submit", "First evaluation submit", 133_073),
    ("second_evaluation_submit", "Second evaluation submit", 105_620),
    ("third_evaluation_submit", "Third evaluation submit", 274_360),
    ("become_evaluator", "Become evaluator", 47_878),
)

# rows from task posting through the final evaluation submit; the two
# registration rows are one-time costs and excluded
LIFECYCLE_KINDS = tuple(kind for kind, _, _ in TABLE[2:])

# system entries carry no gas: they are harness scaffolding, not
# platform functions
UNCHARGED_KINDS = frozenset({"genesis", "tick"})


@dataclass(frozen=True)
class GasSchedule:
    """Operation kind -> gas units, with a default for kinds that were
    never measured."""

    table: Mapping[str, int]
    default_gas: int = DEFAULT_GAS

    @classmethod
    def standard(cls, overrides: Mapping[str, int] | Iterable[tuple[str, int]] = (),
                 default_gas: int = DEFAULT_GAS) -> "GasSchedule":
        merged = {kind: gas for kind, _, gas in TABLE}
        merged.update(dict(overrides))
        for kind, gas in merged.items():
            if gas <= 0:
                raise ValueError(f"gas for {kind} must be positive")
        return cls(table=merged, default_gas=default_gas)

    def charge(self, kind: str) -> int:
        if kind in UNCHARGED_KINDS:
            return 0
        return self.table.get(kind, self.default_gas)


def evaluation_submit_kind(position: int, panel_size: int) -> str:
    """Entry kind for the Nth score on a panel of `panel_size`.

    The final submit is the expensive one (it triggers consensus);
    intermediate submits are billed like the second.
    """
    if position < 1 or position > panel_size:
        raise ValueError("position out of panel range")
    if position == panel_size:
        return "third_evaluation_submit"
    if position == 1:
        return "first_evaluation_submit"
    return "second_evaluation_submit"


def cost_usd(gas: int, gas_price_gwei: Decimal | str = DEFAULT_GAS_PRICE_GWEI,
             ether_usd: Decimal | str = DEFAULT_ETHER_USD) -> Decimal:
    """USD cost of `gas` units, quantized to 4 decimal places."""
    price = Decimal(gas_price_gwei)
    usd = Decimal(ether_usd)
    if price <= 0 or usd <= 0:
        raise ValueError("prices must be positive")
    raw = Decimal(gas) * price * Decimal("1e-9") * usd
    return raw.quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN)


def lifecycle_total(entries: Iterable["LedgerEntry"]) -> int:
    """Sum of gas over one task's trace.

    Requires every lifecycle operation (posting through the final
    evaluation submit) to appear at least once; anything else present
    in the slice is summed too.
    """
    entries = list(entries)
    kinds = {entry.kind for entry in entries}
    missing = [kind for kind in LIFECYCLE_KINDS if kind not in kinds]
    if missing:
        raise IncompleteTrace(f"lifecycle operations missing: {', '.join(missing)}")
    return sum(entry.gas_charged for entry in entries)


def lifecycle_schedule_total() -> int:
    """The canonical lifecycle cost straight from the schedule."""
    return sum(gas for kind, _, gas in TABLE[2:])
