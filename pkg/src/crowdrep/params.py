"""Protocol parameters and the shared fixed-point convention.

All fractional quantities (reputation, aggregated scores, weights, the
alpha blend, the outlier multiplier k) are integers scaled by 10**4 so
that every fold over the ledger is bit-exact. Raw evaluator scores stay
plain integers in [1, 100]; currency is integer wei-equivalent units.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Mapping

from .errors import ConfigInvalid

SCALE = 10_000
# reputation of a freshly registered worker: 1.0000
NEW_WORKER_REPUTATION = 1 * SCALE
SCORE_MIN = 1
SCORE_MAX = 100

# $5 at the Dec 2019 ether price, in wei-equivalent units
DEFAULT_REGISTRATION_FEE = 11_800_000_000_000_000


@dataclass(frozen=True)
class ProtocolParams:
    """Tunable protocol constants, recorded in the genesis entry so a
    trace replays without out-of-band configuration."""

    evaluators_per_submission: int = 3          # x
    evaluations_owed: int = 2                   # y, per own submission
    outlier_k: int | None = SCALE               # k of the k-sigma rule, scaled; None disables removal
    alpha: int = 2500                           # evaluation-performance weight, scaled
    max_rounds: int = 3                         # consensus rounds before the forced fallback
    registration_fee: int = DEFAULT_REGISTRATION_FEE
    acceptance_fee_frac: int = 1000             # default worker acceptance fee, fraction of reward, scaled
    volunteer_threshold: str = "average"        # "average" | "none"
    slot_selection: bool = True                 # reputation-quantile slots vs plain uniform draw
    default_gas: int = 21_000
    gas_overrides: tuple[tuple[str, int], ...] = field(default_factory=tuple)

    def validate(self) -> None:
        if self.evaluators_per_submission < 1:
            raise ConfigInvalid("evaluators_per_submission must be >= 1")
        if self.evaluations_owed < 1:
            raise ConfigInvalid("evaluations_owed must be >= 1")
        if not (0 <= self.alpha <= SCALE):
            raise ConfigInvalid("alpha must lie in [0, 1] scaled")
        if self.outlier_k is not None and self.outlier_k < 0:
            raise ConfigInvalid("outlier_k must be non-negative or None")
        if self.max_rounds < 1:
            raise ConfigInvalid("max_rounds must be >= 1")
        if self.registration_fee < 0:
            raise ConfigInvalid("registration_fee must be non-negative")
        if not (0 <= self.acceptance_fee_frac <= SCALE):
            raise ConfigInvalid("acceptance_fee_frac must lie in [0, 1] scaled")
        if self.volunteer_threshold not in ("average", "none"):
            raise ConfigInvalid("volunteer_threshold must be 'average' or 'none'")
        if self.default_gas <= 0:
            raise ConfigInvalid("default_gas must be positive")

    def to_args(self) -> dict[str, Any]:
        return {
            "evaluators_per_submission": self.evaluators_per_submission,
            "evaluations_owed": self.evaluations_owed,
            "outlier_k": self.outlier_k,
            "alpha": self.alpha,
            "max_rounds": self.max_rounds,
            "registration_fee": self.registration_fee,
            "acceptance_fee_frac": self.acceptance_fee_frac,
            "volunteer_threshold": self.volunteer_threshold,
            "slot_selection": self.slot_selection,
            "default_gas": self.default_gas,
            "gas_overrides": [list(kv) for kv in self.gas_overrides],
        }

    @classmethod
    def from_args(cls, args: Mapping[str, Any]) -> "ProtocolParams":
        overrides = tuple((str(k), int(v)) for k, v in args.get("gas_overrides", ()))
        params = cls(
            evaluators_per_submission=int(args["evaluators_per_submission"]),
            evaluations_owed=int(args["evaluations_owed"]),
            outlier_k=None if args["outlier_k"] is None else int(args["outlier_k"]),
            alpha=int(args["alpha"]),
            max_rounds=int(args["max_rounds"]),
            registration_fee=int(args["registration_fee"]),
            acceptance_fee_frac=int(args["acceptance_fee_frac"]),
            volunteer_threshold=str(args["volunteer_threshold"]),
            slot_selection=bool(args["slot_selection"]),
            default_gas=int(args["default_gas"]),
            gas_overrides=overrides,
        )
        params.validate()
        return params

    def with_overrides(self, **kwargs: Any) -> "ProtocolParams":
        params = replace(self, **kwargs)
        params.validate()
        return params


def fp(value: float | int) -> int:
    """Scale a human-readable number to fixed point (0.25 -> 2500)."""
    return round(value * SCALE)


def fp_str(value: int) -> str:
    """Render a scaled value back to decimal text (2500 -> '0.25')."""
    sign = "-" if value < 0 else ""
    mag = abs(value)
    whole, frac = divmod(mag, SCALE)
    return f"{sign}{whole}.{frac:04d}".rstrip("0").rstrip(".") or "0"
