"""Scenario configuration: JSON in, validated dataclasses out.

Human-readable fractions (k, alpha, weights, fee fraction) arrive as
floats and are converted to the protocol's 10^-4 fixed point at parse
time; everything downstream is integers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

from ..errors import ConfigInvalid
from ..params import DEFAULT_REGISTRATION_FEE, SCALE, ProtocolParams, fp

ETHER = 10 ** 18

ARCHETYPES = (
    "honest_worker", "honest_poster", "colluder", "bad_mouther",
    "ballot_stuffer", "sybil_spawner", "re_entrant", "reciprocator",
)
ADVERSARY_ARCHETYPES = frozenset(ARCHETYPES) - {"honest_worker", "honest_poster"}
WORKER_ARCHETYPES = frozenset(ARCHETYPES) - {"honest_poster"}


@dataclass(frozen=True)
class TaskPlan:
    count: int = 20
    reward: int = 10 ** 15
    skills: tuple[str, ...] = ("general",)
    w_c: int = SCALE // 2
    w_q: int = SCALE // 2
    apply_window: int = 1        # ticks a task collects applicants
    accept_window: int = 3       # acceptance deadline offset
    due_window: int = 10         # due date offset
    per_poster_per_tick: int = 1

    def validate(self) -> None:
        if self.count < 0 or self.reward <= 0:
            raise ConfigInvalid("task count must be >= 0 and reward positive")
        if self.w_c + self.w_q != SCALE or min(self.w_c, self.w_q) < 0:
            raise ConfigInvalid("task weights must be non-negative and sum to 1")
        if not (0 < self.accept_window < self.due_window):
            raise ConfigInvalid("need 0 < accept_window < due_window")
        if self.apply_window < 1 or self.per_poster_per_tick < 1:
            raise ConfigInvalid("apply_window and per_poster_per_tick must be >= 1")


@dataclass(frozen=True)
class AgentSpec:
    archetype: str
    count: int = 1
    skills: tuple[str, ...] = ("general",)
    quality_mean: int = 80
    quality_spread: int = 5
    eval_noise: int = 5
    work_ticks: tuple[int, int] = (1, 4)
    endowment: int | None = None
    targets: tuple[str, ...] = ()
    inflate_to: int = 100
    deflate_to: int = 1
    identities: int = 3          # sybil_spawner only
    exit_below: int = SCALE      # re_entrant: exit when reputation drops below
    grudge_below: int = 40       # reciprocator: remember scores under this

    def validate(self) -> None:
        if self.archetype not in ARCHETYPES:
            raise ConfigInvalid(f"unknown archetype {self.archetype!r}")
        if self.count < 1:
            raise ConfigInvalid("agent count must be >= 1")
        if not (1 <= self.quality_mean <= 100):
            raise ConfigInvalid("quality_mean must lie in [1, 100]")
        if self.quality_spread < 0 or self.eval_noise < 0:
            raise ConfigInvalid("spread and noise must be non-negative")
        if not (1 <= self.work_ticks[0] <= self.work_ticks[1]):
            raise ConfigInvalid("work_ticks must be an increasing positive pair")
        if not (1 <= self.inflate_to <= 100 and 1 <= self.deflate_to <= 100):
            raise ConfigInvalid("inflate_to/deflate_to must lie in [1, 100]")
        if self.archetype == "sybil_spawner" and self.identities < 1:
            raise ConfigInvalid("sybil_spawner needs at least one identity")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    duration: int = 50
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    tasks: TaskPlan = field(default_factory=TaskPlan)
    agents: tuple[AgentSpec, ...] = ()
    gas_price_gwei: str = "1"
    ether_usd: str = "144.30"

    def validate(self) -> None:
        if not (0 <= self.seed < 2 ** 64):
            raise ConfigInvalid("seed must be a 64-bit unsigned integer")
        if self.duration < 1:
            raise ConfigInvalid("duration must be >= 1")
        self.protocol.validate()
        self.tasks.validate()
        if not self.agents:
            raise ConfigInvalid("at least one agent spec is required")
        for spec in self.agents:
            spec.validate()
        if not any(s.archetype == "honest_poster" for s in self.agents) \
                and self.tasks.count > 0:
            raise ConfigInvalid("tasks require at least one honest_poster")
        names = set()
        for spec in self.agents:
            for i in range(spec.count):
                names.add(f"{spec.archetype}_{i}")
        for spec in self.agents:
            for target in spec.targets:
                if target not in names:
                    raise ConfigInvalid(f"target {target!r} names no agent")

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)

    def with_protocol(self, **kwargs: Any) -> "ScenarioConfig":
        return replace(self, protocol=self.protocol.with_overrides(**kwargs))

    # ------------------------------------------------------------- JSON

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ScenarioConfig":
        try:
            protocol = _protocol_from(raw.get("protocol", {}))
            tasks = _tasks_from(raw.get("tasks", {}))
            agents = tuple(_agent_from(spec) for spec in raw.get("agents", ()))
            config = cls(
                seed=int(raw.get("seed", 0)),
                duration=int(raw.get("duration", 50)),
                protocol=protocol,
                tasks=tasks,
                agents=agents,
                gas_price_gwei=str(raw.get("gas_price_gwei", "1")),
                ether_usd=str(raw.get("ether_usd", "144.30")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"malformed scenario: {exc}") from exc
        config.validate()
        return config

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"scenario is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigInvalid("scenario JSON must be an object")
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path: str) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "duration": self.duration,
            "protocol": self.protocol.to_args(),
            "tasks": {
                "count": self.tasks.count,
                "reward": self.tasks.reward,
                "skills": list(self.tasks.skills),
                "w_c": self.tasks.w_c,
                "w_q": self.tasks.w_q,
                "apply_window": self.tasks.apply_window,
                "accept_window": self.tasks.accept_window,
                "due_window": self.tasks.due_window,
                "per_poster_per_tick": self.tasks.per_poster_per_tick,
            },
            "agents": [{
                "archetype": s.archetype, "count": s.count,
                "skills": list(s.skills), "quality_mean": s.quality_mean,
                "quality_spread": s.quality_spread, "eval_noise": s.eval_noise,
                "work_ticks": list(s.work_ticks),
                "endowment": s.endowment, "targets": list(s.targets),
                "inflate_to": s.inflate_to, "deflate_to": s.deflate_to,
                "identities": s.identities, "exit_below": s.exit_below,
                "grudge_below": s.grudge_below,
            } for s in self.agents],
            "gas_price_gwei": self.gas_price_gwei,
            "ether_usd": self.ether_usd,
        }


def _scaled_fraction(raw: Mapping[str, Any], key: str, default: int) -> int:
    if key not in raw:
        return default
    value = raw[key]
    if value is None:
        raise ConfigInvalid(f"{key} cannot be null")
    if isinstance(value, bool):
        raise ConfigInvalid(f"{key} must be numeric")
    scaled = fp(float(value))
    if not (0 <= scaled <= SCALE):
        raise ConfigInvalid(f"{key} must lie in [0, 1]")
    return scaled


def _protocol_from(raw: Mapping[str, Any]) -> ProtocolParams:
    defaults = ProtocolParams()
    k_raw = raw.get("outlier_k", "unset")
    if k_raw == "unset":
        outlier_k = defaults.outlier_k
    elif k_raw is None:
        outlier_k = None
    else:
        outlier_k = fp(float(k_raw))
        if outlier_k < 0:
            raise ConfigInvalid("outlier_k must be non-negative")
    params = ProtocolParams(
        evaluators_per_submission=int(raw.get("evaluators_per_submission",
                                               defaults.evaluators_per_submission)),
        evaluations_owed=int(raw.get("evaluations_owed", defaults.evaluations_owed)),
        outlier_k=outlier_k,
        alpha=_scaled_fraction(raw, "alpha", defaults.alpha),
        max_rounds=int(raw.get("max_rounds", defaults.max_rounds)),
        registration_fee=int(raw.get("registration_fee", DEFAULT_REGISTRATION_FEE)),
        acceptance_fee_frac=_scaled_fraction(raw, "acceptance_fee_fraction",
                                             defaults.acceptance_fee_frac),
        volunteer_threshold=str(raw.get("volunteer_threshold",
                                        defaults.volunteer_threshold)),
        slot_selection=bool(raw.get("slot_selection", defaults.slot_selection)),
        default_gas=int(raw.get("default_gas", defaults.default_gas)),
        gas_overrides=tuple((str(k), int(v))
                            for k, v in raw.get("gas_overrides", {}).items()),
    )
    params.validate()
    return params


def _tasks_from(raw: Mapping[str, Any]) -> TaskPlan:
    defaults = TaskPlan()
    return TaskPlan(
        count=int(raw.get("count", defaults.count)),
        reward=int(raw.get("reward", defaults.reward)),
        skills=tuple(raw.get("skills", list(defaults.skills))),
        w_c=_scaled_fraction(raw, "w_c", defaults.w_c),
        w_q=_scaled_fraction(raw, "w_q", defaults.w_q),
        apply_window=int(raw.get("apply_window", defaults.apply_window)),
        accept_window=int(raw.get("accept_window", defaults.accept_window)),
        due_window=int(raw.get("due_window", defaults.due_window)),
        per_poster_per_tick=int(raw.get("per_poster_per_tick",
                                        defaults.per_poster_per_tick)),
    )


def _agent_from(raw: Mapping[str, Any]) -> AgentSpec:
    defaults = AgentSpec(archetype=str(raw["archetype"]))
    work_ticks = raw.get("work_ticks", list(defaults.work_ticks))
    exit_below = raw.get("exit_below")
    return AgentSpec(
        archetype=defaults.archetype,
        count=int(raw.get("count", 1)),
        skills=tuple(raw.get("skills", list(defaults.skills))),
        quality_mean=int(raw.get("quality_mean", defaults.quality_mean)),
        quality_spread=int(raw.get("quality_spread", defaults.quality_spread)),
        eval_noise=int(raw.get("eval_noise", defaults.eval_noise)),
        work_ticks=(int(work_ticks[0]), int(work_ticks[1])),
        endowment=None if raw.get("endowment") is None else int(raw["endowment"]),
        targets=tuple(str(t) for t in raw.get("targets", ())),
        inflate_to=int(raw.get("inflate_to", defaults.inflate_to)),
        deflate_to=int(raw.get("deflate_to", defaults.deflate_to)),
        identities=int(raw.get("identities", defaults.identities)),
        exit_below=defaults.exit_below if exit_below is None else fp(float(exit_below)),
        grudge_below=int(raw.get("grudge_below", defaults.grudge_below)),
    )
