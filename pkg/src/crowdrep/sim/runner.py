"""Discrete-tick scheduler over the protocol Node, plus report assembly.

Determinism contract: identical ScenarioConfig (seed included) produces
byte-identical ledger traces and reports. Agents take turns in account
id order inside each tick; all randomness flows from per-agent
substreams of the scenario seed.
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any, Optional

from .. import ledger as ledger_mod
from ..accounts import ROLE_POSTER, ROLE_WORKER
from ..errors import InsufficientEvaluators
from ..evaluation import audit_record
from ..gasmodel import cost_usd
from ..node import Node
from ..params import SCALE
from .agents import AGENT_CLASSES, Agent
from .config import ADVERSARY_ARCHETYPES, ETHER, ScenarioConfig

METRIC_COLUMNS = (
    "tick", "honest_mean_rep", "adversary_mean_rep", "active_workers",
    "tasks_open", "tasks_evaluated", "tasks_cancelled", "consensus_failures",
    "forced_rounds", "gas_total", "conservation_residual",
)


@dataclass
class SimResult:
    config: ScenarioConfig
    node: Node
    report: dict[str, Any]

    @property
    def entries(self):
        return self.node.entries

    def report_json(self) -> str:
        return json.dumps(self.report, sort_keys=True, separators=(",", ":")) + "\n"

    def metrics_csv(self) -> str:
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=METRIC_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.report["ticks"]:
            writer.writerow(row)
        return out.getvalue()

    def cost_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["operation", "count", "gas", "usd"])
        for kind, row in sorted(self.report["gas"]["by_kind"].items()):
            writer.writerow([kind, row["count"], row["gas"], row["usd"]])
        writer.writerow(["total", self.report["gas"]["entries"],
                         self.report["gas"]["total"], self.report["gas"]["usd"]])
        return out.getvalue()


class Simulation:
    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        self.node = Node.create(params=config.protocol, seed=config.seed)
        self.tasks_remaining = config.tasks.count
        self.agents: list[Agent] = []
        self._owners: dict[bytes, Agent] = {}
        self._ticks: list[dict[str, Any]] = []
        self._assign_failures = 0
        self._last_activity = 0
        for spec in config.agents:
            for i in range(spec.count):
                name = f"{spec.archetype}_{i}"
                rng = random.Random(_substream(config.seed, name))
                self.agents.append(AGENT_CLASSES[spec.archetype](name, spec, rng))

    # ------------------------------------------------------------- helpers

    def adopt(self, account: bytes, agent: Agent) -> None:
        self._owners[account] = agent

    def owner_of(self, account: bytes) -> Optional[Agent]:
        return self._owners.get(account)

    def worker_busy(self, worker: bytes) -> bool:
        """Accepted work not yet delivered (no commitment on file)."""
        state = self.node.state
        for agreement in state.agreements.values():
            if agreement.worker == worker and agreement.state == "accepted" \
                    and state.submission_for_agreement(agreement.agreement_id) is None:
                return True
        return False

    def worker_spoken_for(self, worker: bytes) -> bool:
        """Busy, or a standing offer (created agreement) already names
        this worker; posters skip such applicants."""
        state = self.node.state
        if self.worker_busy(worker):
            return True
        return any(a.worker == worker and a.state == "created"
                   for a in state.agreements.values())

    def default_endowment(self, role: str) -> int:
        fee = self.node.params.registration_fee
        if role == ROLE_POSTER:
            return fee + self.config.tasks.count * self.config.tasks.reward + ETHER
        return fee + 3 * self.config.tasks.reward + 2 * ETHER

    # ---------------------------------------------------------------- run

    def run(self) -> SimResult:
        for t in range(1, self.config.duration + 1):
            before = len(self.node.entries)
            self.node.tick(t)
            self._retry_assignments()
            for agent in sorted(self.agents, key=lambda a: a.sort_key()):
                agent.act(self)
            if len(self.node.entries) - before > 1:
                self._last_activity = t
            self._collect(t)
        return SimResult(self.config, self.node, self._build_report())

    def _retry_assignments(self) -> None:
        for sid in sorted(self.node.state.needs_assignment):
            try:
                self.node.assign_evaluators(sid)
            except InsufficientEvaluators:
                self._assign_failures += 1

    # ------------------------------------------------------------ metrics

    def _reputation_means(self) -> tuple[Optional[int], Optional[int]]:
        honest, adversary = [], []
        for account in self.node.state.accounts.values():
            if not account.is_active_worker:
                continue
            agent = self._owners.get(account.account_id)
            if agent is None:
                continue
            (adversary if agent.adversary else honest).append(account.reputation)
        h = sum(honest) // len(honest) if honest else None
        a = sum(adversary) // len(adversary) if adversary else None
        return h, a

    def _collect(self, tick: int) -> None:
        state = self.node.state
        honest, adversary = self._reputation_means()
        statuses = [t.status for t in state.tasks.values()]
        results = [r for rounds in state.consensus.values() for r in rounds]
        self._ticks.append({
            "tick": tick,
            "honest_mean_rep": honest,
            "adversary_mean_rep": adversary,
            "active_workers": sum(1 for a in state.accounts.values()
                                  if a.is_active_worker),
            "tasks_open": statuses.count("open"),
            "tasks_evaluated": statuses.count("evaluated"),
            "tasks_cancelled": statuses.count("cancelled"),
            "consensus_failures": sum(1 for r in results if not r.reached),
            "forced_rounds": sum(1 for r in results if r.forced),
            "gas_total": sum(e.gas_charged for e in self.node.entries),
            "conservation_residual": state.conservation_residual(),
        })

    # ------------------------------------------------------------- report

    def _build_report(self) -> dict[str, Any]:
        from .analysis import collusion_stats, reciprocity_stats

        state = self.node.state
        entries = self.node.entries
        verification = self.node.ledger.verify()

        by_kind: dict[str, dict[str, Any]] = {}
        for entry in entries:
            row = by_kind.setdefault(entry.kind, {"count": 0, "gas": 0})
            row["count"] += 1
            row["gas"] += entry.gas_charged
        for row in by_kind.values():
            row["usd"] = str(cost_usd(row["gas"], self.config.gas_price_gwei,
                                      self.config.ether_usd))
        total_gas = sum(e.gas_charged for e in entries)

        agents_out = []
        for agent in sorted(self.agents, key=lambda a: a.name):
            accounts = [state.accounts[i] for i in agent.identities
                        if i in state.accounts]
            active = [a for a in accounts if a.status == "active"]
            refunds = sum(e["refund"] for e in state.events
                          if e["event"] == "exited"
                          and e["account"] in set(agent.identities))
            agents_out.append({
                "name": agent.name,
                "archetype": agent.spec.archetype,
                "adversary": agent.adversary,
                "identities": [i.hex() for i in agent.identities],
                "registrations": len(agent.identities),
                "fees_paid": sum(a.deposit for a in accounts)
                              + sum(e["refund"] + e["retained"] for e in state.events
                                    if e["event"] == "exited"
                                    and e["account"] in set(agent.identities)),
                "refunds_received": refunds,
                "reputation": active[0].reputation if active and
                              active[0].role == ROLE_WORKER else None,
                "wallet_total": sum(a.wallet for a in accounts),
            })

        submissions_out = []
        for sid in sorted(state.submissions):
            sub = state.submissions[sid]
            final = state.finals.get(sid)
            owner = self._owners.get(sub.worker)
            submissions_out.append({
                "submission": sid,
                "task": sub.task_id,
                "worker": sub.worker.hex(),
                "worker_name": owner.name if owner else None,
                "rounds": len(state.pools.get(sid, [])),
                "final_score": final.final_score if final else None,
                "complete_score": final.complete_score if final else None,
                "quality_score": final.quality_score if final else None,
                "forced": final.forced if final else None,
                "unweighted_fallback": final.unweighted_fallback if final else None,
            })

        statuses = [t.status for t in state.tasks.values()]
        results = [r for rounds in state.consensus.values() for r in rounds]
        honest, adversary = self._reputation_means()
        advantage = None if (honest is None or adversary is None) \
            else adversary - honest

        colluder_ring = [i for agent in self.agents if agent.spec.archetype == "colluder"
                         for i in agent.identities]
        sybil_rings = [agent.identities for agent in self.agents
                       if agent.spec.archetype == "sybil_spawner"]
        collusion = None
        if colluder_ring or sybil_rings:
            ring = colluder_ring or sybil_rings[0]
            collusion = collusion_stats(state, set(ring),
                                        self.config.protocol.slot_selection)
        reciprocators = [(set(agent.identities), agent.spec.grudge_below, agent.name)
                         for agent in self.agents
                         if agent.spec.archetype == "reciprocator"]
        reciprocity = reciprocity_stats(entries, state, reciprocators,
                                        self.config.protocol.slot_selection) \
            if reciprocators else None

        pending = sorted(state.needs_assignment) \
            or [a.agreement_id for a in state.agreements.values()
                if a.state in ("created", "accepted")]
        deadlock = None
        if pending and self.config.duration - self._last_activity >= 5:
            deadlock = {
                "last_activity_tick": self._last_activity,
                "unassigned_submissions": sorted(state.needs_assignment),
                "open_agreements": [a.agreement_id for a in state.agreements.values()
                                    if a.state in ("created", "accepted")],
                "note": "no agent produced ledger activity while work was pending",
            }

        return {
            "seed": self.config.seed,
            "duration": self.config.duration,
            "config": self.config.to_dict(),
            "ticks": self._ticks,
            "agents": agents_out,
            "submissions": submissions_out,
            "tasks": {
                "posted": len(state.tasks),
                "open": statuses.count("open"),
                "agreed": statuses.count("agreed"),
                "submitted": statuses.count("submitted"),
                "evaluated": statuses.count("evaluated"),
                "cancelled": statuses.count("cancelled"),
            },
            "consensus": {
                "rounds_total": len(results),
                "failures": sum(1 for r in results if not r.reached),
                "forced": sum(1 for r in results if r.forced),
                "zero_rep_fallbacks": sum(1 for f in state.finals.values()
                                          if f.unweighted_fallback),
                "assignment_retries_failed": self._assign_failures,
                "audit": {str(sid): audit_record(state, sid)
                          for sid in sorted(state.submissions)},
            },
            "gas": {
                "entries": len(entries),
                "total": total_gas,
                "usd": str(cost_usd(total_gas, self.config.gas_price_gwei,
                                    self.config.ether_usd)),
                "by_kind": by_kind,
            },
            "collusion": collusion,
            "reciprocity": reciprocity,
            "adversary_advantage": advantage,
            "conservation_residual": state.conservation_residual(),
            "chain": {"entries": len(entries), "verified": verification.ok},
            "state_root": state.state_root().hex(),
            "deadlock": deadlock,
        }


def _substream(seed: int, name: str) -> int:
    from ..crypto import keccak256
    return int.from_bytes(keccak256(seed.to_bytes(8, "big") + name.encode()), "big")


def run_scenario(config: ScenarioConfig) -> SimResult:
    return Simulation(config).run()


def _atomic_write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_outputs(result: SimResult, out_dir: str, fmt: str = "both",
                  dump_content: bool = False) -> list[str]:
    """Write report/metrics/trace files atomically; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, "report.json")
        _atomic_write_text(path, result.report_json())
        written.append(path)
    if fmt in ("csv", "both"):
        path = os.path.join(out_dir, "metrics.csv")
        _atomic_write_text(path, result.metrics_csv())
        written.append(path)
        path = os.path.join(out_dir, "cost_report.csv")
        _atomic_write_text(path, result.cost_csv())
        written.append(path)
    trace = os.path.join(out_dir, "trace.bin")
    ledger_mod.write_snapshot(result.entries, trace)
    written.extend([trace, trace + ".sidecar.json"])
    if dump_content:
        from ..submission import dump_store
        content_dir = os.path.join(out_dir, "content")
        dump_store(result.node.state, content_dir)
        written.append(content_dir)
    return written
