"""Agent archetypes.

Each agent owns one or more platform identities and a private RNG
substream; every decision is a deterministic function of (scenario
seed, agent name, observable chain state). Workers carry a true work
quality; evaluators read the truth out of the revealed plaintext and
then apply their archetype's scoring policy, honest or otherwise.
"""

from __future__ import annotations

import random
from typing import TYPE_CHECKING, Optional

from .. import canon
from ..accounts import ROLE_POSTER, ROLE_WORKER, stats
from ..errors import BelowThreshold, DomainError, InsufficientEvaluators
from ..evaluation import has_pending_submission
from ..params import SCALE
from .config import AgentSpec, ETHER

if TYPE_CHECKING:
    from .runner import Simulation


def clamp_score(value: int) -> int:
    return max(1, min(100, value))


class Agent:
    adversary = False

    def __init__(self, name: str, spec: AgentSpec, rng: random.Random):
        self.name = name
        self.spec = spec
        self.rng = rng
        self.identities: list[bytes] = []      # all ids ever held, in order
        self.active: list[bytes] = []          # currently registered ids
        self.generation = 0
        self.plaintexts: dict[int, bytes] = {}     # submission -> plaintext
        self.work_due: dict[int, int] = {}         # agreement -> completion tick

    # ------------------------------------------------------------ identity

    def sort_key(self) -> bytes:
        if self.active:
            return min(self.active)
        from ..crypto import keccak256
        return keccak256(b"unregistered/" + self.name.encode())[:20]

    def _register(self, sim: "Simulation", role: str) -> bytes:
        key = sim.node.keygen(f"{sim.config.seed}/{self.name}/{self.generation}".encode())
        self.generation += 1
        endowment = self.spec.endowment if self.spec.endowment is not None \
            else sim.default_endowment(role)
        fee = sim.node.params.registration_fee
        if role == ROLE_WORKER:
            account = sim.node.register_worker(key, self.spec.skills, fee, endowment)
        else:
            account = sim.node.register_poster(key, fee, endowment)
        self.identities.append(account)
        self.active.append(account)
        sim.adopt(account, self)
        return account

    def act(self, sim: "Simulation") -> None:
        raise NotImplementedError


class PosterAgent(Agent):
    archetype = "honest_poster"

    def act(self, sim: "Simulation") -> None:
        node = sim.node
        state = node.state
        if not self.active:
            self._register(sim, ROLE_POSTER)
        me = self.active[0]
        plan = sim.config.tasks
        posted = 0
        while sim.tasks_remaining > 0 and posted < plan.per_poster_per_tick:
            node.post_task(me, f"task by {self.name}", plan.skills, plan.reward,
                           plan.w_c, plan.w_q)
            sim.tasks_remaining -= 1
            posted += 1
        # hire on tasks whose application window has closed
        for task_id in sorted(state.tasks):
            task = state.tasks[task_id]
            if task.poster != me or task.status != "open" or not task.applicants:
                continue
            if state.clock - task.posted_at < plan.apply_window:
                continue
            pick = self._choose_applicant(sim, task)
            if pick is None:
                continue
            if state.accounts[me].wallet < task.reward:
                continue
            fee = task.reward * node.params.acceptance_fee_frac // SCALE
            node.create_agreement(me, task_id, pick, task.reward, fee,
                                  state.clock + plan.accept_window,
                                  state.clock + plan.due_window)
        # settle whatever finished evaluating
        for agreement_id in sorted(state.agreements):
            agreement = state.agreements[agreement_id]
            if agreement.poster != me or agreement.state != "accepted":
                continue
            sub = state.submission_for_agreement(agreement_id)
            if sub is not None and sub.submission_id in state.finals:
                node.settle(agreement_id)

    def _choose_applicant(self, sim: "Simulation", task) -> Optional[bytes]:
        state = sim.node.state
        candidates = []
        for worker in task.applicants:
            account = state.accounts.get(worker)
            if account is None or not account.is_active_worker:
                continue
            if sim.worker_spoken_for(worker):
                continue
            candidates.append((-account.reputation, worker))
        if not candidates:
            return None
        candidates.sort()
        return candidates[0][1]


class WorkerAgent(Agent):
    """Honest baseline; adversarial workers override the scoring policy
    and (optionally) add an end-of-turn move."""

    archetype = "honest_worker"

    def act(self, sim: "Simulation") -> None:
        if not self.active:
            self._register(sim, ROLE_WORKER)
        for account in list(self.active):
            self._turn(sim, account)
        self.extra_move(sim)

    # one identity's full turn
    def _turn(self, sim: "Simulation", me: bytes) -> None:
        node = sim.node
        state = node.state
        account = state.accounts[me]
        if account.status != "active":
            return
        self._maybe_enroll(sim, me)
        self._accept_work(sim, me)
        self._deliver_work(sim, me)
        self._reveal_pending(sim, me)
        self._evaluate_assigned(sim, me)
        self._apply_to_tasks(sim, me)

    def _maybe_enroll(self, sim: "Simulation", me: bytes) -> None:
        state = sim.node.state
        if me in state.volunteers:
            return
        try:
            sim.node.become_evaluator(me)
        except BelowThreshold:
            pass

    def _accept_work(self, sim: "Simulation", me: bytes) -> None:
        node = sim.node
        state = node.state
        if sim.worker_busy(me):
            return
        for agreement_id in sorted(state.agreements):
            agreement = state.agreements[agreement_id]
            if (agreement.worker != me or agreement.state != "created"
                    or state.clock > agreement.acceptance_deadline):
                continue
            if state.accounts[me].wallet < agreement.acceptance_fee:
                continue
            node.accept(me, agreement_id, agreement.acceptance_fee)
            self.work_due[agreement_id] = state.clock + self.rng.randint(
                *self.spec.work_ticks)
            break  # one job at a time

    def _deliver_work(self, sim: "Simulation", me: bytes) -> None:
        node = sim.node
        state = node.state
        for agreement_id in sorted(state.agreements):
            agreement = state.agreements[agreement_id]
            if agreement.worker != me or agreement.state != "accepted":
                continue
            if state.submission_for_agreement(agreement_id) is not None:
                continue
            due_tick = self.work_due.get(agreement_id, state.clock)
            if state.clock < min(due_tick, agreement.due_date):
                continue
            truth_c = clamp_score(self.spec.quality_mean
                                  + self.rng.randint(-self.spec.quality_spread,
                                                     self.spec.quality_spread))
            truth_q = clamp_score(self.spec.quality_mean
                                  + self.rng.randint(-self.spec.quality_spread,
                                                     self.spec.quality_spread))
            plaintext = canon.encode({
                "agreement": agreement_id, "c": truth_c, "q": truth_q,
                "nonce": self.rng.getrandbits(64),
            })
            sid, _keys = node.commit(me, agreement_id, node.commitment_for(plaintext))
            self.plaintexts[sid] = plaintext

    def _reveal_pending(self, sim: "Simulation", me: bytes) -> None:
        from ..submission import revealed_for_round
        node = sim.node
        state = node.state
        for sid in sorted(self.plaintexts):
            submission = state.submissions.get(sid)
            if submission is None or submission.worker != me:
                continue
            if submission.round >= 1 and not submission.evaluated \
                    and not revealed_for_round(state, submission):
                node.reveal(me, sid, self.plaintexts[sid])

    def _evaluate_assigned(self, sim: "Simulation", me: bytes) -> None:
        from ..submission import revealed_for_round
        node = sim.node
        state = node.state
        for sid in sorted(state.submissions):
            submission = state.submissions[sid]
            if submission.evaluated or submission.round < 1:
                continue
            pool = state.pools[sid][submission.round - 1]
            if me not in pool.selected:
                continue
            sheet = state.sheets[sid][submission.round - 1]
            if me in sheet.scored():
                continue
            if not revealed_for_round(state, submission):
                continue  # current panel not fully served yet
            plaintext = node.fetch_for_evaluator(me, sid)
            truth = canon.decode(plaintext)
            c, q = self.score(sim, submission.worker, truth["c"], truth["q"])
            node.submit_evaluation(me, sid, c, q)

    def _apply_to_tasks(self, sim: "Simulation", me: bytes) -> None:
        node = sim.node
        state = node.state
        offered = set(self.spec.skills)
        for task_id in sorted(state.tasks):
            task = state.tasks[task_id]
            if task.status != "open" or me in task.applicants:
                continue
            if not set(task.skills_required) <= offered:
                continue
            node.apply_task(me, task_id)

    # ------------------------------------------------------------ policy

    def honest(self, truth_c: int, truth_q: int) -> tuple[int, int]:
        noise = self.spec.eval_noise
        return (clamp_score(truth_c + self.rng.randint(-noise, noise)),
                clamp_score(truth_q + self.rng.randint(-noise, noise)))

    def score(self, sim: "Simulation", submitter: bytes,
              truth_c: int, truth_q: int) -> tuple[int, int]:
        return self.honest(truth_c, truth_q)

    def extra_move(self, sim: "Simulation") -> None:
        pass


class ColluderAgent(WorkerAgent):
    """One ring with every other colluder in the scenario: inflate ring
    submissions, deflate configured targets, stay honest otherwise so
    the ring is not trivially detectable."""

    archetype = "colluder"
    adversary = True

    def score(self, sim, submitter, truth_c, truth_q):
        owner = sim.owner_of(submitter)
        if owner is not None and owner.archetype == "colluder":
            return self.spec.inflate_to, self.spec.inflate_to
        if owner is not None and owner.name in self.spec.targets:
            return self.spec.deflate_to, self.spec.deflate_to
        return self.honest(truth_c, truth_q)


class BadMoutherAgent(WorkerAgent):
    archetype = "bad_mouther"
    adversary = True

    def score(self, sim, submitter, truth_c, truth_q):
        owner = sim.owner_of(submitter)
        if owner is not None and owner.name in self.spec.targets:
            return self.spec.deflate_to, self.spec.deflate_to
        return self.honest(truth_c, truth_q)


class BallotStufferAgent(WorkerAgent):
    """Indiscriminate positive bias: rates every submission at the top
    hoping the favor comes back."""

    archetype = "ballot_stuffer"
    adversary = True

    def score(self, sim, submitter, truth_c, truth_q):
        return self.spec.inflate_to, self.spec.inflate_to


class SybilSpawnerAgent(WorkerAgent):
    """Registers several identities at once (each paying the full entry
    fee) that inflate each other's submissions."""

    archetype = "sybil_spawner"
    adversary = True

    def act(self, sim: "Simulation") -> None:
        while len(self.active) < self.spec.identities:
            self._register(sim, ROLE_WORKER)
        for account in list(self.active):
            self._turn(sim, account)

    def score(self, sim, submitter, truth_c, truth_q):
        if submitter in self.active:
            return self.spec.inflate_to, self.spec.inflate_to
        return self.honest(truth_c, truth_q)


class ReEntrantAgent(WorkerAgent):
    """Abandons an identity once its reputation sinks below the
    threshold and re-registers fresh, paying the entry fee again."""

    archetype = "re_entrant"
    adversary = True

    def extra_move(self, sim: "Simulation") -> None:
        node = sim.node
        state = node.state
        if not self.active:
            return
        me = self.active[0]
        account = state.accounts[me]
        if account.status != "active" or account.reputation >= self.spec.exit_below:
            return
        try:
            node.exit(me)
        except DomainError:
            return  # open obligations; try again later
        self.active.remove(me)
        # fresh identity next turn; drop stale per-identity bookkeeping
        self.work_due.clear()


class ReciprocatorAgent(WorkerAgent):
    """Remembers accounts that scored its submissions low and pays them
    back in kind when assigned to their work."""

    archetype = "reciprocator"
    adversary = True

    def __init__(self, name, spec, rng):
        super().__init__(name, spec, rng)
        self.grudges: set[bytes] = set()

    def act(self, sim: "Simulation") -> None:
        self._update_grudges(sim)
        super().act(sim)

    def _update_grudges(self, sim: "Simulation") -> None:
        state = sim.node.state
        mine = set(self.active)
        for sid, sheets in state.sheets.items():
            if state.submissions[sid].worker not in mine:
                continue
            for sheet in sheets:
                for evaluator, c, q, _ in sheet.entries:
                    if c < self.spec.grudge_below or q < self.spec.grudge_below:
                        self.grudges.add(evaluator)

    def score(self, sim, submitter, truth_c, truth_q):
        if submitter in self.grudges:
            return self.spec.deflate_to, self.spec.deflate_to
        return self.honest(truth_c, truth_q)


AGENT_CLASSES: dict[str, type[Agent]] = {
    "honest_poster": PosterAgent,
    "honest_worker": WorkerAgent,
    "colluder": ColluderAgent,
    "bad_mouther": BadMoutherAgent,
    "ballot_stuffer": BallotStufferAgent,
    "sybil_spawner": SybilSpawnerAgent,
    "re_entrant": ReEntrantAgent,
    "reciprocator": ReciprocatorAgent,
}
