"""Platform state as a pure fold over the ledger.

Every operation kind maps to a (check, apply) pair. `check` validates
preconditions against the current state without mutating; `apply`
mutates and cannot fail once `check` passed. Replaying the same entry
list therefore always lands on the same state, byte for byte - the
state root is a digest of the canonical serialization of every module's
state.

The state root uses SHA3-256 from hashlib: it digests hundreds of
kilobytes per assignment seed, and unlike entry hashes, commitments,
and content addresses it is internal plumbing with no protocol-level
digest requirement.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from . import accounts, agreement, canon, evaluation, marketplace, submission
from .accounts import UserAccount
from .agreement import Agreement
from .crypto import EnvelopeCipher, StreamEnvelopeCipher, account_id_for
from .errors import DomainError, InvalidChain, SerializationFailure, UnknownSender
from .evaluation import ConsensusResult, EvaluatorPool, FinalScore, ScoreSheet
from .ledger import LedgerEntry, SELF_REGISTERING_KINDS, verify_chain
from .marketplace import Task
from .params import ProtocolParams
from .submission import ContentStore, Submission


class NotFound(DomainError):
    """Lookup of a task/agreement/submission/account id failed."""


class PlatformState:
    """Mutable platform state; construct via `initial` and evolve only
    through `apply_entry` (or the Node front end that wraps it)."""

    def __init__(self, params: ProtocolParams | None = None,
                 cipher: EnvelopeCipher | None = None):
        self.params = params or ProtocolParams()
        self.cipher: EnvelopeCipher = cipher or StreamEnvelopeCipher()
        self.clock = 0
        self.system_account: bytes | None = None
        self.accounts: dict[bytes, UserAccount] = {}
        self.key_index: dict[bytes, bytes] = {}      # public key -> account id
        self.tasks: dict[int, Task] = {}
        self.agreements: dict[int, Agreement] = {}
        self.submissions: dict[int, Submission] = {}
        self.store = ContentStore()
        self.pools: dict[int, list[EvaluatorPool]] = {}
        self.sheets: dict[int, list[ScoreSheet]] = {}
        self.consensus: dict[int, list[ConsensusResult]] = {}
        self.finals: dict[int, FinalScore] = {}
        self.volunteers: set[bytes] = set()
        self.credits: dict[bytes, list[int]] = {}
        self.pending_rep: dict[bytes, list[int]] = {}
        self.needs_assignment: set[int] = set()
        self.platform_pool = 0
        self.endowment_in = 0
        self.next_task_id = 0
        self.next_agreement_id = 0
        self.next_submission_id = 0
        self.events: list[dict[str, Any]] = []
        # derived cache, rebuilt by the fold; not part of canonical state
        self._submission_index: dict[int, int] = {}

    # ------------------------------------------------------------ lookups

    def account(self, account_id: bytes) -> UserAccount:
        try:
            return self.accounts[account_id]
        except KeyError:
            raise NotFound(f"no account {account_id.hex()}") from None

    def task(self, task_id: int) -> Task:
        try:
            return self.tasks[task_id]
        except KeyError:
            raise NotFound(f"no task {task_id}") from None

    def agreement(self, agreement_id: int) -> Agreement:
        try:
            return self.agreements[agreement_id]
        except KeyError:
            raise NotFound(f"no agreement {agreement_id}") from None

    def submission(self, submission_id: int) -> Submission:
        try:
            return self.submissions[submission_id]
        except KeyError:
            raise NotFound(f"no submission {submission_id}") from None

    def submission_for_agreement(self, agreement_id: int) -> Submission | None:
        sid = self._submission_index.get(agreement_id)
        return self.submissions[sid] if sid is not None else None

    def emit(self, event: str, **details: Any) -> None:
        record: dict[str, Any] = {"time": self.clock, "event": event}
        record.update(details)
        self.events.append(record)

    # ------------------------------------------------------- conservation

    def conservation_residual(self) -> int:
        """Endowments in, minus every place currency can sit. Zero, always."""
        held = sum(a.wallet + a.deposit for a in self.accounts.values())
        in_escrow = sum(ag.escrow + ag.worker_deposit for ag in self.agreements.values())
        return self.endowment_in - held - in_escrow - self.platform_pool

    # --------------------------------------------------------- state root

    def canonical(self) -> dict[str, Any]:
        """Every module's state, canonically shaped. The event stream is
        a report interface, not module state, and stays out of the root
        (replay still rebuilds it identically)."""
        return {
            "params": self.params.to_args(),
            "clock": self.clock,
            "system_account": self.system_account,
            "accounts": {aid: a.to_canon() for aid, a in self.accounts.items()},
            "tasks": {str(tid): t.to_canon() for tid, t in self.tasks.items()},
            "agreements": {str(aid): a.to_canon() for aid, a in self.agreements.items()},
            "submissions": {str(sid): s.to_canon() for sid, s in self.submissions.items()},
            "store": {addr: self.store.get(addr) for addr in self.store.addresses()},
            "pools": {str(sid): [p.to_canon() for p in rounds]
                      for sid, rounds in self.pools.items()},
            "sheets": {str(sid): [s.to_canon() for s in rounds]
                       for sid, rounds in self.sheets.items()},
            "consensus": {str(sid): [r.to_canon() for r in rounds]
                          for sid, rounds in self.consensus.items()},
            "finals": {str(sid): f.to_canon() for sid, f in self.finals.items()},
            "volunteers": sorted(self.volunteers),
            "credits": {w: list(c) for w, c in self.credits.items() if c},
            "pending_rep": {w: list(p) for w, p in self.pending_rep.items() if p},
            "needs_assignment": sorted(self.needs_assignment),
            "platform_pool": self.platform_pool,
            "endowment_in": self.endowment_in,
            "counters": [self.next_task_id, self.next_agreement_id, self.next_submission_id],
        }

    def canonical_bytes(self) -> bytes:
        return canon.encode(self.canonical())

    def state_root(self) -> bytes:
        return hashlib.sha3_256(self.canonical_bytes()).digest()

    # -------------------------------------------------------------- fold

    def check_entry_payload(self, kind: str, sender: bytes, args: dict[str, Any]) -> None:
        if kind not in HANDLERS:
            raise SerializationFailure(f"unknown operation kind {kind!r}")
        if kind not in SELF_REGISTERING_KINDS:
            if sender != self.system_account and sender not in self.accounts:
                raise UnknownSender(f"sender {sender.hex()} is not registered")
        check, _ = HANDLERS[kind]
        check(self, sender, args)

    def apply_entry_payload(self, kind: str, sender: bytes, args: dict[str, Any]) -> Any:
        _, apply = HANDLERS[kind]
        return apply(self, sender, args)

    def apply_entry(self, entry: LedgerEntry) -> Any:
        args = entry.args()
        kind = args.pop("op")
        self.check_entry_payload(kind, entry.sender, args)
        return self.apply_entry_payload(kind, entry.sender, args)


# ------------------------------------------------------------------ genesis

def check_genesis(state: PlatformState, sender: bytes, args: dict[str, Any]) -> None:
    if state.system_account is not None:
        raise SerializationFailure("genesis entry already applied")
    if sender != account_id_for(args["public_key"]):
        raise UnknownSender("genesis sender must match the system key digest")
    ProtocolParams.from_args(args["params"])  # validates


def apply_genesis(state: PlatformState, sender: bytes, args: dict[str, Any]) -> None:
    state.params = ProtocolParams.from_args(args["params"])
    state.system_account = sender


# ------------------------------------------------------------------ dispatch

Check = Callable[[PlatformState, bytes, dict], None]
Apply = Callable[[PlatformState, bytes, dict], Any]

HANDLERS: dict[str, tuple[Check, Apply]] = {
    "genesis": (check_genesis, apply_genesis),
    "create_worker": (accounts.check_register, accounts.apply_register),
    "create_taskposter": (accounts.check_register, accounts.apply_register),
    "exit_account": (accounts.check_exit, accounts.apply_exit),
    "post_task": (marketplace.check_post_task, marketplace.apply_post_task),
    "apply_task": (marketplace.check_apply, marketplace.apply_apply),
    "create_agreement": (agreement.check_create, agreement.apply_create),
    "accept_agreement": (agreement.check_accept, agreement.apply_accept),
    "cancel_agreement": (agreement.check_cancel, agreement.apply_cancel),
    "settle_agreement": (agreement.check_settle, agreement.apply_settle),
    "tick": (agreement.check_tick, agreement.apply_tick),
    "submit_hash": (submission.check_commit, submission.apply_commit),
    "reveal_submission": (submission.check_reveal, submission.apply_reveal),
    "assign_evaluators": (evaluation.check_assign, evaluation.apply_assign),
    "become_evaluator": (evaluation.check_become_evaluator, evaluation.apply_become_evaluator),
}

for _kind in ("first_evaluation_submit", "second_evaluation_submit", "third_evaluation_submit"):
    HANDLERS[_kind] = (
        (lambda k: lambda state, sender, args: evaluation.check_submit_evaluation(
            state, sender, args, k))(_kind),
        evaluation.apply_submit_evaluation,
    )


# -------------------------------------------------------------------- replay

def replay(entries: Iterable[LedgerEntry], cipher: EnvelopeCipher | None = None,
           verify: bool = True) -> PlatformState:
    """Fold an entry list into a fresh PlatformState.

    Deterministic: the same list always produces the same state root,
    on any host. With `verify`, chain integrity is checked first and a
    broken chain raises InvalidChain.
    """
    entries = list(entries)
    if verify:
        report = verify_chain(entries)
        if not report.ok:
            raise InvalidChain(report.describe())
    state = PlatformState()
    for entry in entries:
        state.apply_entry(entry)
    return state
