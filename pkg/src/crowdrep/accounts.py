"""User accounts: registration with the anti-Sybil entry deposit, role
management, reputation bookkeeping, and exit settlement.

Handlers here mutate PlatformState and are invoked only through the
ledger fold (state.apply_entry) or the Node front end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from .crypto import account_id_for
from .errors import (
    AlreadyExited,
    DuplicateKey,
    InsufficientDeposit,
    InsufficientFunds,
    NotAWorker,
    OpenObligations,
)
from .params import NEW_WORKER_REPUTATION

if TYPE_CHECKING:
    from .state import PlatformState

ROLE_WORKER = "worker"
ROLE_POSTER = "task_poster"


@dataclass
class UserAccount:
    account_id: bytes
    role: str
    public_key: bytes
    profile_ref: bytes
    reputation: int          # scaled; new workers start at 1.0000, posters stay 0
    deposit: int             # registration deposit held by the platform
    skills: tuple[str, ...]
    status: str = "active"   # active | exited
    wallet: int = 0          # external funds, tracked for conservation

    @property
    def is_active_worker(self) -> bool:
        return self.role == ROLE_WORKER and self.status == "active"

    def to_canon(self) -> dict[str, Any]:
        return {
            "account_id": self.account_id,
            "role": self.role,
            "public_key": self.public_key,
            "profile_ref": self.profile_ref,
            "reputation": self.reputation,
            "deposit": self.deposit,
            "skills": list(self.skills),
            "status": self.status,
            "wallet": self.wallet,
        }


@dataclass(frozen=True)
class PlatformStats:
    avg_worker_reputation: int   # scaled, floored mean over active workers
    active_worker_count: int


def stats(state: "PlatformState") -> PlatformStats:
    reps = [a.reputation for a in state.accounts.values() if a.is_active_worker]
    if not reps:
        return PlatformStats(0, 0)
    return PlatformStats(sum(reps) // len(reps), len(reps))


def check_register(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    role = args["role"]
    if role not in (ROLE_WORKER, ROLE_POSTER):
        raise NotAWorker(f"unknown role {role!r}")
    public_key = args["public_key"]
    deposit_paid = args["deposit_paid"]
    endowment = args["endowment"]
    if deposit_paid < state.params.registration_fee:
        raise InsufficientDeposit(
            f"deposit {deposit_paid} below registration fee {state.params.registration_fee}")
    if endowment < deposit_paid:
        raise InsufficientFunds("endowment does not cover the deposit")
    if public_key in state.key_index:
        raise DuplicateKey("public key already registered")
    if sender != account_id_for(public_key):
        raise DuplicateKey("sender id does not match the key digest")


def apply_register(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> UserAccount:
    role = args["role"]
    account = UserAccount(
        account_id=sender,
        role=role,
        public_key=args["public_key"],
        profile_ref=args["profile_ref"],
        reputation=NEW_WORKER_REPUTATION if role == ROLE_WORKER else 0,
        deposit=args["deposit_paid"],
        skills=tuple(sorted(args["skills"])),
        wallet=args["endowment"] - args["deposit_paid"],
    )
    state.accounts[sender] = account
    state.key_index[account.public_key] = sender
    state.endowment_in += args["endowment"]
    state.emit("registered", account=sender, role=role)
    return account


def _open_obligations(state: "PlatformState", account_id: bytes) -> str | None:
    for agreement in state.agreements.values():
        if agreement.state in ("created", "accepted") and account_id in (agreement.poster, agreement.worker):
            return f"agreement {agreement.agreement_id} is {agreement.state}"
    for submission in state.submissions.values():
        if submission.worker == account_id and not submission.evaluated:
            return f"submission {submission.submission_id} awaits evaluation"
        if not submission.evaluated and submission.round >= 1:
            pool = state.pools[submission.submission_id][submission.round - 1]
            if account_id in pool.selected:
                sheet = state.sheets[submission.submission_id][submission.round - 1]
                scored = {entry[0] for entry in sheet.entries}
                if len(scored) < len(pool.selected):
                    return f"selected evaluator on submission {submission.submission_id}"
    return None


def check_exit(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    account = state.account(sender)
    if account.status == "exited":
        raise AlreadyExited(f"account {sender.hex()} already exited")
    reason = _open_obligations(state, sender)
    if reason is not None:
        raise OpenObligations(reason)


def exit_refund(deposit: int, reputation: int, avg_reputation: int) -> int:
    """Refund fraction min(1, reputation / platform average), floored.

    A degenerate average (no peers, or everyone at zero) refunds in
    full: the exiting account is not below its own cohort.
    """
    if avg_reputation == 0 or reputation >= avg_reputation:
        return deposit
    return (deposit * reputation) // avg_reputation


def apply_exit(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> int:
    account = state.accounts[sender]
    if account.role == ROLE_WORKER:
        platform = stats(state)
        refund = exit_refund(account.deposit, account.reputation, platform.avg_worker_reputation)
    else:
        refund = account.deposit
    retained = account.deposit - refund
    account.wallet += refund
    account.deposit = 0
    account.status = "exited"
    state.platform_pool += retained
    state.volunteers.discard(sender)
    state.credits.pop(sender, None)
    state.pending_rep.pop(sender, None)
    state.emit("exited", account=sender, refund=refund, retained=retained)
    return refund


def update_reputation(state: "PlatformState", account_id: bytes, delta: int) -> int:
    """Apply a signed scaled delta, flooring at zero. Only evaluation
    settlement and this helper ever touch reputation."""
    account = state.account(account_id)
    if not account.is_active_worker:
        raise NotAWorker(f"{account_id.hex()} is not an active worker")
    account.reputation = max(0, account.reputation + delta)
    return account.reputation


def roster(state: "PlatformState") -> list[dict[str, Any]]:
    """JSON-ready account listing."""
    rows = []
    for account in sorted(state.accounts.values(), key=lambda a: a.account_id):
        rows.append({
            "account_id": account.account_id.hex(),
            "role": account.role,
            "reputation": account.reputation,
            "deposit": account.deposit,
            "status": account.status,
        })
    return rows
