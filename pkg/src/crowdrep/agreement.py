"""Escrowed poster-worker agreements: reward escrow, acceptance deposit,
deadline enforcement, and settlement.

Currency is conserved exactly across an agreement's lifetime:
escrow + worker_deposit = reward_paid + fee_returned + poster_remainder
in every terminal state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

from . import reputation
from .errors import (
    BadDeadlines,
    Expired,
    InsufficientFunds,
    NotAccepted,
    NotAnApplicant,
    NotEvaluated,
    TaskNotOpen,
    WrongCaller,
    WrongDeposit,
    WrongEscrowAmount,
)

if TYPE_CHECKING:
    from .state import PlatformState


@dataclass
class Agreement:
    agreement_id: int
    task_id: int
    poster: bytes
    worker: bytes
    escrow: int
    acceptance_fee: int
    acceptance_deadline: int
    due_date: int
    state: str = "created"    # created | accepted | cancelled | defaulted | settled
    worker_deposit: int = 0
    created_at: int = 0

    def to_canon(self) -> dict[str, Any]:
        return {
            "agreement_id": self.agreement_id,
            "task_id": self.task_id,
            "poster": self.poster,
            "worker": self.worker,
            "escrow": self.escrow,
            "acceptance_fee": self.acceptance_fee,
            "acceptance_deadline": self.acceptance_deadline,
            "due_date": self.due_date,
            "state": self.state,
            "worker_deposit": self.worker_deposit,
            "created_at": self.created_at,
        }


def check_create(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    task = state.task(args["task_id"])
    if task.status != "open":
        raise TaskNotOpen(f"task {task.task_id} is {task.status}")
    if sender != task.poster:
        raise WrongCaller("only the task poster creates its agreement")
    if args["worker"] not in task.applicants:
        raise NotAnApplicant(f"{args['worker'].hex()} never applied to task {task.task_id}")
    worker = state.accounts.get(args["worker"])
    if worker is None or not worker.is_active_worker:
        raise NotAnApplicant("selected applicant is not an active worker")
    if args["escrow_paid"] != task.reward:
        raise WrongEscrowAmount(
            f"escrow {args['escrow_paid']} must equal the task reward {task.reward}")
    if not state.clock <= args["acceptance_deadline"] < args["due_date"]:
        raise BadDeadlines("need now <= acceptance_deadline < due_date")
    if args["acceptance_fee"] < 0:
        raise WrongDeposit("acceptance fee cannot be negative")
    if state.accounts[sender].wallet < args["escrow_paid"]:
        raise InsufficientFunds("poster wallet cannot cover the escrow")


def apply_create(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> Agreement:
    task = state.tasks[args["task_id"]]
    agreement = Agreement(
        agreement_id=state.next_agreement_id,
        task_id=task.task_id,
        poster=sender,
        worker=args["worker"],
        escrow=args["escrow_paid"],
        acceptance_fee=args["acceptance_fee"],
        acceptance_deadline=args["acceptance_deadline"],
        due_date=args["due_date"],
        created_at=state.clock,
    )
    state.next_agreement_id += 1
    state.agreements[agreement.agreement_id] = agreement
    state.accounts[sender].wallet -= agreement.escrow
    task.status = "agreed"
    state.emit("agreement_created", agreement=agreement.agreement_id,
               task=task.task_id, worker=agreement.worker)
    return agreement


def check_accept(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    agreement = state.agreement(args["agreement_id"])
    if state.clock > agreement.acceptance_deadline:
        raise Expired(f"acceptance deadline {agreement.acceptance_deadline} has passed")
    if agreement.state != "created":
        raise NotAccepted(f"agreement {agreement.agreement_id} is {agreement.state}")
    if sender != agreement.worker:
        # the impostor burns gas; nothing else changes
        raise WrongCaller("sender is not the named worker")
    if args["deposit_paid"] != agreement.acceptance_fee:
        raise WrongDeposit(
            f"deposit {args['deposit_paid']} must equal the acceptance fee {agreement.acceptance_fee}")
    if state.accounts[sender].wallet < args["deposit_paid"]:
        raise InsufficientFunds("worker wallet cannot cover the acceptance fee")


def apply_accept(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> Agreement:
    agreement = state.agreements[args["agreement_id"]]
    agreement.worker_deposit = args["deposit_paid"]
    agreement.state = "accepted"
    state.accounts[sender].wallet -= args["deposit_paid"]
    state.emit("agreement_accepted", agreement=agreement.agreement_id)
    return agreement


def check_cancel(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    agreement = state.agreement(args["agreement_id"])
    if sender != agreement.poster:
        raise WrongCaller("only the poster may cancel")
    if agreement.state != "created":
        # once accepted, the poster cannot kill the agreement
        raise NotAccepted(f"agreement {agreement.agreement_id} is {agreement.state}")


def apply_cancel(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> Agreement:
    agreement = state.agreements[args["agreement_id"]]
    _cancel(state, agreement, "cancelled_by_poster")
    return agreement


def _cancel(state: "PlatformState", agreement: Agreement, event: str) -> None:
    state.accounts[agreement.poster].wallet += agreement.escrow
    agreement.escrow = 0
    agreement.state = "cancelled"
    state.tasks[agreement.task_id].status = "cancelled"
    state.emit(event, agreement=agreement.agreement_id)


def check_tick(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    if sender != state.system_account:
        raise WrongCaller("tick entries come from the system account")
    if args["time"] < state.clock:
        raise BadDeadlines(f"time {args['time']} behind the clock {state.clock}")


def apply_tick(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> list[tuple[str, int]]:
    """Advance the clock and fire deadline transitions. Idempotent at a
    fixed timestamp: a second tick at the same time fires nothing."""
    state.clock = args["time"]
    fired: list[tuple[str, int]] = []
    committed = {s.agreement_id for s in state.submissions.values()}
    for agreement_id in sorted(state.agreements):
        agreement = state.agreements[agreement_id]
        if agreement.state == "created" and state.clock > agreement.acceptance_deadline:
            _cancel(state, agreement, "cancelled_by_deadline")
            fired.append(("cancelled", agreement_id))
        elif (agreement.state == "accepted" and state.clock > agreement.due_date
              and agreement_id not in committed):
            poster = state.accounts[agreement.poster]
            poster.wallet += agreement.escrow + agreement.worker_deposit
            agreement.escrow = 0
            agreement.worker_deposit = 0
            agreement.state = "defaulted"
            state.tasks[agreement.task_id].status = "cancelled"
            state.emit("defaulted", agreement=agreement_id)
            fired.append(("defaulted", agreement_id))
    return fired


def check_settle(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    agreement = state.agreement(args["agreement_id"])
    if sender != agreement.poster:
        raise WrongCaller("only the poster settles")
    if agreement.state != "accepted":
        raise NotAccepted(f"agreement {agreement.agreement_id} is {agreement.state}")
    submission = state.submission_for_agreement(agreement.agreement_id)
    if submission is None or submission.submission_id not in state.finals:
        raise NotEvaluated("evaluation has not finalized for this agreement")


def apply_settle(state: "PlatformState", sender: bytes,
                 args: dict[str, Any]) -> tuple[int, int, int]:
    agreement = state.agreements[args["agreement_id"]]
    submission = state.submission_for_agreement(agreement.agreement_id)
    final = state.finals[submission.submission_id]
    reward_paid = reputation.reward_for(final.final_score, agreement.escrow)
    fee_returned = reputation.fee_return_for(final.complete_score, agreement.worker_deposit)
    poster_remainder = agreement.escrow + agreement.worker_deposit - reward_paid - fee_returned
    worker = state.accounts[agreement.worker]
    worker.wallet += reward_paid + fee_returned
    state.accounts[agreement.poster].wallet += poster_remainder
    agreement.escrow = 0
    agreement.worker_deposit = 0
    agreement.state = "settled"
    state.tasks[agreement.task_id].status = "evaluated"
    state.emit("settled", agreement=agreement.agreement_id, reward=reward_paid,
               fee_returned=fee_returned, remainder=poster_remainder)
    return reward_paid, fee_returned, poster_remainder
