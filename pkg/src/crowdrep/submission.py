"""Commit-reveal submission flow over a content-addressed store.

The worker commits a digest of the work before the evaluator panel is
known, then reveals one two-layer envelope per assigned evaluator:
confidentiality keyed to the evaluator, authenticity keyed to the
worker. Envelope bytes travel in the reveal entry so the store is fully
reproducible from the chain.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from .crypto import keccak256
from .errors import (
    AlreadyCommitted,
    CommitmentMismatch,
    NotAccepted,
    NotAssigned,
    NotCommitted,
    PastDue,
    WrongCaller,
)

if TYPE_CHECKING:
    from .state import PlatformState


class ContentStore:
    """Append-only map from keccak-256 address to immutable payload."""

    def __init__(self) -> None:
        self._blobs: dict[bytes, bytes] = {}

    def put(self, payload: bytes) -> bytes:
        address = keccak256(payload)
        self._blobs.setdefault(address, payload)
        return address

    def get(self, address: bytes) -> bytes:
        return self._blobs[address]

    def __contains__(self, address: bytes) -> bool:
        return address in self._blobs

    def __len__(self) -> int:
        return len(self._blobs)

    def addresses(self) -> list[bytes]:
        return sorted(self._blobs)

    def dump(self, directory: str) -> None:
        """Write each blob to a file named by its hex address."""
        os.makedirs(directory, exist_ok=True)
        for address in self.addresses():
            with open(os.path.join(directory, address.hex()), "wb") as fh:
                fh.write(self._blobs[address])


@dataclass
class Submission:
    submission_id: int
    agreement_id: int
    task_id: int
    worker: bytes
    commitment: bytes
    encrypted_refs: dict[bytes, bytes] = field(default_factory=dict)  # evaluator -> address
    round: int = 0             # current evaluation round; 0 until assigned
    evaluated: bool = False
    committed_at: int = 0

    def to_canon(self) -> dict[str, Any]:
        return {
            "submission_id": self.submission_id,
            "agreement_id": self.agreement_id,
            "task_id": self.task_id,
            "worker": self.worker,
            "commitment": self.commitment,
            "encrypted_refs": dict(self.encrypted_refs),
            "round": self.round,
            "evaluated": self.evaluated,
            "committed_at": self.committed_at,
        }


def revealed_for_round(state: "PlatformState", submission: Submission) -> bool:
    """True once every current-round evaluator has an envelope."""
    if submission.round < 1:
        return False
    pool = state.pools[submission.submission_id][submission.round - 1]
    return all(e in submission.encrypted_refs for e in pool.selected)


def check_commit(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    agreement = state.agreement(args["agreement_id"])
    if agreement.state != "accepted":
        raise NotAccepted(f"agreement {agreement.agreement_id} is {agreement.state}")
    if sender != agreement.worker:
        raise WrongCaller("only the agreement worker commits")
    if state.clock > agreement.due_date:
        raise PastDue(f"due date {agreement.due_date} has passed")
    if state.submission_for_agreement(agreement.agreement_id) is not None:
        raise AlreadyCommitted(f"agreement {agreement.agreement_id} already has a commitment")
    if not (isinstance(args["commitment"], bytes) and len(args["commitment"]) == 32):
        raise CommitmentMismatch("commitment must be a 256-bit digest")


def apply_commit(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> Submission:
    agreement = state.agreements[args["agreement_id"]]
    submission = Submission(
        submission_id=state.next_submission_id,
        agreement_id=agreement.agreement_id,
        task_id=agreement.task_id,
        worker=sender,
        commitment=args["commitment"],
        committed_at=state.clock,
    )
    state.next_submission_id += 1
    state.submissions[submission.submission_id] = submission
    state._submission_index[agreement.agreement_id] = submission.submission_id
    state.tasks[agreement.task_id].status = "submitted"
    state.needs_assignment.add(submission.submission_id)
    state.emit("committed", submission=submission.submission_id,
               agreement=agreement.agreement_id)
    return submission


def check_reveal(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> None:
    submission = state.submission(args["submission_id"])
    if sender != submission.worker:
        raise WrongCaller("only the submitting worker reveals")
    if submission.round < 1:
        raise NotAssigned("no evaluators assigned yet")
    pool = state.pools[submission.submission_id][submission.round - 1]
    uncovered = [e for e in pool.selected if e not in submission.encrypted_refs]
    provided = [evaluator for evaluator, _ in args["envelopes"]]
    if sorted(provided) != sorted(uncovered):
        raise NotAssigned("envelopes must cover exactly the unserved assigned evaluators")


def apply_reveal(state: "PlatformState", sender: bytes, args: dict[str, Any]) -> list[bytes]:
    submission = state.submissions[args["submission_id"]]
    addresses = []
    for evaluator, envelope in args["envelopes"]:
        address = state.store.put(envelope)
        submission.encrypted_refs[evaluator] = address
        addresses.append(address)
    state.emit("revealed", submission=submission.submission_id,
               addresses=[a.hex() for a in addresses])
    return addresses


def build_envelopes(state: "PlatformState", submission: Submission, plaintext: bytes,
                    worker_secret: bytes) -> list[tuple[bytes, bytes]]:
    """Seal the plaintext once per unserved assigned evaluator.

    Raises CommitmentMismatch when the plaintext does not hash to the
    recorded commitment: the off-chain half of the binding check.
    """
    if keccak256(plaintext) != submission.commitment:
        raise CommitmentMismatch("plaintext digest does not match the commitment")
    if submission.round < 1:
        raise NotAssigned("no evaluators assigned yet")
    pool = state.pools[submission.submission_id][submission.round - 1]
    envelopes = []
    for evaluator in pool.selected:
        if evaluator in submission.encrypted_refs:
            continue
        recipient_key = state.accounts[evaluator].public_key
        envelopes.append((evaluator, state.cipher.seal(recipient_key, worker_secret, plaintext)))
    return envelopes


def fetch_for_evaluator(state: "PlatformState", evaluator: bytes, submission_id: int,
                        evaluator_secret: bytes) -> bytes:
    """Decrypt and authenticate the envelope addressed to `evaluator`.

    Pure read. Only assigned evaluators hold an envelope; everyone else
    gets NotAssigned regardless of what keys they present.
    """
    submission = state.submission(submission_id)
    address = submission.encrypted_refs.get(evaluator)
    if address is None:
        raise NotAssigned(f"{evaluator.hex()} is not assigned to submission {submission_id}")
    envelope = state.store.get(address)
    worker_key = state.accounts[submission.worker].public_key
    plaintext = state.cipher.open(evaluator_secret, worker_key, envelope)
    if keccak256(plaintext) != submission.commitment:
        raise CommitmentMismatch("decrypted payload does not match the commitment")
    return plaintext


def store_manifest(state: "PlatformState") -> dict[str, Any]:
    """submission -> evaluator -> content address, for the store dump."""
    manifest: dict[str, Any] = {}
    for sid in sorted(state.submissions):
        submission = state.submissions[sid]
        manifest[str(sid)] = {
            evaluator.hex(): address.hex()
            for evaluator, address in sorted(submission.encrypted_refs.items())
        }
    return manifest


def dump_store(state: "PlatformState", directory: str) -> None:
    state.store.dump(os.path.join(directory, "blobs"))
    manifest = store_manifest(state)
    path = os.path.join(directory, "manifest.json")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
