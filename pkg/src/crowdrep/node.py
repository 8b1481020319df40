"""Single-writer front end: validates an operation against current
state, charges gas, appends the signed entry, then applies it.

A Node owns the ledger, the folded state, and a keyring of signing
secrets for the accounts driven through it. Everything a Node does is
reproducible by replaying its ledger.
"""

from __future__ import annotations

from typing import Any, Iterable

from .accounts import ROLE_POSTER, ROLE_WORKER
from .crypto import (
    EnvelopeCipher,
    KeyPair,
    MacSigner,
    SignatureScheme,
    StreamEnvelopeCipher,
    account_id_for,
    keccak256,
)
from .errors import InsufficientEvaluators, UnknownSender
from .gasmodel import GasSchedule, UNCHARGED_KINDS, evaluation_submit_kind
from .ledger import Ledger, LedgerEntry
from .params import ProtocolParams
from .state import PlatformState
from . import submission as submission_mod


class Node:
    def __init__(self, params: ProtocolParams | None = None,
                 signer: SignatureScheme | None = None,
                 cipher: EnvelopeCipher | None = None):
        self.params = params or ProtocolParams()
        self.params.validate()
        self.signer = signer or MacSigner()
        self.cipher = cipher or StreamEnvelopeCipher()
        self.ledger = Ledger(self.signer)
        self.state = PlatformState(self.params, self.cipher)
        self.schedule = GasSchedule.standard(dict(self.params.gas_overrides),
                                             self.params.default_gas)
        self.keyring: dict[bytes, bytes] = {}   # account id -> signing secret
        self.system_key: KeyPair | None = None

    @classmethod
    def create(cls, params: ProtocolParams | None = None, seed: int = 0,
               signer: SignatureScheme | None = None,
               cipher: EnvelopeCipher | None = None) -> "Node":
        """Start a chain: genesis entry carrying the protocol parameters
        and the system account key, so traces replay self-contained."""
        node = cls(params, signer, cipher)
        system_key = node.signer.keygen(seed.to_bytes(8, "big") + b"/system")
        node.system_key = system_key
        system_id = account_id_for(system_key.public)
        node.keyring[system_id] = system_key.secret
        node._submit("genesis", system_id,
                     {"params": node.params.to_args(), "public_key": system_key.public})
        return node

    # ------------------------------------------------------------ plumbing

    def _submit(self, kind: str, sender: bytes, args: dict[str, Any],
                signing_key: bytes | None = None) -> tuple[LedgerEntry, Any]:
        if signing_key is None:
            signing_key = self.keyring.get(sender)
            if signing_key is None:
                raise UnknownSender(f"no signing key for {sender.hex()}")
        self.state.check_entry_payload(kind, sender, args)
        gas = 0 if kind in UNCHARGED_KINDS else self.schedule.charge(kind)
        entry = self.ledger.append(kind, args, sender, signing_key, gas)
        result = self.state.apply_entry_payload(kind, sender, args)
        return entry, result

    @property
    def entries(self) -> list[LedgerEntry]:
        return self.ledger.entries

    # ------------------------------------------------------------ accounts

    def register(self, role: str, key: KeyPair, skills: Iterable[str],
                 deposit_paid: int, endowment: int,
                 profile_ref: bytes = b"\x00" * 32) -> bytes:
        sender = account_id_for(key.public)
        kind = "create_worker" if role == ROLE_WORKER else "create_taskposter"
        args = {
            "role": role,
            "public_key": key.public,
            "profile_ref": profile_ref,
            "skills": sorted(skills),
            "deposit_paid": deposit_paid,
            "endowment": endowment,
        }
        self.state.check_entry_payload(kind, sender, args)
        self.keyring[sender] = key.secret
        entry = self.ledger.append(kind, args, sender, key.secret, self.schedule.charge(kind))
        self.state.apply_entry_payload(kind, sender, args)
        return sender

    def register_worker(self, key: KeyPair, skills: Iterable[str], deposit_paid: int,
                        endowment: int, profile_ref: bytes = b"\x00" * 32) -> bytes:
        return self.register(ROLE_WORKER, key, skills, deposit_paid, endowment, profile_ref)

    def register_poster(self, key: KeyPair, deposit_paid: int, endowment: int,
                        profile_ref: bytes = b"\x00" * 32) -> bytes:
        return self.register(ROLE_POSTER, key, (), deposit_paid, endowment, profile_ref)

    def exit(self, account_id: bytes) -> int:
        _, refund = self._submit("exit_account", account_id, {})
        return refund

    # --------------------------------------------------------- marketplace

    def post_task(self, poster: bytes, title: str, skills: Iterable[str], reward: int,
                  w_c: int, w_q: int, metadata_ref: bytes = b"\x00" * 32) -> int:
        _, task = self._submit("post_task", poster, {
            "title": title, "skills": sorted(skills), "reward": reward,
            "metadata_ref": metadata_ref, "w_c": w_c, "w_q": w_q,
        })
        return task.task_id

    def apply_task(self, worker: bytes, task_id: int) -> set[bytes]:
        _, applicants = self._submit("apply_task", worker, {"task_id": task_id})
        return applicants

    # ---------------------------------------------------------- agreements

    def create_agreement(self, poster: bytes, task_id: int, worker: bytes,
                         escrow_paid: int, acceptance_fee: int,
                         acceptance_deadline: int, due_date: int) -> int:
        _, agreement = self._submit("create_agreement", poster, {
            "task_id": task_id, "worker": worker, "escrow_paid": escrow_paid,
            "acceptance_fee": acceptance_fee,
            "acceptance_deadline": acceptance_deadline, "due_date": due_date,
        })
        return agreement.agreement_id

    def accept(self, worker: bytes, agreement_id: int, deposit_paid: int) -> None:
        self._submit("accept_agreement", worker,
                     {"agreement_id": agreement_id, "deposit_paid": deposit_paid})

    def cancel_agreement(self, poster: bytes, agreement_id: int) -> None:
        self._submit("cancel_agreement", poster, {"agreement_id": agreement_id})

    def settle(self, agreement_id: int) -> tuple[int, int, int]:
        poster = self.state.agreement(agreement_id).poster
        _, result = self._submit("settle_agreement", poster, {"agreement_id": agreement_id})
        return result

    def tick(self, time: int) -> list[tuple[str, int]]:
        if self.state.system_account is None:
            raise UnknownSender("no system account; start the chain with Node.create")
        _, fired = self._submit("tick", self.state.system_account, {"time": time})
        return fired

    # ---------------------------------------------------------- submission

    def commit(self, worker: bytes, agreement_id: int,
               commitment: bytes) -> tuple[int, list[bytes] | None]:
        """Record the work digest, then trigger evaluator assignment.

        Returns the submission id and the assigned evaluators' public
        keys, or None when the pool is still too small (the assignment
        stays queued and can be retried).
        """
        _, sub = self._submit("submit_hash", worker,
                              {"agreement_id": agreement_id, "commitment": commitment})
        try:
            pool = self.assign_evaluators(sub.submission_id)
        except InsufficientEvaluators:
            return sub.submission_id, None
        keys = [self.state.accounts[e].public_key for e in pool.selected]
        return sub.submission_id, keys

    def assign_evaluators(self, submission_id: int):
        sub = self.state.submission(submission_id)
        _, pool = self._submit("assign_evaluators", sub.worker,
                               {"submission_id": submission_id})
        return pool

    def reveal(self, worker: bytes, submission_id: int, plaintext: bytes) -> list[bytes]:
        sub = self.state.submission(submission_id)
        secret = self.keyring[worker]
        envelopes = submission_mod.build_envelopes(self.state, sub, plaintext, secret)
        _, addresses = self._submit("reveal_submission", worker, {
            "submission_id": submission_id,
            "envelopes": [[evaluator, env] for evaluator, env in envelopes],
        })
        return addresses

    def fetch_for_evaluator(self, evaluator: bytes, submission_id: int) -> bytes:
        return submission_mod.fetch_for_evaluator(
            self.state, evaluator, submission_id, self.keyring[evaluator])

    # ---------------------------------------------------------- evaluation

    def become_evaluator(self, worker: bytes) -> None:
        self._submit("become_evaluator", worker, {})

    def submit_evaluation(self, evaluator: bytes, submission_id: int, c: int, q: int,
                          review_ref: bytes = b"\x00" * 32) -> None:
        sub = self.state.submission(submission_id)
        sheet = self.state.sheets[submission_id][sub.round - 1]
        pool = self.state.pools[submission_id][sub.round - 1]
        kind = evaluation_submit_kind(len(sheet.entries) + 1, len(pool.selected))
        self._submit(kind, evaluator, {
            "submission_id": submission_id, "c": c, "q": q, "review_ref": review_ref,
        })

    # ------------------------------------------------------------- helpers

    def keygen(self, seed: bytes) -> KeyPair:
        return self.signer.keygen(seed)

    def commitment_for(self, plaintext: bytes) -> bytes:
        return keccak256(plaintext)
