"""Append-only, hash-chained, signed transaction log.

The ledger is the single source of truth: every state mutation is an
entry, and platform state is a pure fold over the entry list (see
state.py). Entries chain by digest, are signed by their sender, and
record the gas the operation cost.

Chain verification is self-contained: registration entries establish
the key they are signed with, so a verifier needs nothing beyond the
entry list itself.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from . import canon
from .crypto import MacSigner, SignatureScheme, ZERO_DIGEST, account_id_for, keccak256
from .errors import InvalidChain, SerializationFailure

# entry kinds whose signature key comes from the payload itself; the
# genesis entry doubles as the system account's registration
SELF_REGISTERING_KINDS = frozenset({"genesis", "create_worker", "create_taskposter"})

SNAPSHOT_MAGIC = b"CRLEDGER1\n"


@dataclass(frozen=True)
class LedgerEntry:
    index: int
    prev_hash: bytes
    payload: bytes          # canonical operation descriptor
    sender: bytes           # 20-byte account id
    signature: bytes
    gas_charged: int
    entry_hash: bytes

    @property
    def kind(self) -> str:
        return self.args()["op"]

    def args(self) -> dict[str, Any]:
        decoded = canon.decode(self.payload)
        if not isinstance(decoded, dict) or "op" not in decoded:
            raise SerializationFailure("payload is not an operation descriptor")
        return decoded


def signing_message(index: int, prev_hash: bytes, payload: bytes) -> bytes:
    return canon.encode([index, prev_hash, payload])


def compute_entry_hash(index: int, prev_hash: bytes, payload: bytes, sender: bytes,
                       signature: bytes, gas_charged: int) -> bytes:
    return keccak256(canon.encode([index, prev_hash, payload, sender, signature, gas_charged]))


def encode_payload(kind: str, args: dict[str, Any]) -> bytes:
    descriptor = dict(args)
    descriptor["op"] = kind
    return canon.encode(descriptor)


class Ledger:
    """Single-writer entry list. Appends are strictly ordered; any
    prefix may be read concurrently."""

    def __init__(self, signer: SignatureScheme | None = None):
        self.signer: SignatureScheme = signer or MacSigner()
        self.entries: list[LedgerEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def head_hash(self) -> bytes:
        return self.entries[-1].entry_hash if self.entries else ZERO_DIGEST

    def append(self, kind: str, args: dict[str, Any], sender: bytes,
               signing_key: bytes, gas_charged: int) -> LedgerEntry:
        payload = encode_payload(kind, args)
        index = len(self.entries)
        prev_hash = self.head_hash
        signature = self.signer.sign(signing_key, signing_message(index, prev_hash, payload))
        entry_hash = compute_entry_hash(index, prev_hash, payload, sender,
                                        signature, gas_charged)
        entry = LedgerEntry(index=index, prev_hash=prev_hash, payload=payload,
                            sender=sender, signature=signature,
                            gas_charged=gas_charged, entry_hash=entry_hash)
        self.entries.append(entry)
        return entry

    def verify(self) -> "VerificationReport":
        return verify_chain(self.entries, self.signer)


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    bad_index: int | None = None
    reason: str | None = None

    def describe(self) -> str:
        if self.ok:
            return "ok"
        return f"bad entry at index {self.bad_index}: {self.reason}"


def verify_chain(entries: Sequence[LedgerEntry],
                 signer: SignatureScheme | None = None) -> VerificationReport:
    """Check hash linkage, entry digests, and signatures.

    Walks the chain once, learning registered keys from registration
    payloads as it goes. Reports the first violation.
    """
    signer = signer or MacSigner()
    keys: dict[bytes, bytes] = {}
    prev_hash = ZERO_DIGEST
    for i, entry in enumerate(entries):
        if entry.index != i:
            return VerificationReport(False, i, f"index {entry.index}, expected {i}")
        if entry.prev_hash != prev_hash:
            return VerificationReport(False, i, "hash-mismatch: broken prev_hash link")
        recomputed = compute_entry_hash(entry.index, entry.prev_hash, entry.payload,
                                        entry.sender, entry.signature, entry.gas_charged)
        if recomputed != entry.entry_hash:
            return VerificationReport(False, i, "hash-mismatch: entry hash does not match fields")
        try:
            args = entry.args()
            kind = args["op"]
        except SerializationFailure:
            return VerificationReport(False, i, "payload does not decode")
        if kind in SELF_REGISTERING_KINDS:
            public_key = args.get("public_key")
            if not isinstance(public_key, bytes):
                return VerificationReport(False, i, "registration payload lacks a public key")
            if entry.sender != account_id_for(public_key):
                return VerificationReport(False, i, "sender does not match registered key digest")
            verification_key = public_key
        else:
            verification_key = keys.get(entry.sender)
            if verification_key is None:
                return VerificationReport(False, i, "sender has no registered key")
        message = signing_message(entry.index, entry.prev_hash, entry.payload)
        if not signer.verify(verification_key, message, entry.signature):
            return VerificationReport(False, i, "signature does not verify")
        if kind in SELF_REGISTERING_KINDS:
            keys[entry.sender] = args["public_key"]
        prev_hash = entry.entry_hash
    return VerificationReport(True)


def entries_to_bytes(entries: Iterable[LedgerEntry]) -> bytes:
    rows = [[e.index, e.prev_hash, e.payload, e.sender, e.signature, e.gas_charged,
             e.entry_hash] for e in entries]
    return SNAPSHOT_MAGIC + canon.encode(rows)


def entries_from_bytes(data: bytes) -> list[LedgerEntry]:
    if not data.startswith(SNAPSHOT_MAGIC):
        raise InvalidChain("not a ledger snapshot (bad magic)")
    try:
        rows = canon.decode(data[len(SNAPSHOT_MAGIC):])
    except SerializationFailure as exc:
        raise InvalidChain(f"snapshot does not decode: {exc}") from exc
    entries = []
    for row in rows:
        if not (isinstance(row, list) and len(row) == 7):
            raise InvalidChain("snapshot row has wrong shape")
        entries.append(LedgerEntry(index=row[0], prev_hash=row[1], payload=row[2],
                                   sender=row[3], signature=row[4], gas_charged=row[5],
                                   entry_hash=row[6]))
    return entries


def _atomic_write(path: str, data: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_snapshot(entries: Sequence[LedgerEntry], path: str,
                   sidecar: bool = True) -> None:
    """Write the binary trace plus a JSON sidecar index for humans."""
    _atomic_write(path, entries_to_bytes(entries))
    if sidecar:
        index = [{"index": e.index, "op": e.kind, "sender": e.sender.hex(),
                  "gas": e.gas_charged} for e in entries]
        _atomic_write(path + ".sidecar.json",
                      json.dumps(index, indent=2, sort_keys=True).encode() + b"\n")


def read_snapshot(path: str) -> list[LedgerEntry]:
    with open(path, "rb") as fh:
        return entries_from_bytes(fh.read())
