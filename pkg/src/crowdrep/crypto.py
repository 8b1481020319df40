"""Digests, account keys, signatures, and the two-layer submission envelope.

Keccak-256 is the protocol digest: entry hashes, commitments, and
content addresses all use it. The signature scheme and envelope cipher
are pluggable; the defaults are *simulation-grade* constructions (keyed
MAC, keyed stream transform) whose job is to make the protocol's access
structure and tamper-evidence exactly enforceable in-process. They are
not production cryptography and the module says so on purpose.
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass
from typing import Protocol

from ._keccak import keccak256
from .errors import AuthFailure

__all__ = [
    "keccak256",
    "ZERO_DIGEST",
    "KeyPair",
    "account_id_for",
    "SignatureScheme",
    "MacSigner",
    "EnvelopeCipher",
    "StreamEnvelopeCipher",
]

ZERO_DIGEST = b"\x00" * 32
ACCOUNT_ID_BYTES = 20


@dataclass(frozen=True)
class KeyPair:
    """Verification key as registered on the ledger, plus the signing
    secret. The default scheme is symmetric, so both halves coincide;
    a real asymmetric scheme slots in behind the same interface."""

    public: bytes
    secret: bytes


def account_id_for(public_key: bytes) -> bytes:
    """Account identifier: trailing 20 bytes of the key digest."""
    return keccak256(public_key)[-ACCOUNT_ID_BYTES:]


class SignatureScheme(Protocol):
    def keygen(self, seed: bytes) -> KeyPair: ...

    def sign(self, secret: bytes, message: bytes) -> bytes: ...

    def verify(self, public: bytes, message: bytes, signature: bytes) -> bool: ...


class MacSigner:
    """Default scheme: deterministic keyed MAC over the message.

    The registered "public key" doubles as the MAC key, so any holder
    of the chain can verify every entry; within the simulation nobody
    forges because all writes flow through the protocol API.
    """

    name = "keyed-mac"

    def keygen(self, seed: bytes) -> KeyPair:
        key = keccak256(seed + b"/account-key")
        return KeyPair(public=key, secret=key)

    def sign(self, secret: bytes, message: bytes) -> bytes:
        return keccak256(secret + message)

    def verify(self, public: bytes, message: bytes, signature: bytes) -> bool:
        return hmac.compare_digest(keccak256(public + message), signature)


class EnvelopeCipher(Protocol):
    """Two-layer envelope: confidentiality keyed to the recipient,
    authenticity keyed to the sender, in that order."""

    def seal(self, recipient_public: bytes, sender_secret: bytes, plaintext: bytes) -> bytes: ...

    def open(self, recipient_secret: bytes, sender_public: bytes, envelope: bytes) -> bytes: ...


def _keystream_xor(key: bytes, data: bytes) -> bytes:
    out = bytearray(len(data))
    block = 0
    filled = 0
    while filled < len(data):
        pad = keccak256(key + block.to_bytes(8, "big"))
        take = min(32, len(data) - filled)
        chunk = data[filled:filled + take]
        for i in range(take):
            out[filled + i] = chunk[i] ^ pad[i]
        filled += take
        block += 1
    return bytes(out)


class StreamEnvelopeCipher:
    """Default envelope: keccak-keyed stream transform plus a keyed tag.

    envelope = tag(32) || ciphertext. Simulation-grade only; real
    confidentiality against platform observers is out of scope.
    """

    name = "sim-stream"

    def seal(self, recipient_public: bytes, sender_secret: bytes, plaintext: bytes) -> bytes:
        ciphertext = _keystream_xor(recipient_public, plaintext)
        tag = keccak256(sender_secret + ciphertext)
        return tag + ciphertext

    def open(self, recipient_secret: bytes, sender_public: bytes, envelope: bytes) -> bytes:
        if len(envelope) < 32:
            raise AuthFailure("envelope too short")
        tag, ciphertext = envelope[:32], envelope[32:]
        if not hmac.compare_digest(keccak256(sender_public + ciphertext), tag):
            raise AuthFailure("sender tag does not verify")
        return _keystream_xor(recipient_secret, ciphertext)
