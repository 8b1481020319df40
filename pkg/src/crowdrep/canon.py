"""Canonical binary encoding used for ledger payloads, digests, and
state serialization.

Self-describing, length-prefixed, big-endian format over a closed value
universe: None, bool, int (arbitrary precision), bytes, str, sequences,
and mappings. Mappings serialize with entries sorted by their encoded
key bytes, so two structurally equal values always produce identical
bytes regardless of insertion order. Decoding is strict: unknown tags
or trailing bytes fail.
"""

from __future__ import annotations

from typing import Any

from .errors import SerializationFailure

_TAG_NONE = b"N"
_TAG_TRUE = b"T"
_TAG_FALSE = b"F"
_TAG_INT = b"I"
_TAG_BYTES = b"B"
_TAG_STR = b"S"
_TAG_LIST = b"L"
_TAG_DICT = b"D"

# string keys repeat heavily (field names); memoize their encodings
_KEY_CACHE: dict[str, bytes] = {}


def _encode_into(value: Any, out: bytearray) -> None:
    if value is None:
        out += _TAG_NONE
    elif value is True:
        out += _TAG_TRUE
    elif value is False:
        out += _TAG_FALSE
    elif isinstance(value, int):
        out += _TAG_INT
        out += b"\x01" if value < 0 else b"\x00"
        mag = abs(value)
        body = mag.to_bytes((mag.bit_length() + 7) // 8, "big") if mag else b""
        out += len(body).to_bytes(4, "big")
        out += body
    elif isinstance(value, (bytes, bytearray, memoryview)):
        data = bytes(value)
        out += _TAG_BYTES
        out += len(data).to_bytes(4, "big")
        out += data
    elif isinstance(value, str):
        data = value.encode("utf-8")
        out += _TAG_STR
        out += len(data).to_bytes(4, "big")
        out += data
    elif isinstance(value, (list, tuple)):
        out += _TAG_LIST
        out += len(value).to_bytes(4, "big")
        for item in value:
            _encode_into(item, out)
    elif isinstance(value, dict):
        pairs = []
        for key, item in value.items():
            cached = _KEY_CACHE.get(key) if type(key) is str else None
            if cached is None:
                buf = bytearray()
                _encode_into(key, buf)
                cached = bytes(buf)
                if type(key) is str and len(_KEY_CACHE) < 4096:
                    _KEY_CACHE[key] = cached
            pairs.append((cached, item))
        pairs.sort(key=lambda kv: kv[0])
        out += _TAG_DICT
        out += len(pairs).to_bytes(4, "big")
        for key_bytes, item in pairs:
            out += key_bytes
            _encode_into(item, out)
    else:
        raise SerializationFailure(f"cannot canonically encode {type(value).__name__}")


def encode(value: Any) -> bytes:
    out = bytearray()
    _encode_into(value, out)
    return bytes(out)


def _decode_at(data: bytes, pos: int) -> tuple[Any, int]:
    if pos >= len(data):
        raise SerializationFailure("truncated value")
    tag = data[pos:pos + 1]
    pos += 1
    if tag == _TAG_NONE:
        return None, pos
    if tag == _TAG_TRUE:
        return True, pos
    if tag == _TAG_FALSE:
        return False, pos
    if tag == _TAG_INT:
        if pos + 5 > len(data):
            raise SerializationFailure("truncated int")
        negative = data[pos] == 1
        length = int.from_bytes(data[pos + 1:pos + 5], "big")
        pos += 5
        if pos + length > len(data):
            raise SerializationFailure("truncated int body")
        mag = int.from_bytes(data[pos:pos + length], "big") if length else 0
        return (-mag if negative else mag), pos + length
    if tag in (_TAG_BYTES, _TAG_STR):
        if pos + 4 > len(data):
            raise SerializationFailure("truncated length")
        length = int.from_bytes(data[pos:pos + 4], "big")
        pos += 4
        if pos + length > len(data):
            raise SerializationFailure("truncated body")
        body = data[pos:pos + length]
        pos += length
        if tag == _TAG_BYTES:
            return body, pos
        try:
            return body.decode("utf-8"), pos
        except UnicodeDecodeError as exc:
            raise SerializationFailure("invalid utf-8") from exc
    if tag == _TAG_LIST:
        if pos + 4 > len(data):
            raise SerializationFailure("truncated count")
        count = int.from_bytes(data[pos:pos + 4], "big")
        pos += 4
        items = []
        for _ in range(count):
            item, pos = _decode_at(data, pos)
            items.append(item)
        return items, pos
    if tag == _TAG_DICT:
        if pos + 4 > len(data):
            raise SerializationFailure("truncated count")
        count = int.from_bytes(data[pos:pos + 4], "big")
        pos += 4
        result: dict[Any, Any] = {}
        prev_key = b""
        for _ in range(count):
            key_start = pos
            key, pos = _decode_at(data, pos)
            key_bytes = data[key_start:pos]
            if key_bytes <= prev_key:
                raise SerializationFailure("dict keys out of canonical order")
            prev_key = key_bytes
            value, pos = _decode_at(data, pos)
            result[key] = value
        return result, pos
    raise SerializationFailure(f"unknown tag {tag!r}")


def decode(data: bytes) -> Any:
    value, pos = _decode_at(data, 0)
    if pos != len(data):
        raise SerializationFailure(f"{len(data) - pos} trailing bytes")
    return value
