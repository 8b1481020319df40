"""Keccak-256 (original pad 0x01, not the SHA-3 variant in hashlib).

Pure-Python Keccak-f[1600] sponge with rate 1088 / capacity 512.
Inputs here are short (entry digests, commitments, content addresses),
so throughput is a non-issue; bulk state serialization uses a faster
digest elsewhere. The permutation is unrolled over a flattened lane
list for speed.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1

_ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A,
    0x8000000080008000, 0x000000000000808B, 0x0000000080000001,
    0x8000000080008081, 0x8000000000008009, 0x000000000000008A,
    0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089,
    0x8000000000008003, 0x8000000000008002, 0x8000000000000080,
    0x000000000000800A, 0x800000008000000A, 0x8000000080008081,
    0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

# rho rotation offsets, indexed x + 5*y
_ROTATIONS = (
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
)

# rho+pi combined: position i of the post-pi state B takes lanes[_PI_SOURCE[i]]
# rotated left by _PI_ROT[i]
def _build_pi_tables():
    source = [0] * 25
    rot = [0] * 25
    for x in range(5):
        for y in range(5):
            src = x + 5 * y
            dst = y + 5 * ((2 * x + 3 * y) % 5)
            source[dst] = src
            rot[dst] = _ROTATIONS[src]
    return tuple(source), tuple(rot)


_PI_SOURCE, _PI_ROT = _build_pi_tables()

_RATE_BYTES = 136  # (1600 - 2*256) / 8


def _keccak_f(lanes: list[int]) -> None:
    mask = _MASK
    pi_src = _PI_SOURCE
    pi_rot = _PI_ROT
    for rc in _ROUND_CONSTANTS:
        # theta
        c0 = lanes[0] ^ lanes[5] ^ lanes[10] ^ lanes[15] ^ lanes[20]
        c1 = lanes[1] ^ lanes[6] ^ lanes[11] ^ lanes[16] ^ lanes[21]
        c2 = lanes[2] ^ lanes[7] ^ lanes[12] ^ lanes[17] ^ lanes[22]
        c3 = lanes[3] ^ lanes[8] ^ lanes[13] ^ lanes[18] ^ lanes[23]
        c4 = lanes[4] ^ lanes[9] ^ lanes[14] ^ lanes[19] ^ lanes[24]
        d0 = c4 ^ (((c1 << 1) | (c1 >> 63)) & mask)
        d1 = c0 ^ (((c2 << 1) | (c2 >> 63)) & mask)
        d2 = c1 ^ (((c3 << 1) | (c3 >> 63)) & mask)
        d3 = c2 ^ (((c4 << 1) | (c4 >> 63)) & mask)
        d4 = c3 ^ (((c0 << 1) | (c0 >> 63)) & mask)
        for i in range(0, 25, 5):
            lanes[i] ^= d0
            lanes[i + 1] ^= d1
            lanes[i + 2] ^= d2
            lanes[i + 3] ^= d3
            lanes[i + 4] ^= d4
        # rho + pi
        b = [0] * 25
        for i in range(25):
            v = lanes[pi_src[i]]
            r = pi_rot[i]
            b[i] = ((v << r) | (v >> (64 - r))) & mask if r else v
        # chi
        for y in range(0, 25, 5):
            b0, b1, b2, b3, b4 = b[y], b[y + 1], b[y + 2], b[y + 3], b[y + 4]
            lanes[y] = b0 ^ (~b1 & b2)
            lanes[y + 1] = b1 ^ (~b2 & b3)
            lanes[y + 2] = b2 ^ (~b3 & b4)
            lanes[y + 3] = b3 ^ (~b4 & b0)
            lanes[y + 4] = b4 ^ (~b0 & b1)
        # iota
        lanes[0] ^= rc


def keccak256(data: bytes) -> bytes:
    """Digest `data` with Keccak-256 (pre-NIST padding)."""
    lanes = [0] * 25
    from_bytes = int.from_bytes
    # absorb full blocks
    offset = 0
    n = len(data)
    while n - offset >= _RATE_BYTES:
        for i in range(17):
            base = offset + 8 * i
            lanes[i] ^= from_bytes(data[base:base + 8], "little")
        _keccak_f(lanes)
        offset += _RATE_BYTES
    # pad10*1 with Keccak domain bit 0x01
    tail = bytearray(data[offset:])
    pad_len = _RATE_BYTES - len(tail)
    tail += b"\x01" + b"\x00" * (pad_len - 1)
    tail[-1] |= 0x80
    for i in range(17):
        lanes[i] ^= from_bytes(tail[8 * i:8 * i + 8], "little")
    _keccak_f(lanes)
    # squeeze 32 bytes
    return b"".join(lanes[i].to_bytes(8, "little") for i in range(4))
