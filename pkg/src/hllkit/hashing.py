"""Murmur3 hashing at 32-bit and 64-bit output widths.

The scalar routines accept arbitrary byte strings and are bit-exact to the
canonical x86_32 and x64_128 reference implementations by Austin Appleby
(checked against the SMHasher verification constants in the test suite).
The 64-bit hash is the first output word (h1) of the x64_128 variant, the
conventional way a 64-bit value is derived from the 128-bit output.

The ``*_words`` routines hash whole numpy arrays of 32-bit words, each word
taken in its 4-byte little-endian form, and return exactly what the scalar
routine would return for ``struct.pack("<I", word)``. They exist because
the stream pipeline moves 32-bit words and a per-word Python call would
dominate the runtime.
"""

from __future__ import annotations

import struct

import numpy as np

__all__ = [
    "murmur3_32",
    "murmur3_64",
    "murmur3_x64_128",
    "murmur3_32_words",
    "murmur3_64_words",
]

_MASK32 = 0xFFFFFFFF
_MASK64 = 0xFFFFFFFFFFFFFFFF

# x86_32 mixing constants
_C1_32 = 0xCC9E2D51
_C2_32 = 0x1B873593

# x64_128 mixing constants
_C1_64 = 0x87C37B91114253D5
_C2_64 = 0x4CF5AD432745937F


def murmur3_32(data: bytes, seed: int = 0) -> int:
    """MurmurHash3 x86_32 of ``data``; returns an unsigned 32-bit integer."""
    h = seed & _MASK32
    n = len(data)
    nblock_bytes = n & ~3
    for (k,) in struct.iter_unpack("<I", data[:nblock_bytes]):
        k = (k * _C1_32) & _MASK32
        k = ((k << 15) | (k >> 17)) & _MASK32
        k = (k * _C2_32) & _MASK32
        h ^= k
        h = ((h << 13) | (h >> 19)) & _MASK32
        h = (h * 5 + 0xE6546B64) & _MASK32
    tail = data[nblock_bytes:]
    if tail:
        k = int.from_bytes(tail, "little")
        k = (k * _C1_32) & _MASK32
        k = ((k << 15) | (k >> 17)) & _MASK32
        k = (k * _C2_32) & _MASK32
        h ^= k
    h ^= n
    h ^= h >> 16
    h = (h * 0x85EBCA6B) & _MASK32
    h ^= h >> 13
    h = (h * 0xC2B2AE35) & _MASK32
    h ^= h >> 16
    return h


def _fmix64(k: int) -> int:
    k ^= k >> 33
    k = (k * 0xFF51AFD7ED558CCD) & _MASK64
    k ^= k >> 33
    k = (k * 0xC4CEB9FE1A85EC53) & _MASK64
    k ^= k >> 33
    return k


def murmur3_x64_128(data: bytes, seed: int = 0) -> int:
    """MurmurHash3 x64_128 of ``data`` as a 128-bit integer.

    The canonical implementation emits h1 then h2 as little-endian 64-bit
    words; here the same output is packed as ``(h2 << 64) | h1``.
    """
    h1 = h2 = seed & _MASK32
    n = len(data)
    nblock_bytes = n & ~15
    for k1, k2 in struct.iter_unpack("<QQ", data[:nblock_bytes]):
        k1 = (k1 * _C1_64) & _MASK64
        k1 = ((k1 << 31) | (k1 >> 33)) & _MASK64
        k1 = (k1 * _C2_64) & _MASK64
        h1 ^= k1
        h1 = ((h1 << 27) | (h1 >> 37)) & _MASK64
        h1 = (h1 + h2) & _MASK64
        h1 = (h1 * 5 + 0x52DCE729) & _MASK64
        k2 = (k2 * _C2_64) & _MASK64
        k2 = ((k2 << 33) | (k2 >> 31)) & _MASK64
        k2 = (k2 * _C1_64) & _MASK64
        h2 ^= k2
        h2 = ((h2 << 31) | (h2 >> 33)) & _MASK64
        h2 = (h2 + h1) & _MASK64
        h2 = (h2 * 5 + 0x38495AB5) & _MASK64
    tail = data[nblock_bytes:]
    if len(tail) > 8:
        k2 = int.from_bytes(tail[8:], "little")
        k2 = (k2 * _C2_64) & _MASK64
        k2 = ((k2 << 33) | (k2 >> 31)) & _MASK64
        k2 = (k2 * _C1_64) & _MASK64
        h2 ^= k2
    if tail:
        k1 = int.from_bytes(tail[:8], "little")
        k1 = (k1 * _C1_64) & _MASK64
        k1 = ((k1 << 31) | (k1 >> 33)) & _MASK64
        k1 = (k1 * _C2_64) & _MASK64
        h1 ^= k1
    h1 ^= n
    h2 ^= n
    h1 = (h1 + h2) & _MASK64
    h2 = (h2 + h1) & _MASK64
    h1 = _fmix64(h1)
    h2 = _fmix64(h2)
    h1 = (h1 + h2) & _MASK64
    h2 = (h2 + h1) & _MASK64
    return (h2 << 64) | h1


def murmur3_64(data: bytes, seed: int = 0) -> int:
    """Low 64 bits (first output word) of MurmurHash3 x64_128."""
    return murmur3_x64_128(data, seed) & _MASK64


def murmur3_32_words(words: np.ndarray, seed: int = 0) -> np.ndarray:
    """x86_32 hash of each uint32 word, taken as 4 little-endian bytes.

    A 4-byte input is exactly one body block with no tail, so the whole
    round unrolls to a fixed chain of uint32 operations. The chain runs
    in place on two buffers; batch throughput is memory-bound.
    """
    h = np.array(words, dtype=np.uint32)
    scratch = np.empty_like(h)
    h *= np.uint32(_C1_32)
    np.right_shift(h, np.uint32(17), out=scratch)
    h <<= np.uint32(15)
    h |= scratch
    h *= np.uint32(_C2_32)
    h ^= np.uint32(seed & _MASK32)
    np.right_shift(h, np.uint32(19), out=scratch)
    h <<= np.uint32(13)
    h |= scratch
    h *= np.uint32(5)
    h += np.uint32(0xE6546B64)
    h ^= np.uint32(4)  # len
    np.right_shift(h, np.uint32(16), out=scratch)
    h ^= scratch
    h *= np.uint32(0x85EBCA6B)
    np.right_shift(h, np.uint32(13), out=scratch)
    h ^= scratch
    h *= np.uint32(0xC2B2AE35)
    np.right_shift(h, np.uint32(16), out=scratch)
    h ^= scratch
    return h


def _fmix64_inplace(k: np.ndarray, scratch: np.ndarray) -> None:
    np.right_shift(k, np.uint64(33), out=scratch)
    k ^= scratch
    k *= np.uint64(0xFF51AFD7ED558CCD)
    np.right_shift(k, np.uint64(33), out=scratch)
    k ^= scratch
    k *= np.uint64(0xC4CEB9FE1A85EC53)
    np.right_shift(k, np.uint64(33), out=scratch)
    k ^= scratch


def murmur3_64_words(words: np.ndarray, seed: int = 0) -> np.ndarray:
    """First x64_128 output word for each uint32 word (4 LE bytes each).

    With a 4-byte input the body loop is empty and only the k1 tail path
    runs; h2 stays at the scalar seed until finalization. Three buffers,
    all mixing in place.
    """
    h1 = np.asarray(words, dtype=np.uint32).astype(np.uint64)
    h2 = np.empty_like(h1)
    scratch = np.empty_like(h1)
    # tail: k1 mixed into h1, then both halves xor the length (4)
    h1 *= np.uint64(_C1_64)
    np.right_shift(h1, np.uint64(33), out=scratch)
    h1 <<= np.uint64(31)
    h1 |= scratch
    h1 *= np.uint64(_C2_64)
    seeded = np.uint64((seed & _MASK32) ^ 4)
    h1 ^= seeded
    h1 += seeded  # h1 += h2 while h2 is still scalar
    np.add(h1, seeded, out=h2)  # h2 += h1
    _fmix64_inplace(h1, scratch)
    _fmix64_inplace(h2, scratch)
    h1 += h2
    return h1
