"""HyperLogLog register state and the aggregation phase.

A sketch is an array of 2**p registers, each holding the maximum rank seen
in its substream, where the rank of a hash remainder is its leading-zero
count plus one. The top p bits of each hash select the register; the
remaining bits feed the rank. Sketches over the same configuration merge
losslessly by bucket-wise max, so any partition of a stream aggregates to
the identical register state.

Registers are stored one byte each in a flat numpy array (values never
exceed hash_bits - p + 1 <= 61). ``footprint_bits`` reports the semantic
footprint with registers packed to their minimal width, which is what the
memory accounting is about, not how this implementation allocates.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .hashing import (
    murmur3_32,
    murmur3_32_words,
    murmur3_64,
    murmur3_64_words,
)

__all__ = [
    "MIN_PRECISION",
    "MAX_PRECISION",
    "HASH_WIDTHS",
    "SketchConfig",
    "HllSketch",
    "split_hash",
    "rank",
    "rank_words",
    "footprint_bits",
]

MIN_PRECISION = 4
MAX_PRECISION = 16
HASH_WIDTHS = (32, 64)

_SERIAL_MAGIC = b"HLLS"
_SERIAL_VERSION = 1
_SERIAL_HEADER = struct.Struct("<4sBBBI")  # magic, version, p, hash_bits, seed

# Batch updates are processed in slices this long so the hash kernel's
# buffers stay cache-resident; measured several times faster than
# unbounded slices at desk-scale batches.
_UPDATE_CHUNK_WORDS = 65536


@dataclass(frozen=True)
class SketchConfig:
    """Sketch parameters: index width p, hash output width, hash seed.

    Fixes the bucket count m = 2**p and the maximum observable rank
    hash_bits - p + 1.
    """

    p: int = 16
    hash_bits: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.p, int) or not MIN_PRECISION <= self.p <= MAX_PRECISION:
            raise ValueError(
                f"precision p={self.p!r} outside [{MIN_PRECISION}:{MAX_PRECISION}]"
            )
        if self.hash_bits not in HASH_WIDTHS:
            raise ValueError(f"hash width must be one of {HASH_WIDTHS}, got {self.hash_bits!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**32:
            raise ValueError(f"seed {self.seed!r} does not fit in an unsigned 32-bit int")

    @property
    def num_buckets(self) -> int:
        return 1 << self.p

    @property
    def max_rank(self) -> int:
        return self.hash_bits - self.p + 1


def split_hash(h: int, p: int, hash_bits: int) -> tuple[int, int]:
    """Split an H-bit hash into (bucket index, remainder).

    The index is the top p bits, the remainder the low H - p bits, so
    ``(index << (H - p)) | remainder`` reconstructs the hash.
    """
    shift = hash_bits - p
    return h >> shift, h & ((1 << shift) - 1)


def rank(w: int, width: int) -> int:
    """Leading zeros of ``w`` within a ``width``-bit field, plus one."""
    return width - w.bit_length() + 1


def rank_words(w: np.ndarray, width: int) -> np.ndarray:
    """Vectorized ``rank`` over an unsigned integer array.

    Smears the top set bit downward, then a popcount gives the bit length;
    w == 0 falls out naturally as rank == width + 1.
    """
    return _rank_words_consuming(w.copy(), width)


def _rank_words_consuming(x: np.ndarray, width: int) -> np.ndarray:
    """rank_words that owns (and destroys) its input buffer."""
    scratch = np.empty_like(x)
    shift = 1
    while shift < width:
        np.right_shift(x, x.dtype.type(shift), out=scratch)
        x |= scratch
        shift <<= 1
    bit_length = np.bitwise_count(x)
    np.subtract(np.uint8(width + 1), bit_length, out=bit_length)
    return bit_length


def footprint_bits(p: int, hash_bits: int) -> int:
    """Semantic memory footprint in bits: 2**p registers of minimal width.

    Register width is ceil(log2(hash_bits - p + 1)) bits, rounded up to
    whole bits, the way memory accounting for packed register files does.
    """
    config = SketchConfig(p=p, hash_bits=hash_bits)
    register_bits = (config.max_rank - 1).bit_length()
    return config.num_buckets * register_bits


class HllSketch:
    """Mergeable HyperLogLog register state.

    Registers depend only on the set of items inserted: insertion order and
    duplicates never change the state. A sketch has a single-writer
    contract; concurrent updates to one instance are not supported.
    """

    __slots__ = ("config", "registers")

    def __init__(self, config: SketchConfig, registers: np.ndarray | None = None):
        self.config = config
        if registers is None:
            registers = np.zeros(config.num_buckets, dtype=np.uint8)
        self.registers = registers

    def update(self, item: bytes) -> None:
        """Fold one item (an arbitrary byte string) into the sketch."""
        config = self.config
        if config.hash_bits == 32:
            h = murmur3_32(item, config.seed)
        else:
            h = murmur3_64(item, config.seed)
        index, w = split_hash(h, config.p, config.hash_bits)
        r = rank(w, config.hash_bits - config.p)
        if r > self.registers[index]:
            self.registers[index] = r

    def update_words(self, words) -> None:
        """Fold a batch of 32-bit words, each hashed in its 4-byte LE form.

        Register-identical to calling ``update(struct.pack("<I", w))`` per
        word; this is the fast path the pipeline and profiler run on.
        """
        config = self.config
        words = np.asarray(words, dtype=np.uint32)
        shift = config.hash_bits - config.p
        for lo in range(0, words.size, _UPDATE_CHUNK_WORDS):
            piece = words[lo : lo + _UPDATE_CHUNK_WORDS]
            if config.hash_bits == 32:
                h = murmur3_32_words(piece, config.seed)
                index = h >> np.uint32(shift)
                h &= np.uint32((1 << shift) - 1)
            else:
                h = murmur3_64_words(piece, config.seed)
                index = h >> np.uint64(shift)
                h &= np.uint64((1 << shift) - 1)
            ranks = _rank_words_consuming(h, shift)
            np.maximum.at(self.registers, index, ranks)

    def merge(self, other: "HllSketch") -> "HllSketch":
        """Bucket-wise max with another sketch; neither input is modified."""
        for field in ("p", "hash_bits", "seed"):
            mine = getattr(self.config, field)
            theirs = getattr(other.config, field)
            if mine != theirs:
                raise ValueError(
                    f"cannot merge sketches: {field} differs ({mine} vs {theirs})"
                )
        return HllSketch(self.config, np.maximum(self.registers, other.registers))

    def copy(self) -> "HllSketch":
        return HllSketch(self.config, self.registers.copy())

    def register_equal(self, other: "HllSketch") -> bool:
        """True when configs match and every register is identical."""
        return self.config == other.config and bool(
            np.array_equal(self.registers, other.registers)
        )

    def to_bytes(self) -> bytes:
        """Serialize: 11-byte header then one byte per register."""
        header = _SERIAL_HEADER.pack(
            _SERIAL_MAGIC,
            _SERIAL_VERSION,
            self.config.p,
            self.config.hash_bits,
            self.config.seed,
        )
        return header + self.registers.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "HllSketch":
        """Inverse of ``to_bytes``; round-trips bit-exactly."""
        if len(blob) < _SERIAL_HEADER.size:
            raise ValueError("sketch blob shorter than header")
        magic, version, p, hash_bits, seed = _SERIAL_HEADER.unpack_from(blob)
        if magic != _SERIAL_MAGIC:
            raise ValueError(f"bad sketch magic {magic!r}")
        if version != _SERIAL_VERSION:
            raise ValueError(f"unsupported sketch version {version}")
        config = SketchConfig(p=p, hash_bits=hash_bits, seed=seed)
        payload = blob[_SERIAL_HEADER.size :]
        if len(payload) != config.num_buckets:
            raise ValueError(
                f"register payload is {len(payload)} bytes, expected {config.num_buckets}"
            )
        registers = np.frombuffer(payload, dtype=np.uint8).copy()
        if int(registers.max(initial=0)) > config.max_rank:
            raise ValueError(
                f"register value exceeds maximum rank {config.max_rank}"
            )
        return cls(config, registers)
