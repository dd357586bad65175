"""Standard-error profiling over synthetic streams.

Builds sketches over seeded synthetic data across a (p, hash width) grid,
records the relative estimation error at a ladder of true cardinalities,
and aggregates min/median/max plus RMS per checkpoint into plot-ready CSV.
Each trial grows a single sketch and estimates it at every checkpoint, so
the estimate at checkpoint n is over exactly the first n distinct values
of that trial's stream.

Distinct values come from a seeded bijective mixer over a counter: a chain
of xor / odd-multiply / xorshift rounds on 32 bits, each invertible, so n
counter values map to n distinct words without storing a set. Identical
specs reproduce byte-identical CSV.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from statistics import median
from typing import Iterable, Iterator

import numpy as np

from .estimator import estimate
from .hashing import murmur3_64
from .sketch import HASH_WIDTHS, HllSketch, MAX_PRECISION, MIN_PRECISION, SketchConfig

__all__ = [
    "DEFAULT_CHECKPOINTS",
    "ProfileSpec",
    "ErrorCurvePoint",
    "ErrorSummary",
    "ProfileResult",
    "synth_stream",
    "synth_words",
    "stream_seed",
    "run_profile",
    "theoretical_error",
    "write_points_csv",
    "write_summary_csv",
    "POINTS_CSV_COLUMNS",
    "SUMMARY_CSV_COLUMNS",
]

_MASK64 = 0xFFFFFFFFFFFFFFFF

POINTS_CSV_COLUMNS = ("p", "hash_bits", "n", "trial", "estimate", "relative_error")
SUMMARY_CSV_COLUMNS = (
    "p",
    "hash_bits",
    "n",
    "err_min",
    "err_median",
    "err_max",
    "err_rms",
    "theoretical",
)


def _log_grid(lo: int, hi: int) -> tuple[int, ...]:
    """1-2-5 log-spaced integers covering [lo, hi]."""
    points = []
    decade = 1
    while decade <= hi:
        for mult in (1, 2, 5):
            value = mult * decade
            if lo <= value <= hi:
                points.append(value)
        decade *= 10
    return tuple(points)


DEFAULT_CHECKPOINTS = _log_grid(1_000, 100_000_000)


@dataclass(frozen=True)
class ProfileSpec:
    """What to profile: the (p, H) grid, checkpoint ladder, and seeding."""

    p_values: tuple[int, ...] = (14, 16)
    hash_widths: tuple[int, ...] = (32, 64)
    checkpoints: tuple[int, ...] = DEFAULT_CHECKPOINTS
    trials: int = 10
    base_seed: int = 0
    sketch_seed: int = 0

    def __post_init__(self) -> None:
        for p in self.p_values:
            if not MIN_PRECISION <= p <= MAX_PRECISION:
                raise ValueError(f"precision {p} outside [{MIN_PRECISION}:{MAX_PRECISION}]")
        for width in self.hash_widths:
            if width not in HASH_WIDTHS:
                raise ValueError(f"hash width {width} not one of {HASH_WIDTHS}")
        if not self.checkpoints:
            raise ValueError("at least one cardinality checkpoint required")
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ValueError("checkpoints must be strictly increasing")
        if self.checkpoints[0] < 1:
            raise ValueError("checkpoints must be >= 1")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must fit in 64 bits")


@dataclass(frozen=True)
class ErrorCurvePoint:
    """One (true cardinality, estimate) sample from one trial."""

    p: int
    hash_bits: int
    n: int
    trial: int
    estimate: float
    relative_error: float


@dataclass(frozen=True)
class ErrorSummary:
    """Per-checkpoint error aggregates across trials."""

    p: int
    hash_bits: int
    n: int
    err_min: float
    err_median: float
    err_max: float
    err_rms: float
    theoretical: float


@dataclass(frozen=True)
class ProfileResult:
    points: list[ErrorCurvePoint]
    summary: list[ErrorSummary]


def _splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new state, output word)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _mixer_rounds(seed: int) -> list[tuple[np.uint32, np.uint32]]:
    """Three (xor key, odd multiplier) pairs derived from the seed."""
    rounds = []
    state = seed & _MASK64
    for _ in range(3):
        state, a = _splitmix64(state)
        state, b = _splitmix64(state)
        rounds.append((np.uint32(a & 0xFFFFFFFF), np.uint32((b & 0xFFFFFFFF) | 1)))
    return rounds


_MIX_SHIFTS = (np.uint32(16), np.uint32(13), np.uint32(17))


def _mix32(counters: np.ndarray, rounds) -> np.ndarray:
    """Apply the keyed bijection to an array of counters.

    Every round is invertible on 32 bits (xor constant, multiply by an odd
    constant, xorshift), so distinct counters stay distinct.
    """
    x = counters.astype(np.uint32)
    for (key, mult), shift in zip(rounds, _MIX_SHIFTS):
        x = (x ^ key) * mult
        x ^= x >> shift
    return x


def synth_stream(
    n: int,
    seed: int,
    duplication: int = 1,
    chunk_words: int = 1 << 20,
) -> Iterator[np.ndarray]:
    """Yield chunks of a stream containing exactly n distinct 32-bit words.

    With duplication > 1 every chunk repeats its values that many times in
    a seeded shuffle, which changes the multiset but never the distinct
    set. Deterministic in (n, seed, duplication, chunk_words).
    """
    if not 0 <= n <= 1 << 32:
        raise ValueError(f"cannot draw {n} distinct values from a 32-bit domain")
    if duplication < 1:
        raise ValueError(f"duplication factor must be >= 1, got {duplication}")
    for start, values in zip(
        range(0, n, chunk_words), _stream_slice(seed, 0, n, chunk_words)
    ):
        if duplication > 1:
            values = np.tile(values, duplication)
            rng = np.random.default_rng((seed ^ start) & _MASK64)
            rng.shuffle(values)
        yield values


def synth_words(n: int, seed: int, duplication: int = 1) -> np.ndarray:
    """Materialize ``synth_stream`` into one array (desk-scale n only)."""
    chunks = list(synth_stream(n, seed, duplication))
    if not chunks:
        return np.empty(0, dtype=np.uint32)
    return np.concatenate(chunks)


def stream_seed(base_seed: int, p: int, hash_bits: int, trial: int) -> int:
    """Per-trial stream seed, derived so every (p, H, trial) cell is independent."""
    packed = struct.pack("<QBBI", base_seed & _MASK64, p, hash_bits, trial)
    return murmur3_64(packed, 0)


def theoretical_error(p: int) -> float:
    """Asymptotic standard error 1.04 / sqrt(2**p)."""
    if not MIN_PRECISION <= p <= MAX_PRECISION:
        raise ValueError(f"precision {p} outside [{MIN_PRECISION}:{MAX_PRECISION}]")
    return 1.04 / math.sqrt(1 << p)


def run_profile(spec: ProfileSpec) -> ProfileResult:
    """Measure relative estimation error over the spec's full grid.

    One growing sketch per (p, H, trial); each checkpoint estimate sees
    exactly the first n distinct stream values. Points and summaries come
    back sorted by (p, hash_bits, n, trial).
    """
    points = []
    for p in spec.p_values:
        for hash_bits in spec.hash_widths:
            config = SketchConfig(p=p, hash_bits=hash_bits, seed=spec.sketch_seed)
            for trial in range(spec.trials):
                seed = stream_seed(spec.base_seed, p, hash_bits, trial)
                sketch = HllSketch(config)
                fed = 0
                for n in spec.checkpoints:
                    for chunk in _stream_slice(seed, fed, n):
                        sketch.update_words(chunk)
                    fed = n
                    value = estimate(sketch).estimate
                    points.append(
                        ErrorCurvePoint(
                            p=p,
                            hash_bits=hash_bits,
                            n=n,
                            trial=trial,
                            estimate=value,
                            relative_error=abs(value - n) / n,
                        )
                    )
    points.sort(key=lambda pt: (pt.p, pt.hash_bits, pt.n, pt.trial))
    return ProfileResult(points=points, summary=_summarize(points, spec))


def _stream_slice(seed: int, start: int, stop: int, chunk_words: int = 1 << 20):
    """Chunks of the synthetic stream covering counters [start, stop)."""
    rounds = _mixer_rounds(seed)
    for lo in range(start, stop, chunk_words):
        hi = min(lo + chunk_words, stop)
        yield _mix32(np.arange(lo, hi, dtype=np.uint32), rounds)


def _summarize(points: list[ErrorCurvePoint], spec: ProfileSpec) -> list[ErrorSummary]:
    summary = []
    by_cell: dict[tuple[int, int, int], list[float]] = {}
    for pt in points:
        by_cell.setdefault((pt.p, pt.hash_bits, pt.n), []).append(pt.relative_error)
    for (p, hash_bits, n), errors in sorted(by_cell.items()):
        summary.append(
            ErrorSummary(
                p=p,
                hash_bits=hash_bits,
                n=n,
                err_min=min(errors),
                err_median=float(median(errors)),
                err_max=max(errors),
                err_rms=math.sqrt(sum(e * e for e in errors) / len(errors)),
                theoretical=theoretical_error(p),
            )
        )
    return summary


def write_points_csv(points: Iterable[ErrorCurvePoint], fileobj) -> None:
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(POINTS_CSV_COLUMNS)
    for pt in points:
        writer.writerow([pt.p, pt.hash_bits, pt.n, pt.trial, pt.estimate, pt.relative_error])


def write_summary_csv(rows: Iterable[ErrorSummary], fileobj) -> None:
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(SUMMARY_CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.p,
                row.hash_bits,
                row.n,
                row.err_min,
                row.err_median,
                row.err_max,
                row.err_rms,
                row.theoretical,
            ]
        )
