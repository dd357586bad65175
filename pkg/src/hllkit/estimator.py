"""Computation phase: turn a register state into a cardinality estimate.

The raw estimate is the bias-corrected harmonic mean of the per-bucket
estimates: alpha_m * m**2 / sum_j 2**(-M[j]). Every addend in the sum is a
power of two, so the sum is accumulated exactly as an integer numerator
over a power-of-two denominator; floating point enters only in the final
division. A correction ladder then replaces the raw estimate where it is
known to be biased: linear counting over the empty-bucket count for small
cardinalities, and a hash-saturation correction for 32-bit sketches
approaching the hash codomain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .sketch import HllSketch, SketchConfig

__all__ = [
    "Correction",
    "EstimateReport",
    "ExactHarmonicSum",
    "alpha",
    "zero_census",
    "harmonic_sum",
    "raw_estimate",
    "linear_counting",
    "large_range_correction",
    "estimate",
    "SMALL_RANGE_FACTOR",
    "LARGE_RANGE_THRESHOLD_32",
]

# E <= 2.5 * m (ties included) hands off to linear counting when empty
# buckets remain.
SMALL_RANGE_FACTOR = 2.5

# Classic cutoff above which a 32-bit hash starts visibly colliding.
LARGE_RANGE_THRESHOLD_32 = 2.0**32 / 30.0


class Correction(str, Enum):
    """Which branch of the correction ladder produced the estimate."""

    NONE = "none"
    LINEAR_COUNTING = "linear_counting"
    LARGE_RANGE_32 = "large_range_32"


def alpha(m: int) -> float:
    """Bias-correction constant for m buckets (m = 2**p, p in [4:16])."""
    if m < 16 or m > 65536 or m & (m - 1):
        raise ValueError(f"bucket count {m!r} is not a power of two in [16, 65536]")
    if m == 16:
        return 0.673
    if m == 32:
        return 0.697
    if m == 64:
        return 0.709
    return 0.7213 / (1.0 + 1.079 / m)


@dataclass(frozen=True)
class ExactHarmonicSum:
    """sum_j 2**(-M[j]) held exactly: numerator over 2**log2_denominator.

    Each addend 2**(-r) contributes the integer 2**(log2_denominator - r),
    so no rounding happens until the value is converted to a float.
    """

    numerator: int
    log2_denominator: int

    def as_float(self) -> float:
        return self.numerator / (1 << self.log2_denominator)


def harmonic_sum(sketch: HllSketch) -> ExactHarmonicSum:
    """Exact sum of 2**(-M[j]) over all registers.

    The denominator scale is the maximum rank, so every register value maps
    to a nonnegative shift; a bincount collapses the m addends into at most
    max_rank + 1 shifted terms.
    """
    scale = sketch.config.max_rank
    counts = np.bincount(sketch.registers, minlength=scale + 1)
    numerator = 0
    for r, count in enumerate(counts):
        if count:
            numerator += int(count) << (scale - r)
    return ExactHarmonicSum(numerator, scale)


def zero_census(sketch: HllSketch) -> tuple[int, np.ndarray]:
    """Count of registers still at zero, plus the registers unmodified."""
    registers = sketch.registers
    return int(np.count_nonzero(registers == 0)), registers


def raw_estimate(sketch: HllSketch) -> float:
    """alpha_m * m**2 / Z with Z accumulated exactly.

    The quotient m**2 / Z is one correctly-rounded integer division; only
    it and the multiplication by alpha_m round.
    """
    m = sketch.config.num_buckets
    s = harmonic_sum(sketch)
    return alpha(m) * (((m * m) << s.log2_denominator) / s.numerator)


def linear_counting(m: int, empty: int) -> float:
    """Small-cardinality estimate m * ln(m / V) from the empty-bucket count."""
    if not 1 <= empty <= m:
        raise ValueError(f"empty-bucket count {empty} outside [1, {m}]")
    return m * math.log(m / empty)


def large_range_correction(raw: float) -> float:
    """Collision compensation for 32-bit sketches: -2**32 * ln(1 - E/2**32).

    The formula's domain ends at E = 2**32; a sketch saturated past that
    point carries no usable information, so the argument clamps to the last
    representable point instead of leaving the log's domain.
    """
    ratio = raw / 2.0**32
    if ratio >= 1.0:
        return -(2.0**32) * math.log(2.0**-53)
    return -(2.0**32) * math.log1p(-ratio)


@dataclass(frozen=True)
class EstimateReport:
    """Raw and final estimates plus the correction branch that was taken."""

    raw_estimate: float
    estimate: float
    correction: Correction
    empty_buckets: int
    config: SketchConfig

    def to_json(self) -> str:
        """Single-line JSON rendering for CLI and service replies."""
        return json.dumps(
            {
                "estimate": self.estimate,
                "raw_estimate": self.raw_estimate,
                "correction": self.correction.value,
                "empty_buckets": self.empty_buckets,
                "p": self.config.p,
                "hash_bits": self.config.hash_bits,
                "seed": self.config.seed,
            }
        )


def estimate(sketch: HllSketch) -> EstimateReport:
    """Run the full correction ladder over a sketch.

    (a) raw <= 2.5 * m with empty buckets left: linear counting;
    (b) 32-bit hash with raw above 2**32 / 30: large-range correction;
    (c) otherwise the raw estimate stands.
    """
    config = sketch.config
    m = config.num_buckets
    raw = raw_estimate(sketch)
    empty, _ = zero_census(sketch)
    if raw <= SMALL_RANGE_FACTOR * m and empty != 0:
        value = linear_counting(m, empty)
        branch = Correction.LINEAR_COUNTING
    elif config.hash_bits == 32 and raw > LARGE_RANGE_THRESHOLD_32:
        value = large_range_correction(raw)
        branch = Correction.LARGE_RANGE_32
    else:
        value = raw
        branch = Correction.NONE
    return EstimateReport(
        raw_estimate=raw,
        estimate=value,
        correction=branch,
        empty_buckets=empty,
        config=config,
    )
