"""Streaming cardinality estimation toolkit.

HyperLogLog sketches with configurable precision and hash width, k-way
parallel aggregation with lossless bucket-wise max merging, an exact
harmonic-mean estimator with the full correction ladder, an error-curve
profiler, and a socket ingestion service.
"""

from .estimator import (
    Correction,
    EstimateReport,
    ExactHarmonicSum,
    alpha,
    estimate,
    harmonic_sum,
    large_range_correction,
    linear_counting,
    raw_estimate,
    zero_census,
)
from .hashing import murmur3_32, murmur3_64, murmur3_x64_128
from .pipeline import BenchResult, PipelineEngine, bench
from .profiler import (
    ErrorCurvePoint,
    ErrorSummary,
    ProfileResult,
    ProfileSpec,
    run_profile,
    synth_stream,
    synth_words,
    theoretical_error,
)
from .server import FrameError, IngestServer, pack_frame
from .sketch import HllSketch, SketchConfig, footprint_bits, rank, split_hash

__version__ = "0.1.0"

__all__ = [
    "Correction",
    "EstimateReport",
    "ExactHarmonicSum",
    "alpha",
    "estimate",
    "harmonic_sum",
    "large_range_correction",
    "linear_counting",
    "raw_estimate",
    "zero_census",
    "murmur3_32",
    "murmur3_64",
    "murmur3_x64_128",
    "BenchResult",
    "PipelineEngine",
    "bench",
    "ErrorCurvePoint",
    "ErrorSummary",
    "ProfileResult",
    "ProfileSpec",
    "run_profile",
    "synth_stream",
    "synth_words",
    "theoretical_error",
    "FrameError",
    "IngestServer",
    "pack_frame",
    "HllSketch",
    "SketchConfig",
    "footprint_bits",
    "rank",
    "split_hash",
]
