"""Synthetic stream generation and the error-curve harness."""

import io
import math

import numpy as np
import pytest

from hllkit.estimator import estimate
from hllkit.profiler import (
    DEFAULT_CHECKPOINTS,
    ProfileSpec,
    run_profile,
    stream_seed,
    synth_stream,
    synth_words,
    theoretical_error,
    write_points_csv,
    write_summary_csv,
)
from hllkit.sketch import HllSketch, SketchConfig


class TestSynthStream:
    def test_zero_is_empty(self):
        assert synth_words(0, seed=1).size == 0
        assert list(synth_stream(0, seed=1)) == []

    def test_deterministic(self):
        a = synth_words(100_000, seed=77)
        b = synth_words(100_000, seed=77)
        assert np.array_equal(a, b)

    def test_seeds_differ(self):
        assert not np.array_equal(synth_words(1000, seed=1), synth_words(1000, seed=2))

    def test_exact_distinct_count_against_set_oracle(self):
        values = synth_words(1_000_000, seed=5)
        assert values.size == 1_000_000
        assert np.unique(values).size == 1_000_000

    def test_prefix_property(self):
        """The first n values never depend on how much more is drawn."""
        long = synth_words(30_000, seed=9)
        short = synth_words(8_000, seed=9)
        assert np.array_equal(long[:8_000], short)

    def test_chunking_invariant(self):
        whole = synth_words(10_000, seed=3)
        rechunked = np.concatenate(list(synth_stream(10_000, seed=3, chunk_words=777)))
        assert np.array_equal(whole, rechunked)

    def test_domain_exhausted(self):
        with pytest.raises(ValueError, match="32-bit domain"):
            list(synth_stream((1 << 32) + 1, seed=0))

    def test_duplication_keeps_distinct_set(self):
        plain = synth_words(5_000, seed=4)
        doubled = synth_words(5_000, seed=4, duplication=3)
        assert doubled.size == 15_000
        assert np.array_equal(np.sort(np.unique(doubled)), np.sort(plain))

    def test_bad_duplication(self):
        with pytest.raises(ValueError, match="duplication"):
            list(synth_stream(10, seed=0, duplication=0))


class TestTheoreticalError:
    def test_reference_values(self):
        assert theoretical_error(16) == pytest.approx(0.0040625, rel=1e-12)
        assert theoretical_error(14) == pytest.approx(1.04 / 128, rel=1e-12)
        assert theoretical_error(4) == pytest.approx(0.26, rel=1e-12)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            theoretical_error(3)


class TestProfileSpec:
    def test_default_checkpoints_log_spaced(self):
        assert DEFAULT_CHECKPOINTS[0] == 1_000
        assert DEFAULT_CHECKPOINTS[-1] == 100_000_000
        assert all(a < b for a, b in zip(DEFAULT_CHECKPOINTS, DEFAULT_CHECKPOINTS[1:]))

    def test_rejects_unsorted_checkpoints(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            ProfileSpec(checkpoints=(100, 100))

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError, match="trials"):
            ProfileSpec(checkpoints=(10,), trials=0)

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            ProfileSpec(p_values=(3,), checkpoints=(10,))
        with pytest.raises(ValueError):
            ProfileSpec(hash_widths=(48,), checkpoints=(10,))


SMALL_SPEC = ProfileSpec(
    p_values=(8,),
    hash_widths=(32, 64),
    checkpoints=(100, 1_000, 10_000),
    trials=3,
    base_seed=123,
)


class TestRunProfile:
    def test_grid_shape_and_order(self):
        result = run_profile(SMALL_SPEC)
        assert len(result.points) == 1 * 2 * 3 * 3
        keys = [(pt.p, pt.hash_bits, pt.n, pt.trial) for pt in result.points]
        assert keys == sorted(keys)
        assert len(result.summary) == 1 * 2 * 3

    def test_relative_error_definition(self):
        for pt in run_profile(SMALL_SPEC).points:
            assert pt.relative_error == pytest.approx(abs(pt.estimate - pt.n) / pt.n)

    def test_summary_matches_manual_aggregation(self):
        result = run_profile(SMALL_SPEC)
        for row in result.summary:
            errors = [
                pt.relative_error
                for pt in result.points
                if (pt.p, pt.hash_bits, pt.n) == (row.p, row.hash_bits, row.n)
            ]
            assert row.err_min == min(errors)
            assert row.err_max == max(errors)
            assert row.err_median == pytest.approx(sorted(errors)[len(errors) // 2])
            assert row.err_rms == pytest.approx(
                math.sqrt(sum(e * e for e in errors) / len(errors))
            )
            assert row.theoretical == theoretical_error(row.p)

    def test_growing_sketch_semantics(self):
        """Checkpoint n uses exactly the first n distinct stream values."""
        spec = ProfileSpec(
            p_values=(10,), hash_widths=(64,), checkpoints=(500, 2_000), trials=2,
            base_seed=55,
        )
        result = run_profile(spec)
        for trial in range(2):
            seed = stream_seed(55, 10, 64, trial)
            for n in (500, 2_000):
                fresh = HllSketch(SketchConfig(p=10, hash_bits=64))
                fresh.update_words(synth_words(n, seed))
                expected = estimate(fresh).estimate
                (point,) = [
                    pt for pt in result.points if pt.trial == trial and pt.n == n
                ]
                assert point.estimate == expected

    def test_reproducible_csv_bytes(self):
        buffers = []
        for _ in range(2):
            result = run_profile(SMALL_SPEC)
            points_io, summary_io = io.StringIO(), io.StringIO()
            write_points_csv(result.points, points_io)
            write_summary_csv(result.summary, summary_io)
            buffers.append((points_io.getvalue(), summary_io.getvalue()))
        assert buffers[0] == buffers[1]

    def test_csv_headers(self):
        result = run_profile(SMALL_SPEC)
        points_io, summary_io = io.StringIO(), io.StringIO()
        write_points_csv(result.points, points_io)
        write_summary_csv(result.summary, summary_io)
        assert points_io.getvalue().splitlines()[0] == (
            "p,hash_bits,n,trial,estimate,relative_error"
        )
        assert summary_io.getvalue().splitlines()[0] == (
            "p,hash_bits,n,err_min,err_median,err_max,err_rms,theoretical"
        )

    def test_accuracy_sane_at_desk_scale(self):
        spec = ProfileSpec(
            p_values=(12,), hash_widths=(64,), checkpoints=(50_000,), trials=5,
            base_seed=7,
        )
        (row,) = run_profile(spec).summary
        assert row.err_median < 0.05  # 1.04/sqrt(4096) ~ 1.6%
