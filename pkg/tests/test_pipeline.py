"""Sharded aggregation: slicing, merge folds, and the bench harness."""

import io
import struct

import numpy as np
import pytest

from hllkit.estimator import Correction, estimate
from hllkit.pipeline import (
    MIN_BENCH_BYTES,
    BenchResult,
    PipelineEngine,
    bench,
    write_bench_csv,
)
from hllkit.sketch import HllSketch, SketchConfig

CONFIG = SketchConfig(p=10, hash_bits=64)


def serial_sketch(words, config=CONFIG):
    sketch = HllSketch(config)
    sketch.update_words(words)
    return sketch


class TestFeed:
    def test_k1_degenerate(self):
        rng = np.random.default_rng(0)
        words = rng.integers(0, 1 << 32, size=10_000, dtype=np.uint32)
        engine = PipelineEngine(CONFIG, 1)
        engine.feed(words)
        assert engine.merged_sketch().register_equal(serial_sketch(words))

    @pytest.mark.parametrize("k", [1, 2, 4, 8, 10, 16])
    def test_shard_equivalence(self, k):
        rng = np.random.default_rng(k)
        words = rng.integers(0, 1 << 32, size=50_000, dtype=np.uint32)
        engine = PipelineEngine(CONFIG, k)
        engine.feed(words)
        assert engine.merged_sketch().register_equal(serial_sketch(words))

    @pytest.mark.parametrize("k", [3, 7, 16])
    def test_cursor_spans_batches(self, k):
        """Many uneven batches must slice exactly like one big batch."""
        rng = np.random.default_rng(100 + k)
        words = rng.integers(0, 1 << 32, size=20_011, dtype=np.uint32)
        one_shot = PipelineEngine(CONFIG, k)
        one_shot.feed(words)
        dribbled = PipelineEngine(CONFIG, k)
        position = 0
        while position < words.size:
            step = int(rng.integers(1, 997))
            dribbled.feed(words[position : position + step])
            position += step
        for a, b in zip(one_shot.shards, dribbled.shards):
            assert a.register_equal(b)

    def test_empty_batch_is_noop(self):
        engine = PipelineEngine(CONFIG, 4)
        engine.feed(np.empty(0, dtype=np.uint32))
        assert engine.words_fed == 0
        assert not engine.merged_sketch().registers.any()

    def test_parallel_matches_sequential(self):
        rng = np.random.default_rng(2)
        words = rng.integers(0, 1 << 32, size=40_000, dtype=np.uint32)
        with PipelineEngine(CONFIG, 4, parallel=True) as parallel:
            parallel.feed(words)
            sequential = PipelineEngine(CONFIG, 4)
            sequential.feed(words)
            assert parallel.merged_sketch().register_equal(sequential.merged_sketch())

    def test_slicing_totality(self):
        rng = np.random.default_rng(3)
        engine = PipelineEngine(CONFIG, 7)
        total = 0
        for _ in range(13):
            n = int(rng.integers(0, 5000))
            engine.feed(rng.integers(0, 1 << 32, size=n, dtype=np.uint32))
            total += n
        assert engine.words_fed == total
        assert sum(engine.words_per_shard) == total

    def test_feed_items_matches_scalar_updates(self):
        items = [f"key-{i}".encode() for i in range(777)] * 2
        engine = PipelineEngine(CONFIG, 5)
        engine.feed_items(items)
        reference = HllSketch(CONFIG)
        for item in items:
            reference.update(item)
        assert engine.merged_sketch().register_equal(reference)

    def test_invalid_k(self):
        with pytest.raises(ValueError, match="pipeline count"):
            PipelineEngine(CONFIG, 0)


class TestFinalize:
    def test_empty_engine_estimates_zero(self):
        report = PipelineEngine(CONFIG, 4).finalize()
        assert report.estimate == 0.0
        assert report.correction is Correction.LINEAR_COUNTING

    def test_matches_serial_estimate(self):
        rng = np.random.default_rng(4)
        words = rng.integers(0, 1 << 32, size=100_000, dtype=np.uint32)
        engine = PipelineEngine(CONFIG, 10)
        engine.feed(words)
        assert engine.finalize() == estimate(serial_sketch(words))

    def test_fold_order_independence(self):
        rng = np.random.default_rng(5)
        engine = PipelineEngine(CONFIG, 8)
        engine.feed(rng.integers(0, 1 << 32, size=30_000, dtype=np.uint32))
        merged = engine.merged_sketch()
        for order_seed in range(5):
            order = np.random.default_rng(order_seed).permutation(8)
            refolded = HllSketch(CONFIG)
            for shard_id in order:
                refolded = refolded.merge(engine.shards[shard_id])
            assert refolded.register_equal(merged)

    def test_merged_sketch_never_aliases_shards(self):
        engine = PipelineEngine(CONFIG, 1)
        engine.feed(np.arange(100, dtype=np.uint32))
        merged = engine.merged_sketch()
        merged.registers[:] = 0
        assert engine.shards[0].registers.any()


class TestBench:
    def test_zero_volume_rejected(self):
        with pytest.raises(ValueError, match="volume below minimum"):
            bench(CONFIG, volume_bytes=0, repetitions=1, k_values=[1])

    def test_small_volume_rejected(self):
        with pytest.raises(ValueError, match="volume below minimum"):
            bench(CONFIG, volume_bytes=MIN_BENCH_BYTES - 1, repetitions=1, k_values=[1])

    def test_bad_repetitions(self):
        with pytest.raises(ValueError, match="repetitions"):
            bench(CONFIG, volume_bytes=MIN_BENCH_BYTES, repetitions=0, k_values=[1])

    def test_rows_and_csv_shape(self):
        rows = bench(CONFIG, volume_bytes=MIN_BENCH_BYTES, repetitions=3, k_values=[1])
        assert len(rows) == 3
        assert [r.run_id for r in rows] == [0, 1, 2]
        for r in rows:
            assert r.words == MIN_BENCH_BYTES // 4
            assert r.words_per_second == pytest.approx(r.words / r.seconds)
            assert r.bytes_per_second == pytest.approx(4 * r.words / r.seconds)
        buffer = io.StringIO()
        write_bench_csv(rows, buffer)
        lines = buffer.getvalue().splitlines()
        assert lines[0] == "k,run_id,words,seconds,words_per_second,bytes_per_second"
        assert len(lines) == 4
