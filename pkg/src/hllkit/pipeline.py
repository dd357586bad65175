"""k-way sharded aggregation with a bucket-wise max merge fold.

The input word stream is sliced round-robin across k independent sketches;
because merge is a bucket-wise max, any deterministic total assignment of
words to shards folds back to exactly the registers a single sketch over
the whole stream would hold. Parallelism changes throughput, never the
result.

Each shard has a single writer. ``feed`` returns only after every shard
update it dispatched has completed, which gives ``finalize`` the required
happens-before edge; callers must stop feeding before finalizing.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .estimator import EstimateReport, estimate
from .sketch import HllSketch, SketchConfig

__all__ = [
    "PipelineEngine",
    "BenchResult",
    "bench",
    "write_bench_csv",
    "MIN_BENCH_BYTES",
    "BENCH_CSV_COLUMNS",
]

MIN_BENCH_BYTES = 64 * 1024 * 1024  # below this, timing noise dominates

BENCH_CSV_COLUMNS = ("k", "run_id", "words", "seconds", "words_per_second", "bytes_per_second")


class PipelineEngine:
    """k independent shard sketches fed by deterministic round-robin slicing.

    With ``parallel=True`` shard updates run on a thread pool (numpy
    releases the GIL in the hashing kernels, so shards genuinely overlap).
    Registers are identical either way.
    """

    def __init__(self, config: SketchConfig, k: int = 1, parallel: bool = False):
        if not isinstance(k, int) or k < 1:
            raise ValueError(f"pipeline count k={k!r} must be a positive integer")
        self.config = config
        self.shards = [HllSketch(config) for _ in range(k)]
        self.words_per_shard = [0] * k
        self._cursor = 0  # global index of the next word to arrive
        self._pool = ThreadPoolExecutor(max_workers=k) if parallel and k > 1 else None

    @property
    def k(self) -> int:
        return len(self.shards)

    @property
    def words_fed(self) -> int:
        return self._cursor

    def feed(self, batch) -> None:
        """Route a batch of 32-bit words: global word j goes to shard j mod k.

        The cursor persists across calls, so feeding one big batch or many
        small ones produces the same assignment.
        """
        words = np.asarray(batch, dtype=np.uint32)
        n = int(words.size)
        if n == 0:
            return
        k = self.k
        start = self._cursor
        self._cursor += n
        if k == 1:
            self.shards[0].update_words(words)
            self.words_per_shard[0] += n
            return
        slices = [words[(shard - start) % k :: k] for shard in range(k)]
        for shard, piece in enumerate(slices):
            self.words_per_shard[shard] += int(piece.size)
        if self._pool is None:
            for sketch, piece in zip(self.shards, slices):
                sketch.update_words(piece)
        else:
            futures = [
                self._pool.submit(sketch.update_words, piece)
                for sketch, piece in zip(self.shards, slices)
            ]
            for future in futures:
                future.result()

    def feed_items(self, items: Iterable[bytes]) -> None:
        """Route arbitrary byte items round-robin, sharing the word cursor."""
        k = self.k
        for item in items:
            shard = self._cursor % k
            self.shards[shard].update(item)
            self.words_per_shard[shard] += 1
            self._cursor += 1

    def merged_sketch(self) -> HllSketch:
        """Fold the shards bucket-wise into a fresh sketch.

        Starts from the empty sketch (the merge identity), so the result
        never aliases shard state; merge order is irrelevant.
        """
        merged = HllSketch(self.config)
        for shard in self.shards:
            merged = merged.merge(shard)
        return merged

    def finalize(self) -> EstimateReport:
        """Merge the quiescent shards and run the computation phase once."""
        return estimate(self.merged_sketch())

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self) -> "PipelineEngine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass(frozen=True)
class BenchResult:
    """One timed aggregation run of the k-way engine."""

    k: int
    run_id: int
    words: int
    seconds: float
    words_per_second: float
    bytes_per_second: float


def bench(
    config: SketchConfig,
    volume_bytes: int = MIN_BENCH_BYTES,
    repetitions: int = 3,
    k_values: Sequence[int] = (1, 2, 4, 8, 10, 16),
    seed: int = 0,
) -> list[BenchResult]:
    """Time the k-way engine over synthetic in-memory words.

    The word array is generated once up front so I/O and generation stay
    out of the timed section; each run feeds a fresh parallel engine and
    finalizes it.
    """
    if volume_bytes < MIN_BENCH_BYTES:
        raise ValueError(
            f"volume below minimum: {volume_bytes} bytes < {MIN_BENCH_BYTES} "
            "(need >= 64 MiB for stable timing)"
        )
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    n_words = volume_bytes // 4
    rng = np.random.default_rng(seed)
    words = rng.integers(0, 1 << 32, size=n_words, dtype=np.uint32)
    results = []
    for k in k_values:
        for run_id in range(repetitions):
            with PipelineEngine(config, k, parallel=True) as engine:
                t0 = time.perf_counter()
                engine.feed(words)
                engine.finalize()
                elapsed = time.perf_counter() - t0
            results.append(
                BenchResult(
                    k=k,
                    run_id=run_id,
                    words=n_words,
                    seconds=elapsed,
                    words_per_second=n_words / elapsed,
                    bytes_per_second=4 * n_words / elapsed,
                )
            )
    return results


def write_bench_csv(results: Iterable[BenchResult], fileobj) -> None:
    """Emit bench rows as CSV with the documented column order."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(BENCH_CSV_COLUMNS)
    for row in results:
        writer.writerow(
            [row.k, row.run_id, row.words, row.seconds, row.words_per_second, row.bytes_per_second]
        )
