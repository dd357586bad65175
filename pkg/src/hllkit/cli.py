"""Command-line entry points: count, profile, serve, bench.

Exit codes: 0 success, 2 usage error (argparse), 3 I/O error, 4 protocol
or input-format error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .pipeline import PipelineEngine, bench, write_bench_csv
from .profiler import (
    DEFAULT_CHECKPOINTS,
    ProfileSpec,
    run_profile,
    write_points_csv,
    write_summary_csv,
)
from .server import DEFAULT_WORD_CAP, IngestServer
from .sketch import SketchConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4

_CHUNK_BYTES = 1 << 20


def _parse_int_list(text: str) -> list[int]:
    return [int(float(part)) for part in text.split(",") if part]


def _parse_points(text: str) -> tuple[int, ...]:
    """Checkpoint grid: either "lo..hi" (log-spaced 1-2-5) or "a,b,c"."""
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        lo, hi = int(float(lo_text)), int(float(hi_text))
        if lo < 1 or hi < lo:
            raise argparse.ArgumentTypeError(f"bad checkpoint range {text!r}")
        points = [n for n in _log_grid_points(hi) if lo <= n <= hi]
        for endpoint in (lo, hi):
            if endpoint not in points:
                points.append(endpoint)
        return tuple(sorted(points))
    values = _parse_int_list(text)
    if not values:
        raise argparse.ArgumentTypeError(f"no checkpoints in {text!r}")
    return tuple(values)


def _log_grid_points(hi: int) -> list[int]:
    points = []
    decade = 1
    while decade <= hi:
        points.extend(mult * decade for mult in (1, 2, 5))
        decade *= 10
    return points


def _parse_listen(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"listen address must be HOST:PORT, got {text!r}")
    return host or "0.0.0.0", int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hllkit",
        description="Streaming cardinality estimation with HyperLogLog sketches.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sketch_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--precision", "-p", "--p", type=int, default=16,
                       help="index bits p in [4:16] (default 16)")
        p.add_argument("--hash-bits", "--hash", type=int, choices=(32, 64), default=64,
                       help="hash output width (default 64)")
        p.add_argument("--seed", type=int, default=0, help="hash seed (default 0)")

    count = sub.add_parser("count", help="estimate distinct items in a file or stdin")
    add_sketch_flags(count)
    count.add_argument("--pipelines", "-k", type=int, default=1,
                       help="parallel aggregation pipelines (default 1)")
    count.add_argument("--format", choices=("u32le", "lines"), default="u32le",
                       help="input framing: 4-byte LE words or text lines")
    count.add_argument("input", help="input path, or - for stdin")
    count.set_defaults(func=cmd_count)

    profile = sub.add_parser("profile", help="reproduce the standard-error curves")
    profile.add_argument("--precision", "-p", "--p", type=_parse_int_list,
                         default=[14, 16], dest="precision",
                         help="comma list of p values (default 14,16)")
    profile.add_argument("--hash-bits", "--hash", type=_parse_int_list,
                         default=[32, 64], dest="hash_bits",
                         help="comma list of hash widths (default 32,64)")
    profile.add_argument("--points", type=_parse_points, default=DEFAULT_CHECKPOINTS,
                         help="checkpoints: LO..HI log grid or comma list (default 1e3..1e8)")
    profile.add_argument("--trials", type=int, default=10, help="trials per grid cell")
    profile.add_argument("--seed", type=int, default=0, help="base stream seed")
    profile.add_argument("--out", type=Path, default=Path("."),
                         help="output directory for points.csv and summary.csv")
    profile.set_defaults(func=cmd_profile)

    serve = sub.add_parser("serve", help="run the frame-per-connection ingest service")
    serve.add_argument("--listen", type=_parse_listen, default=("127.0.0.1", 4801),
                       help="HOST:PORT to bind (default 127.0.0.1:4801)")
    serve.add_argument("--pipelines", "-k", type=int, default=1,
                       help="pipelines per connection engine")
    serve.add_argument("--word-cap", type=int, default=DEFAULT_WORD_CAP,
                       help="reject frames declaring more words than this")
    serve.set_defaults(func=cmd_serve)

    bench_cmd = sub.add_parser("bench", help="aggregation throughput vs pipeline count")
    add_sketch_flags(bench_cmd)
    bench_cmd.add_argument("--volume-mib", type=int, default=64,
                           help="synthetic data volume in MiB (>= 64)")
    bench_cmd.add_argument("--reps", type=int, default=3, help="runs per k")
    bench_cmd.add_argument("--k", type=_parse_int_list, default=None,
                           help="comma list of pipeline counts (default 1..cores)")
    bench_cmd.add_argument("--out", type=Path, default=None,
                           help="CSV output path (default stdout)")
    bench_cmd.set_defaults(func=cmd_bench)

    return parser


def _sketch_config(args: argparse.Namespace) -> SketchConfig:
    return SketchConfig(p=args.precision, hash_bits=args.hash_bits, seed=args.seed)


def _feed_u32le(engine: PipelineEngine, stream, name: str) -> None:
    offset = 0
    leftover = b""
    while True:
        chunk = stream.read(_CHUNK_BYTES)
        if not chunk:
            break
        chunk = leftover + chunk
        usable = len(chunk) & ~3
        engine.feed(np.frombuffer(chunk[:usable], dtype="<u4"))
        leftover = chunk[usable:]
        offset += usable
    if leftover:
        raise _FormatError(
            f"{name}: u32le input truncated at byte offset {offset}: "
            f"{len(leftover)} trailing byte(s), length must be a multiple of 4"
        )


class _FormatError(Exception):
    pass


def cmd_count(args: argparse.Namespace) -> int:
    config = _sketch_config(args)
    try:
        with PipelineEngine(config, args.pipelines, parallel=args.pipelines > 1) as engine:
            if args.input == "-":
                stream = sys.stdin.buffer
                if args.format == "u32le":
                    _feed_u32le(engine, stream, "<stdin>")
                else:
                    engine.feed_items(stream.read().splitlines())
            else:
                with open(args.input, "rb") as stream:
                    if args.format == "u32le":
                        _feed_u32le(engine, stream, args.input)
                    else:
                        engine.feed_items(stream.read().splitlines())
            report = engine.finalize()
    except _FormatError as exc:
        print(f"hllkit count: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except OSError as exc:
        print(f"hllkit count: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(report.to_json())
    return EXIT_OK


def cmd_profile(args: argparse.Namespace) -> int:
    spec = ProfileSpec(
        p_values=tuple(args.precision),
        hash_widths=tuple(args.hash_bits),
        checkpoints=tuple(args.points),
        trials=args.trials,
        base_seed=args.seed,
    )
    result = run_profile(spec)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        points_path = args.out / "points.csv"
        summary_path = args.out / "summary.csv"
        with open(points_path, "w", newline="") as f:
            write_points_csv(result.points, f)
        with open(summary_path, "w", newline="") as f:
            write_summary_csv(result.summary, f)
    except OSError as exc:
        print(f"hllkit profile: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {points_path} ({len(result.points)} rows) and {summary_path}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    host, port = args.listen
    try:
        server = IngestServer(host, port, pipelines=args.pipelines, word_cap=args.word_cap)
    except OSError as exc:
        print(f"hllkit serve: cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return EXIT_IO
    bound_host, bound_port = server.address
    print(f"listening on {bound_host}:{bound_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    config = _sketch_config(args)
    k_values = args.k
    if k_values is None:
        cores = os.cpu_count() or 1
        k_values = sorted({k for k in (1, 2, 4, 8, 10, 16) if k <= cores} | {cores})
    try:
        results = bench(
            config,
            volume_bytes=args.volume_mib * 1024 * 1024,
            repetitions=args.reps,
            k_values=k_values,
            seed=args.seed,
        )
    except ValueError as exc:
        print(f"hllkit bench: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out is None:
        write_bench_csv(results, sys.stdout)
    else:
        try:
            with open(args.out, "w", newline="") as f:
                write_bench_csv(results, f)
        except OSError as exc:
            print(f"hllkit bench: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {args.out} ({len(results)} rows)")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
