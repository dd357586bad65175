"""Socket ingestion service: stream words in, get one estimate back.

One frame per connection. The frame carries its own sketch configuration,
a little-endian payload of 32-bit words, and a trailer that marks the end
of aggregation; the reply is a single JSON line written only after the
trailer has been consumed. Each connection owns a fresh engine, so a
malformed frame can never touch another connection's state.

Wire format (all little-endian):

    header   "HLL1" | p u8 | hash_bits u8 | seed u32 | word_count u64
    payload  word_count x 4-byte words
    trailer  "HEND"

Errors reply with one line ``ERR <reason>`` and close. A word count above
the configured cap is rejected before any payload is read.
"""

from __future__ import annotations

import socketserver
import struct
import threading

import numpy as np

from .estimator import EstimateReport
from .pipeline import PipelineEngine
from .sketch import SketchConfig

__all__ = [
    "FRAME_MAGIC",
    "FRAME_TRAILER",
    "FRAME_HEADER",
    "DEFAULT_WORD_CAP",
    "FrameError",
    "pack_frame",
    "IngestServer",
]

FRAME_MAGIC = b"HLL1"
FRAME_TRAILER = b"HEND"
FRAME_HEADER = struct.Struct("<4sBBIQ")
DEFAULT_WORD_CAP = 1 << 32
_READ_CHUNK_BYTES = 1 << 20


class FrameError(Exception):
    """Violation of the ingest frame protocol."""


def pack_frame(words, p: int, hash_bits: int, seed: int = 0) -> bytes:
    """Build a complete ingest frame; the client-side inverse of the server."""
    payload = np.asarray(words, dtype="<u4").tobytes()
    header = FRAME_HEADER.pack(FRAME_MAGIC, p, hash_bits, seed, len(payload) // 4)
    return header + payload + FRAME_TRAILER


def _read_exact(stream, n: int, what: str) -> bytes:
    data = stream.read(n)
    if len(data) != n:
        raise FrameError(f"truncated frame: expected {n} bytes of {what}, got {len(data)}")
    return data


class _IngestHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        try:
            report = self._ingest_frame()
        except FrameError as exc:
            self._reply(f"ERR {exc}\n")
        except ValueError as exc:
            self._reply(f"ERR invalid frame config: {exc}\n")
        else:
            self._reply(report.to_json() + "\n")

    def _reply(self, line: str) -> None:
        try:
            self.wfile.write(line.encode("utf-8"))
        except OSError:
            pass  # client went away; nothing to salvage

    def _ingest_frame(self) -> EstimateReport:
        header = _read_exact(self.rfile, FRAME_HEADER.size, "header")
        magic, p, hash_bits, seed, word_count = FRAME_HEADER.unpack(header)
        if magic != FRAME_MAGIC:
            raise FrameError(f"bad magic {magic!r}")
        if word_count > self.server.word_cap:
            raise FrameError(
                f"word count {word_count} exceeds cap {self.server.word_cap}"
            )
        config = SketchConfig(p=p, hash_bits=hash_bits, seed=seed)
        with PipelineEngine(config, self.server.pipelines, parallel=True) as engine:
            remaining = word_count * 4
            while remaining:
                chunk = _read_exact(
                    self.rfile, min(remaining, _READ_CHUNK_BYTES), "payload"
                )
                engine.feed(np.frombuffer(chunk, dtype="<u4"))
                remaining -= len(chunk)
            trailer = _read_exact(self.rfile, len(FRAME_TRAILER), "trailer")
            if trailer != FRAME_TRAILER:
                raise FrameError(f"bad trailer {trailer!r}")
            return engine.finalize()


class _ThreadingServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class IngestServer:
    """Threaded one-frame-per-connection ingest service.

    ``pipelines`` sets the per-connection engine width; connections are
    accepted and served concurrently, each with isolated sketch state.
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        pipelines: int = 1,
        word_cap: int = DEFAULT_WORD_CAP,
    ):
        self._server = _ThreadingServer((host, port), _IngestHandler)
        self._server.pipelines = pipelines
        self._server.word_cap = word_cap
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        """Bound (host, port); useful when constructed with port 0."""
        return self._server.server_address[:2]

    def start(self) -> None:
        """Serve on a background thread (returns immediately)."""
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        """Serve on the calling thread until ``shutdown``."""
        self._server.serve_forever()

    def shutdown(self) -> None:
        self._server.shutdown()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        self._server.server_close()

    def __enter__(self) -> "IngestServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()
