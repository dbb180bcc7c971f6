"""Scorers living in a child process, spoken to over newline-delimited JSON.

Request (one line on the child's stdin)::

    {"id": 7, "window": ["i", "came"], "prefix": ["i"], "candidates": ["came", "<SENT>"]}

Response (one line on the child's stdout)::

    {"id": 7, "logprobs": [-0.1, -2.3]}

``logprobs`` lines up with ``candidates``.  Exactly one request is in flight
per process.  Run ``python -m segfst.external mock:copy`` to serve any
in-process scorer over this protocol.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import shlex
import subprocess
import sys
import threading
from typing import IO, Sequence

from .errors import ScorerUnavailable
from .scoring import Scorer, ScorerContext, load_scorer

log = logging.getLogger(__name__)


class ExternalScorer:
    """Client side of the protocol; the child is started on first use."""

    shareable = False

    def __init__(self, command: str | Sequence[str], timeout: float = 30.0) -> None:
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._next_id = 0

    def _start(self) -> subprocess.Popen:
        if self._proc is not None and self._proc.poll() is None:
            return self._proc
        try:
            proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ScorerUnavailable(f"cannot start scorer {self.command!r}: {exc}") from exc
        self._lines = queue.Queue()
        threading.Thread(target=self._pump, args=(proc.stdout, self._lines), daemon=True).start()
        self._proc = proc
        return proc

    @staticmethod
    def _pump(stream: IO[str], lines: queue.Queue) -> None:
        for line in stream:
            lines.put(line)
        lines.put(None)

    def score_next(self, ctx: ScorerContext, candidates: Sequence[str]) -> dict[str, float]:
        proc = self._start()
        req_id = self._next_id
        self._next_id += 1
        request = {
            "id": req_id,
            "window": list(ctx.window),
            "prefix": list(ctx.prefix),
            "candidates": list(candidates),
        }
        try:
            proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._fail(f"write failed: {exc}")
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self._fail(f"no response within {self.timeout}s")
        if line is None:
            self._fail("scorer process closed its output")
        try:
            reply = json.loads(line)
            if reply["id"] != req_id:
                raise ValueError(f"id {reply['id']} does not answer request {req_id}")
            logprobs = [float(x) for x in reply["logprobs"]]
        except (ValueError, KeyError, TypeError) as exc:
            self._fail(f"malformed response {line.strip()!r}: {exc}")
        if len(logprobs) != len(candidates):
            self._fail(f"expected {len(candidates)} scores, got {len(logprobs)}")
        if not all(math.isfinite(x) for x in logprobs):
            self._fail("non-finite score in response")
        return dict(zip(candidates, logprobs))

    def _fail(self, why: str):
        self.close()
        raise ScorerUnavailable(f"external scorer {self.command!r}: {why}")

    def close(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> ExternalScorer:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self) -> None:
        try:
            self.close()
        except Exception:
            pass


def serve(scorer: Scorer, infile: IO[str], outfile: IO[str]) -> None:
    """Answer protocol requests from ``infile`` until EOF."""
    for line in infile:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            ctx = ScorerContext(tuple(req["window"]), tuple(req["prefix"]))
            cands = list(req["candidates"])
            scores = scorer.score_next(ctx, cands)
            reply = {"id": req["id"], "logprobs": [scores[c] for c in cands]}
        except (ValueError, KeyError, TypeError) as exc:
            log.error("bad request %r: %s", line.strip(), exc)
            reply = {"id": None, "error": str(exc)}
        outfile.write(json.dumps(reply) + "\n")
        outfile.flush()


def main(argv: Sequence[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Serve a segfst scorer over stdio.")
    parser.add_argument("scorer", help="ngram:<model.json> or mock:<name>")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    serve(load_scorer(args.scorer, seed=args.seed), sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
