"""Sliding-window segmentation of long passages.

Windows of ``w`` tokens start every ``w - b`` tokens, so neighbours share
``b`` tokens of context.  Each window only adopts decisions in its middle
region: ``b - r`` tokens of left context and ``r`` tokens of right context
are seen by the model but decided by the neighbouring window.  The first
window has no left context and the last one adopts everything to the end.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .decoding import DecodeConfig, DecodeResult, decode_window
from .errors import EmptyInput, InvalidSpec, SegfstError
from .scoring import Scorer
from .segmentation import Segmentation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowSpec:
    w: int = 40
    b: int = 10
    r: int = 5

    def __post_init__(self) -> None:
        if not 0 <= self.r <= self.b < self.w:
            raise InvalidSpec(f"need 0 <= r <= b < w, got w={self.w} b={self.b} r={self.r}")

    @property
    def stride(self) -> int:
        return self.w - self.b


@dataclass(frozen=True)
class Window:
    start: int
    end: int
    adopt_start: int
    adopt_end: int

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def adopt(self) -> tuple[int, int]:
        return (self.adopt_start, self.adopt_end)


def make_windows(n: int, spec: WindowSpec = WindowSpec()) -> list[Window]:
    if n < 1:
        raise EmptyInput("passage is empty")
    s, lead = spec.stride, spec.b - spec.r
    windows: list[Window] = []
    k = 0
    while True:
        start = k * s
        end = min(start + spec.w, n)
        adopt_start = 0 if k == 0 else start + lead
        last = end >= n
        adopt_end = n if last else (k + 1) * s + lead
        windows.append(Window(start, end, adopt_start, adopt_end))
        if last:
            return windows
        k += 1


class WindowError(SegfstError):
    def __init__(self, index: int, window: Window, cause: Exception) -> None:
        self.index = index
        self.window = window
        self.cause = cause
        super().__init__(f"window {index} [{window.start}, {window.end}): {cause}")


@dataclass(frozen=True)
class PassageResult:
    segmentation: Segmentation
    windows: tuple[Window, ...]
    decodes: tuple[DecodeResult, ...]


def adopted_boundaries(window: Window, local: Segmentation) -> list[int]:
    """Passage-level boundaries from one window that fall in its adopt range."""
    out = []
    for b in local.boundaries:
        pos = window.start + b
        if window.adopt_start <= pos < window.adopt_end:
            out.append(pos)
    return out


def segment_passage_detailed(
    tokens: Sequence[str],
    scorer: Scorer,
    cfg: DecodeConfig = DecodeConfig(),
    spec: WindowSpec = WindowSpec(),
    order: Iterable[int] | None = None,
    workers: int = 1,
) -> PassageResult:
    """Decode every window and stitch adopted boundaries.

    ``order`` permutes the sequence in which windows are decoded and
    ``workers > 1`` decodes them on a thread pool when the scorer is
    shareable; neither changes the result.  Windows whose raw output is
    ill-formed in ``none`` mode contribute no boundaries.
    """
    tokens = tuple(tokens)
    windows = make_windows(len(tokens), spec)
    indices = list(range(len(windows))) if order is None else list(order)
    if sorted(indices) != list(range(len(windows))):
        raise ValueError("order must be a permutation of the window indices")

    def run(i: int) -> DecodeResult:
        win = windows[i]
        try:
            result = decode_window(scorer, tokens[win.start:win.end], cfg)
        except SegfstError as exc:
            raise WindowError(i, win, exc) from exc
        log.debug(
            "window %d [%d,%d) adopt [%d,%d): wellformed=%s score=%.4f boundaries=%s",
            i, win.start, win.end, win.adopt_start, win.adopt_end,
            result.report.wellformed, result.score,
            result.segmentation.boundaries if result.segmentation else None,
        )
        return result

    if workers > 1 and getattr(scorer, "shareable", False):
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = dict(zip(indices, pool.map(run, indices)))
    else:
        done = {i: run(i) for i in indices}

    bounds: set[int] = set()
    for i, win in enumerate(windows):
        seg = done[i].segmentation
        if seg is not None:
            bounds.update(adopted_boundaries(win, seg))
    return PassageResult(
        Segmentation.of(len(tokens), bounds),
        tuple(windows),
        tuple(done[i] for i in range(len(windows))),
    )


def segment_passage(
    tokens: Sequence[str],
    scorer: Scorer,
    cfg: DecodeConfig = DecodeConfig(),
    spec: WindowSpec = WindowSpec(),
) -> Segmentation:
    return segment_passage_detailed(tokens, scorer, cfg, spec).segmentation
