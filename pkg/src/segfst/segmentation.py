"""Segmentations of a token sequence and their delimited text form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import NotWellformed
from .fst import DELIMITER_SYMBOL, END_SYMBOL


@dataclass(frozen=True)
class Segmentation:
    """Internal boundary positions over a passage of ``n`` tokens.

    A boundary at ``i`` sits before token ``i``, so valid positions are
    ``1 .. n-1``.  The passage start and end are implicit and never stored.
    """

    n: int
    boundaries: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        b = tuple(sorted(set(self.boundaries)))
        if self.n < 0:
            raise ValueError("passage length must be non-negative")
        if b and (b[0] < 1 or b[-1] > self.n - 1):
            raise ValueError(f"boundaries must lie in [1, {self.n - 1}], got {b}")
        if b != tuple(self.boundaries):
            raise ValueError("boundaries must be sorted and unique")

    @classmethod
    def of(cls, n: int, boundaries: Iterable[int] = ()) -> Segmentation:
        """Build from an unsorted iterable, dropping duplicates."""
        return cls(n, tuple(sorted(set(boundaries))))

    def segment_lengths(self) -> list[int]:
        if self.n == 0:
            return []
        edges = (0, *self.boundaries, self.n)
        return [b - a for a, b in zip(edges, edges[1:])]

    def spans(self) -> list[tuple[int, int]]:
        edges = (0, *self.boundaries, self.n)
        return list(zip(edges, edges[1:])) if self.n else []

    def segments(self, tokens: Sequence[str]) -> list[list[str]]:
        if len(tokens) != self.n:
            raise ValueError("token count does not match segmentation length")
        return [list(tokens[a:b]) for a, b in self.spans()]


def insert_delimiters(tokens: Sequence[str], seg: Segmentation) -> list[str]:
    """Token sequence with ``<SENT>`` placed before every boundary position."""
    if len(tokens) != seg.n:
        raise ValueError("token count does not match segmentation length")
    marks = set(seg.boundaries)
    out: list[str] = []
    for i, tok in enumerate(tokens):
        if i in marks:
            out.append(DELIMITER_SYMBOL)
        out.append(tok)
    return out


def format_delimited(tokens: Sequence[str], seg: Segmentation) -> str:
    return " ".join(insert_delimiters(tokens, seg))


def split_delimited(labels: Sequence[str]) -> tuple[list[str], Segmentation]:
    """Strict inverse of :func:`insert_delimiters`.

    Raises ``NotWellformed`` on leading, trailing or doubled delimiters.
    """
    tokens: list[str] = []
    bounds: list[int] = []
    prev_delim = False
    for lab in labels:
        if lab == DELIMITER_SYMBOL:
            if not tokens:
                raise NotWellformed("leading-delimiter")
            if prev_delim:
                raise NotWellformed("double-delimiter", f"after token {len(tokens)}")
            bounds.append(len(tokens))
            prev_delim = True
        else:
            tokens.append(lab)
            prev_delim = False
    if prev_delim:
        raise NotWellformed("trailing-delimiter")
    return tokens, Segmentation(len(tokens), tuple(bounds))


def tokenize_delimited(line: str) -> list[str]:
    """Whitespace split that also separates delimiters glued to words."""
    return line.replace(DELIMITER_SYMBOL, f" {DELIMITER_SYMBOL} ").split()


def parse_segmentation(generated: Sequence[str], tokens: Sequence[str]) -> Segmentation:
    """Read the boundaries out of a generated label sequence.

    Succeeds only if ``generated`` reproduces ``tokens`` exactly, with at most
    one delimiter between consecutive tokens and none at either end.  A
    trailing end-of-sequence label is ignored.
    """
    labels = list(generated)
    if labels and labels[-1] == END_SYMBOL:
        labels.pop()
    produced, seg = split_delimited(labels)
    if len(produced) != len(tokens):
        raise NotWellformed("length-mismatch", f"expected {len(tokens)} tokens, got {len(produced)}")
    for i, (got, want) in enumerate(zip(produced, tokens)):
        if got != want:
            raise NotWellformed("token-mismatch", f"position {i}: {got!r} != {want!r}")
    return seg
