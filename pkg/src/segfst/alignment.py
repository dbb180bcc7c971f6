"""Levenshtein alignment of token sequences and boundary projection.

Used to salvage segmentations from free generation that does not exactly
reproduce its input, and to move reference sentence boundaries onto noisy
ASR transcripts for the oracle policy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import LengthMismatch
from .fst import (
    DELIMITER_SYMBOL,
    EPSILON,
    Arc,
    Automaton,
    SymbolTable,
    compose,
    linear_acceptor,
    shortest_distance,
)
from .segmentation import Segmentation

MATCH = "match"
SUBSTITUTE = "substitute"
DELETE = "delete"
INSERT = "insert"


class EditOp(NamedTuple):
    kind: str
    src: int | None
    tgt: int | None


@dataclass(frozen=True)
class AlignmentPath:
    ops: tuple[EditOp, ...]
    src_len: int
    tgt_len: int

    @property
    def total_cost(self) -> int:
        return sum(op.kind != MATCH for op in self.ops)

    def src_to_tgt(self) -> list[int | None]:
        """Target index aligned to each source index (None if deleted)."""
        image: list[int | None] = [None] * self.src_len
        for op in self.ops:
            if op.kind in (MATCH, SUBSTITUTE):
                image[op.src] = op.tgt
        return image


def edit_table(src: Sequence[str], tgt: Sequence[str]) -> list[list[int]]:
    m, k = len(src), len(tgt)
    d = [[0] * (k + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        d[i][0] = i
    for j in range(1, k + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        row, prev = d[i], d[i - 1]
        s = src[i - 1]
        for j in range(1, k + 1):
            row[j] = min(prev[j - 1] + (s != tgt[j - 1]), prev[j] + 1, row[j - 1] + 1)
    return d


def levenshtein_align(src: Sequence[str], tgt: Sequence[str]) -> AlignmentPath:
    """Minimum unit-cost alignment.

    Among optimal paths, the backtrace (from the end) prefers match, then
    substitution, then deletion, then insertion.
    """
    d = edit_table(src, tgt)
    i, j = len(src), len(tgt)
    ops: list[EditOp] = []
    while i > 0 or j > 0:
        here = d[i][j]
        if i > 0 and j > 0 and src[i - 1] == tgt[j - 1] and d[i - 1][j - 1] == here:
            ops.append(EditOp(MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i - 1][j - 1] + 1 == here:
            ops.append(EditOp(SUBSTITUTE, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and d[i - 1][j] + 1 == here:
            ops.append(EditOp(DELETE, i - 1, None))
            i -= 1
        else:
            ops.append(EditOp(INSERT, None, j - 1))
            j -= 1
    ops.reverse()
    return AlignmentPath(tuple(ops), len(src), len(tgt))


def project_boundaries(
    src_boundaries: Segmentation, path: AlignmentPath, tgt_len: int | None = None
) -> Segmentation:
    """Carry boundaries across alignment links onto the target sequence.

    A boundary before source token i lands before the target token aligned
    to i.  If i was deleted, the boundary moves right to the next aligned
    source token; if none remains it is dropped.  Projections onto position
    0 are dropped and duplicates collapse.
    """
    if tgt_len is None:
        tgt_len = path.tgt_len
    if src_boundaries.n != path.src_len or tgt_len != path.tgt_len:
        raise LengthMismatch(
            f"segmentation over {src_boundaries.n} tokens, path {path.src_len}->{path.tgt_len}, "
            f"target length {tgt_len}"
        )
    image = path.src_to_tgt()
    # Right-attachment: next aligned image at or after each source index.
    next_image: list[int | None] = [None] * (path.src_len + 1)
    for i in range(path.src_len - 1, -1, -1):
        next_image[i] = image[i] if image[i] is not None else next_image[i + 1]
    out = set()
    for b in src_boundaries.boundaries:
        pos = next_image[b]
        if pos is not None and 0 < pos < tgt_len:
            out.add(pos)
    return Segmentation.of(tgt_len, out)


def repair_output(generated: Sequence[str], tokens: Sequence[str]) -> Segmentation:
    """Best-effort segmentation of ``tokens`` from arbitrary generated labels.

    Never raises: malformed delimiter runs are normalised before alignment.
    """
    stripped: list[str] = []
    bounds: set[int] = set()
    for lab in generated:
        if lab == DELIMITER_SYMBOL:
            if stripped:
                bounds.add(len(stripped))
        else:
            stripped.append(lab)
    # Drop a trailing boundary (at len(stripped)); it denotes no split.
    src_seg = Segmentation.of(len(stripped), (b for b in bounds if b < len(stripped)))
    path = levenshtein_align(stripped, tokens)
    return project_boundaries(src_seg, path, len(tokens))


# -- finite-state formulation -------------------------------------------------


def edit_transducer(src_labels: Sequence[int], tgt_labels: Sequence[int]) -> Automaton:
    """One-state unit-cost edit transducer from ``src_labels`` to ``tgt_labels``.

    Arcs: a:a/0, a:b/1, a:eps/1 (delete) and eps:b/1 (insert).
    """
    arcs = []
    for a in sorted(set(src_labels)):
        for b in sorted(set(tgt_labels)):
            arcs.append(Arc(a, b, 0.0 if a == b else 1.0, 0))
        arcs.append(Arc(a, EPSILON, 1.0, 0))
    for b in sorted(set(tgt_labels)):
        arcs.append(Arc(EPSILON, b, 1.0, 0))
    return Automaton([arcs], 0, {0: 0.0}, kind="transducer")


def fst_edit_distance(src: Sequence[str], tgt: Sequence[str]) -> float:
    """Edit distance as the shortest path through ``linear(src) o E o linear(tgt)``."""
    if not src or not tgt:
        return float(len(src) + len(tgt))
    table = SymbolTable()
    x = linear_acceptor(src, table)
    y = linear_acceptor(tgt, table)
    e = edit_transducer([table.find(s) for s in src], [table.find(t) for t in tgt])
    return shortest_distance(compose(compose(x, e), y))
