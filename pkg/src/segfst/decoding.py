"""Greedy and beam search over a token scorer.

Three enforcement modes:

``fst``
    Hypotheses walk the window's constraint automaton and the scorer is
    only asked about labels the automaton allows.  Output is always
    well-formed.
``none``
    Free generation over the window's closed vocabulary.  Output may be
    ill-formed; a segmentation is returned only when it parses.
``repair``
    Free generation followed by Levenshtein repair, so a segmentation is
    always returned.

Hypothesis scores are plain sums of log-probabilities (no length
normalisation).  Equal scores are broken in favour of the lexicographically
smaller label sequence, which makes every decode reproducible.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .alignment import repair_output
from .constraints import compile_window_constraint
from .errors import EmptyInput, NotWellformed, ScorerUnavailable
from .fst import (
    DELIMITER_SYMBOL,
    END_SYMBOL,
    UNKNOWN_SYMBOL,
    Automaton,
    SymbolTable,
    allowed_labels,
    step,
)
from .scoring import Scorer, ScorerContext
from .segmentation import Segmentation, parse_segmentation


class Mode(enum.Enum):
    UNCONSTRAINED = "none"
    FST = "fst"
    REPAIR = "repair"


@dataclass(frozen=True)
class DecodeConfig:
    beam_size: int = 4
    mode: Mode = Mode.FST
    #: Cap on emitted labels (excluding ``</s>``); ``None`` means ``2 * len(window) + 1``.
    max_output_len: int | None = None

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ValueError("beam_size must be at least 1")
        if self.max_output_len is not None and self.max_output_len < 1:
            raise ValueError("max_output_len must be positive")

    def output_limit(self, window_len: int) -> int:
        limit = 2 * window_len + 1 if self.max_output_len is None else self.max_output_len
        if limit < window_len:
            raise ValueError(f"max_output_len {limit} is shorter than the window ({window_len})")
        return limit


@dataclass(frozen=True)
class WellformednessReport:
    wellformed: bool
    reason: str | None = None


@dataclass(frozen=True)
class DecodeResult:
    generated: tuple[str, ...]
    score: float
    report: WellformednessReport
    segmentation: Segmentation | None


@dataclass(frozen=True)
class Hypothesis:
    labels: tuple[str, ...]
    score: float
    state: int | None = None


def _rank(h: Hypothesis) -> tuple[float, tuple[str, ...]]:
    return (-h.score, h.labels)


def beam_search(
    scorer: Scorer,
    window: Sequence[str],
    beam_size: int,
    candidates: Callable[[Hypothesis], Sequence[str]],
    advance: Callable[[Hypothesis, str], int | None],
    max_len: int,
    start_state: int | None = None,
) -> Hypothesis:
    """Generic beam search; ``beam_size == 1`` is greedy search.

    ``candidates(h)`` lists the labels that may follow ``h`` (``</s>`` ends
    it) and ``advance(h, label)`` returns the successor state.  Finished
    hypotheses leave the beam; search stops when none are active.  A
    hypothesis that reaches ``max_len`` labels is finished as is.
    """
    window = tuple(window)
    beam = [Hypothesis((), 0.0, start_state)]
    finished: list[Hypothesis] = []
    while beam:
        expansions: list[Hypothesis] = []
        for h in beam:
            if len(h.labels) >= max_len:
                finished.append(h)
                continue
            cands = list(candidates(h))
            if not cands:
                continue
            scores = scorer.score_next(ScorerContext(window, h.labels), cands)
            for c in cands:
                s = scores.get(c)
                if s is None or not math.isfinite(s):
                    raise ScorerUnavailable(f"scorer gave no finite score for candidate {c!r}")
                total = h.score + s
                if c == END_SYMBOL:
                    finished.append(Hypothesis(h.labels, total, h.state))
                else:
                    expansions.append(Hypothesis(h.labels + (c,), total, advance(h, c)))
        expansions.sort(key=_rank)
        beam = expansions[:beam_size]
    if not finished:
        raise AssertionError("search ended without a complete hypothesis")
    return min(finished, key=_rank)


def constrained_search(
    scorer: Scorer,
    window: Sequence[str],
    automaton: Automaton,
    table: SymbolTable,
    beam_size: int,
) -> Hypothesis:
    """Beam search restricted to strings accepted by a deterministic trim ``automaton``."""
    if automaton.start is None:
        raise ValueError("constraint automaton accepts nothing")
    names: dict[int, str] = {}

    def name(label: int) -> str:
        if label not in names:
            names[label] = table.symbol(label)
        return names[label]

    def candidates(h: Hypothesis) -> list[str]:
        return sorted(name(lab) for lab in allowed_labels(automaton, h.state))

    def advance(h: Hypothesis, label: str) -> int | None:
        return step(automaton, h.state, table.find(label))

    # Trim acyclic constraints bound the output by their longest path.
    limit = automaton.num_states
    best = beam_search(scorer, window, beam_size, candidates, advance, limit, automaton.start)
    if not automaton.is_final(best.state):
        raise AssertionError("constrained search finished outside a final state")
    return best


def free_candidates(window: Sequence[str]) -> list[str]:
    """Closed vocabulary for unconstrained generation over ``window``."""
    vocab = set(window) - {DELIMITER_SYMBOL, UNKNOWN_SYMBOL, END_SYMBOL}
    return sorted(vocab) + [DELIMITER_SYMBOL, UNKNOWN_SYMBOL, END_SYMBOL]


def decode_window(scorer: Scorer, window: Sequence[str], cfg: DecodeConfig = DecodeConfig()) -> DecodeResult:
    window = tuple(window)
    if not window:
        raise EmptyInput("window is empty")
    if cfg.mode is Mode.FST:
        table = SymbolTable(window)
        automaton = compile_window_constraint(window, table)
        best = constrained_search(scorer, window, automaton, table, cfg.beam_size)
        seg = parse_segmentation(best.labels, window)
        return DecodeResult(best.labels, best.score, WellformednessReport(True), seg)

    vocab = free_candidates(window)
    best = beam_search(
        scorer,
        window,
        cfg.beam_size,
        lambda h: vocab,
        lambda h, c: None,
        cfg.output_limit(len(window)),
    )
    try:
        seg: Segmentation | None = parse_segmentation(best.labels, window)
        report = WellformednessReport(True)
    except NotWellformed as exc:
        seg = None
        report = WellformednessReport(False, exc.reason)
    if cfg.mode is Mode.REPAIR and seg is None:
        seg = repair_output(best.labels, window)
    return DecodeResult(best.labels, best.score, report, seg)
