"""Token scorers: the autoregressive model behind the decoder.

A scorer sees the window being segmented and the labels emitted so far and
returns a log-probability for each requested candidate label.  Labels are
plain strings: window tokens, ``<SENT>``, ``<unk>`` for anything outside the
window, and ``</s>`` to stop.  The decoder only ever compares sums of these
scores, so they need not be normalised over the candidate set.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence, runtime_checkable

from .errors import EmptyInput
from .fst import DELIMITER_SYMBOL, END_SYMBOL, EPSILON_SYMBOL, UNKNOWN_SYMBOL

# Finite stand-in for log(0); sums of a few hundred of these stay finite.
FLOOR = -1e9
BOS = "<s>"
MODEL_FORMAT = "segfst-ngram"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ScorerContext:
    window: tuple[str, ...]
    prefix: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if EPSILON_SYMBOL in self.prefix:
            raise ValueError("generated prefix cannot contain epsilon")

    @property
    def tokens_emitted(self) -> int:
        return sum(lab != DELIMITER_SYMBOL for lab in self.prefix)


@runtime_checkable
class Scorer(Protocol):
    #: Whether one instance may serve several decodes concurrently.
    shareable: bool

    def score_next(self, ctx: ScorerContext, candidates: Sequence[str]) -> Mapping[str, float]:
        ...


# -- n-gram model -------------------------------------------------------------


@dataclass(frozen=True)
class NgramModel:
    """Add-k smoothed n-gram model over tokens and the delimiter.

    ``counts`` maps every observed context (of length 0 up to ``order - 1``,
    padded with ``<s>`` at sequence start) to next-label counts.  The
    unigram level is classic add-k, ``(c(w) + k) / (N + k|V|)``.  Higher
    orders add the same ``k|V|`` pseudo-counts but spread them according to
    the next-lower-order estimate instead of uniformly, so a sparse context
    falls back smoothly on shorter ones.  An unseen context reduces to its
    backoff, and every conditional is a proper distribution over ``vocab``.
    """

    order: int
    k: float
    vocab: tuple[str, ...]
    counts: Mapping[tuple[str, ...], Mapping[str, int]]
    _totals: dict[tuple[str, ...], int] = field(init=False, repr=False, compare=False)
    _vocab_set: frozenset[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_totals", {c: sum(v.values()) for c, v in self.counts.items()})
        object.__setattr__(self, "_vocab_set", frozenset(self.vocab))

    def contexts(self, history: Sequence[str]) -> list[tuple[str, ...]]:
        """Observed suffixes of the padded history, shortest (empty) first."""
        padded = (BOS,) * (self.order - 1) + tuple(history)
        out = [()]
        for n in range(1, self.order):
            ctx = padded[len(padded) - n:]
            if ctx not in self._totals:
                break
            out.append(ctx)
        return out

    def prob(self, word: str, history: Sequence[str]) -> float:
        return self.prob_in_contexts(word, self.contexts(history))

    def prob_in_contexts(self, word: str, contexts: Sequence[tuple[str, ...]]) -> float:
        # Out-of-vocabulary words get the mass of one unseen type; that is
        # outside the normalised distribution but keeps scores finite.
        known = word in self._vocab_set
        pseudo = self.k * len(self.vocab)
        p = 1.0 / len(self.vocab)
        for ctx in contexts:
            count = self.counts[ctx].get(word, 0) if known else 0
            p = (count + pseudo * p) / (self._totals[ctx] + pseudo)
        return p

    def distribution(self, history: Sequence[str]) -> dict[str, float]:
        ctxs = self.contexts(history)
        return {w: self.prob_in_contexts(w, ctxs) for w in self.vocab}

    def to_dict(self) -> dict:
        rows = sorted(
            (list(ctx), w, c) for ctx, nxt in self.counts.items() for w, c in nxt.items()
        )
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "order": self.order,
            "k": self.k,
            "vocab": list(self.vocab),
            "counts": rows,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> NgramModel:
        if data.get("format") != MODEL_FORMAT or data.get("version") != MODEL_VERSION:
            raise ValueError("not a segfst n-gram model file")
        counts: dict[tuple[str, ...], dict[str, int]] = {}
        for ctx, w, c in data["counts"]:
            counts.setdefault(tuple(ctx), {})[w] = int(c)
        return cls(int(data["order"]), float(data["k"]), tuple(data["vocab"]), counts)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> NgramModel:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_ngram(corpus: Iterable[Sequence[str]], order: int = 3, k: float = 0.1) -> NgramModel:
    """Count label n-grams of delimiter-annotated sequences.

    Each sequence is a list of tokens with ``<SENT>`` between sentences.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if not k > 0:
        raise ValueError("smoothing constant k must be positive")
    counts: dict[tuple[str, ...], Counter] = {}
    vocab: set[str] = set()
    seen = False
    for seq in corpus:
        if not seq:
            continue
        seen = True
        padded = (BOS,) * (order - 1) + tuple(seq)
        for i in range(order - 1, len(padded)):
            word = padded[i]
            vocab.add(word)
            for n in range(order):
                counts.setdefault(padded[i - n:i], Counter())[word] += 1
    if not seen:
        raise EmptyInput("training corpus is empty")
    return NgramModel(order, k, tuple(sorted(vocab)), {c: dict(v) for c, v in counts.items()})


class NgramScorer:
    """Scores candidates with an :class:`NgramModel`.

    The vocabulary is closed per window: window tokens and the delimiter are
    scored directly, and ``<unk>`` receives the pooled mass of everything
    else the model knows.  ``</s>`` is certain once every window token has
    been emitted and impossible before.

    ``copy_weight`` (0 by default) mixes a copy-the-next-input-token
    distribution into the non-delimiter mass, which makes free generation
    track its input the way a conditioned model would.  The delimiter
    probability is left unchanged.
    """

    shareable = True

    def __init__(self, model: NgramModel, copy_weight: float = 0.0) -> None:
        if not 0.0 <= copy_weight < 1.0:
            raise ValueError("copy_weight must be in [0, 1)")
        self.model = model
        self.copy_weight = copy_weight

    def score_next(self, ctx: ScorerContext, candidates: Sequence[str]) -> dict[str, float]:
        model = self.model
        c = model.contexts(ctx.prefix)
        lam = self.copy_weight
        expected = None
        p_delim = 0.0
        if lam:
            pos = ctx.tokens_emitted
            expected = ctx.window[pos] if pos < len(ctx.window) else None
            p_delim = model.prob_in_contexts(DELIMITER_SYMBOL, c)
        out: dict[str, float] = {}
        for cand in candidates:
            if cand == END_SYMBOL:
                out[cand] = 0.0 if ctx.tokens_emitted >= len(ctx.window) else FLOOR
                continue
            if cand == UNKNOWN_SYMBOL:
                p = self._unknown_mass(ctx, c)
            else:
                p = model.prob_in_contexts(cand, c)
            if lam and cand != DELIMITER_SYMBOL:
                p = (1.0 - lam) * p + (lam * (1.0 - p_delim) if cand == expected else 0.0)
            out[cand] = math.log(p)
        return out

    def _unknown_mass(self, ctx: ScorerContext, c: list[tuple[str, ...]]) -> float:
        closed = (set(ctx.window) | {DELIMITER_SYMBOL}) & set(self.model.vocab)
        mass = 1.0 - sum(self.model.prob_in_contexts(w, c) for w in closed)
        floor = self.model.prob_in_contexts(UNKNOWN_SYMBOL, c)
        return max(mass, floor)


# -- deterministic mocks ------------------------------------------------------


def _copy_scores(expected: str, candidates: Sequence[str]) -> dict[str, float]:
    return {c: 0.0 if c == expected else FLOOR for c in candidates}


class CopyScorer:
    """Always predicts the next window token, then ``</s>``; never a delimiter."""

    shareable = True

    def score_next(self, ctx: ScorerContext, candidates: Sequence[str]) -> dict[str, float]:
        pos = ctx.tokens_emitted
        expected = ctx.window[pos] if pos < len(ctx.window) else END_SYMBOL
        return _copy_scores(expected, candidates)


class HallucinateScorer:
    """Emits one out-of-window token first, then copies the window.

    When ``<unk>`` is not offered (constrained decoding) it behaves exactly
    like :class:`CopyScorer`.
    """

    shareable = True

    def score_next(self, ctx: ScorerContext, candidates: Sequence[str]) -> dict[str, float]:
        if UNKNOWN_SYMBOL in candidates and UNKNOWN_SYMBOL not in ctx.prefix:
            return _copy_scores(UNKNOWN_SYMBOL, candidates)
        pos = sum(lab not in (DELIMITER_SYMBOL, UNKNOWN_SYMBOL) for lab in ctx.prefix)
        expected = ctx.window[pos] if pos < len(ctx.window) else END_SYMBOL
        return _copy_scores(expected, candidates)


class BoundaryScorer:
    """Copies the window and inserts a delimiter wherever ``rule`` says so.

    ``rule(window, i)`` decides whether a boundary belongs before local
    token ``i``.  The delimiter scores 0 and the competing token -1 at such
    positions, so constrained search prefers the split.
    """

    shareable = True

    def __init__(self, rule: Callable[[tuple[str, ...], int], bool]) -> None:
        self.rule = rule

    @classmethod
    def before_tokens(cls, tokens: Iterable[str]) -> BoundaryScorer:
        marks = frozenset(tokens)
        return cls(lambda window, i: window[i] in marks)

    @classmethod
    def at_positions(cls, positions: Iterable[int]) -> BoundaryScorer:
        marks = frozenset(positions)
        return cls(lambda window, i: i in marks)

    def score_next(self, ctx: ScorerContext, candidates: Sequence[str]) -> dict[str, float]:
        pos = ctx.tokens_emitted
        if pos >= len(ctx.window):
            return _copy_scores(END_SYMBOL, candidates)
        just_split = bool(ctx.prefix) and ctx.prefix[-1] == DELIMITER_SYMBOL
        if pos > 0 and not just_split and self.rule(ctx.window, pos):
            scores = _copy_scores(DELIMITER_SYMBOL, candidates)
            if ctx.window[pos] in scores:
                scores[ctx.window[pos]] = -1.0
            return scores
        return _copy_scores(ctx.window[pos], candidates)


class RandomScorer:
    """Pseudo-random log-probabilities, reproducible from ``seed`` and the context."""

    shareable = True

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed

    def score_next(self, ctx: ScorerContext, candidates: Sequence[str]) -> dict[str, float]:
        # Seeded per candidate so a label's score does not depend on what else is offered.
        key = f"{self.seed}\x1f{' '.join(ctx.window)}\x1f{' '.join(ctx.prefix)}\x1f"
        return {c: -random.Random(key + c).expovariate(1.0) for c in candidates}


MOCKS: dict[str, Callable[[int], Scorer]] = {
    "copy": lambda seed: CopyScorer(),
    "hallucinate": lambda seed: HallucinateScorer(),
    "random": lambda seed: RandomScorer(seed),
}


def check_scorer_spec(spec: str) -> tuple[str, str]:
    """Split and validate a scorer spec without loading anything."""
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise ValueError(f"scorer must look like kind:argument, got {spec!r}")
    if kind not in ("ngram", "external", "mock"):
        raise ValueError(f"unknown scorer kind {kind!r}; use ngram, external or mock")
    if kind == "mock" and arg not in MOCKS:
        raise ValueError(f"unknown mock scorer {arg!r}; choose from {sorted(MOCKS)}")
    return kind, arg


def load_scorer(
    spec: str, seed: int = 0, timeout: float = 30.0, copy_weight: float = 0.0
) -> Scorer:
    """Build a scorer from ``ngram:<path>``, ``external:<command>`` or ``mock:<name>``."""
    kind, arg = check_scorer_spec(spec)
    if kind == "ngram":
        return NgramScorer(NgramModel.load(arg), copy_weight=copy_weight)
    if kind == "external":
        from .external import ExternalScorer

        return ExternalScorer(arg, timeout=timeout)
    return MOCKS[arg](seed)
