"""Synthetic transcripts with learnable sentence structure.

Sentences start with a word from a small opener set, end with one from a
closer set, and have filler words in between.  Openers and closers also
leak into sentence interiors at a configurable rate, so boundaries are
likely but not certain after a closer.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .segmentation import Segmentation

OPENERS = ("so", "well", "now", "and", "but", "then", "we", "i")
CLOSERS = ("today", "again", "indeed", "there", "anyway", "too", "right", "okay")
FILLERS = tuple(f"w{i:02d}" for i in range(60))


@dataclass(frozen=True)
class Passage:
    tokens: tuple[str, ...]
    segmentation: Segmentation

    def sentences(self) -> list[list[str]]:
        return self.segmentation.segments(self.tokens)

    def delimited(self) -> list[str]:
        from .segmentation import insert_delimiters

        return insert_delimiters(self.tokens, self.segmentation)

    def punctuated(self) -> list[str]:
        """Reference-style rendering: capitalised sentence starts, final periods."""
        out: list[str] = []
        for sent in self.sentences():
            words = list(sent)
            words[0] = words[0].capitalize()
            words[-1] = words[-1] + "."
            out.extend(words)
        return out


def make_sentence(rng: random.Random, length: int, leak: float) -> list[str]:
    middle = []
    for _ in range(length - 2):
        roll = rng.random()
        if roll < leak / 2:
            middle.append(rng.choice(OPENERS))
        elif roll < leak:
            middle.append(rng.choice(CLOSERS))
        else:
            middle.append(rng.choice(FILLERS))
    return [rng.choice(OPENERS), *middle, rng.choice(CLOSERS)]


def make_passage(
    rng: random.Random,
    sentences: tuple[int, int] = (5, 15),
    length: tuple[int, int] = (5, 30),
    leak: float = 0.1,
) -> Passage:
    tokens: list[str] = []
    bounds: list[int] = []
    for s in range(rng.randint(*sentences)):
        if s:
            bounds.append(len(tokens))
        tokens.extend(make_sentence(rng, rng.randint(*length), leak))
    return Passage(tuple(tokens), Segmentation(len(tokens), tuple(bounds)))


def make_corpus(n_passages: int, seed: int = 0, **kwargs) -> list[Passage]:
    rng = random.Random(seed)
    return [make_passage(rng, **kwargs) for _ in range(n_passages)]


def add_asr_noise(tokens: list[str] | tuple[str, ...], rng: random.Random, rate: float = 0.05) -> list[str]:
    """Substitute, drop or duplicate tokens at ``rate`` to imitate recognition errors."""
    out: list[str] = []
    for tok in tokens:
        roll = rng.random()
        if roll < rate / 3:
            out.append(rng.choice(FILLERS))
        elif roll < 2 * rate / 3:
            continue
        elif roll < rate:
            out.extend([tok, tok])
        else:
            out.append(tok)
    return out or list(tokens[:1])
