"""Output-space constraints for constrained decoding.

The segmentation transducer copies tokens and may emit a delimiter (on an
epsilon input arc) between any two of them.  Composing it with a window's
linear acceptor and projecting onto the output tape gives the "sawtooth"
acceptor of every well-formed segmentation of that window.  A BIO tagging
constraint shows the same decoder interface works for any regular language.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EmptyInput
from .fst import (
    DELIMITER,
    EPSILON,
    Arc,
    Automaton,
    SymbolTable,
    canonicalize,
    compose,
    determinize_acyclic,
    linear_acceptor,
    linear_acceptor_from_labels,
    project_output,
    remove_epsilon,
)


class Family(enum.Enum):
    SEGMENTATION = "segmentation"
    BIO = "bio"


@dataclass(frozen=True)
class ConstraintSpec:
    family: Family = Family.SEGMENTATION
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.family is Family.BIO and not self.labels:
            raise ValueError("BIO constraints need at least one chunk label")


def build_segmentation_transducer(table: SymbolTable) -> Automaton:
    """Transducer T: identity on tokens, optional delimiter before every non-first token.

    States: 0 = nothing read yet, 1 = after a token, 2 = just emitted a
    delimiter.  Only state 1 is final, so a delimiter can never lead, trail,
    or repeat.
    """
    tokens = table.token_ids()
    arcs: list[list[Arc]] = [[], [], []]
    for t in tokens:
        arcs[0].append(Arc(t, t, 0.0, 1))
        arcs[1].append(Arc(t, t, 0.0, 1))
        arcs[2].append(Arc(t, t, 0.0, 1))
    arcs[1].append(Arc(EPSILON, DELIMITER, 0.0, 2))
    return Automaton(arcs, 0, {1: 0.0}, kind="transducer")


def compile_by_composition(tokens: Sequence[str], table: SymbolTable) -> Automaton:
    """det(rmeps(project_out(linear(tokens) o T)))."""
    if not tokens:
        raise EmptyInput("window is empty")
    x = linear_acceptor(tokens, table)
    t = build_segmentation_transducer(table)
    return determinize_acyclic(remove_epsilon(project_output(compose(x, t))))


def build_sawtooth(tokens: Sequence[str], table: SymbolTable) -> Automaton:
    """Direct construction of the same acceptor: 2n states for n tokens.

    State ``q_i`` follows the i-th token; for internal positions a side
    state ``d_i`` is entered by the delimiter and left by token i+1.
    """
    if not tokens:
        raise EmptyInput("window is empty")
    labels = [table.add(t) for t in tokens]
    n = len(labels)
    if n == 1:
        return linear_acceptor_from_labels(labels)
    # Ids: q_0 = 0, then (q_i, d_i) pairs as 2i-1, 2i for 1 <= i < n, q_n = 2n-1.
    def q(i: int) -> int:
        return 0 if i == 0 else (2 * n - 1 if i == n else 2 * i - 1)

    arcs: list[list[Arc]] = [[] for _ in range(2 * n)]
    for i in range(n):
        nxt = labels[i]
        arcs[q(i)].append(Arc(nxt, nxt, 0.0, q(i + 1)))
        if 1 <= i:
            d = 2 * i
            arcs[q(i)].append(Arc(DELIMITER, DELIMITER, 0.0, d))
            arcs[d].append(Arc(nxt, nxt, 0.0, q(i + 1)))
    return canonicalize(Automaton(arcs, 0, {q(n): 0.0}, kind="acceptor"))


def compile_window_constraint(
    tokens: Sequence[str], table: SymbolTable, method: str = "compose"
) -> Automaton:
    """Deterministic epsilon-free acceptor of all well-formed outputs for a window."""
    if method == "compose":
        return compile_by_composition(tokens, table)
    if method == "direct":
        return build_sawtooth(tokens, table)
    raise ValueError(f"unknown compile method {method!r}")


# -- BIO tagging --------------------------------------------------------------


def bio_tags(labels: Sequence[str]) -> list[str]:
    tags = ["O"]
    for lab in labels:
        tags += [f"B-{lab}", f"I-{lab}"]
    return tags


def build_bio_constraint(labels: Sequence[str], table: SymbolTable) -> Automaton:
    """Acceptor of tag strings where ``I-x`` only follows ``B-x`` or ``I-x``.

    Cyclic and all states final, so it accepts valid sequences of any length
    (including the empty one).  Intersect with a length-n chain for decoding.
    """
    labels = list(dict.fromkeys(labels))
    if not labels:
        raise ValueError("BIO constraint needs at least one label")
    o = table.add("O")
    begin = {lab: table.add(f"B-{lab}") for lab in labels}
    inside = {lab: table.add(f"I-{lab}") for lab in labels}
    # 0 = start, 1 = after O, 2 + k = inside chunk of label k.
    chunk = {lab: 2 + k for k, lab in enumerate(labels)}
    arcs: list[list[Arc]] = [[] for _ in range(2 + len(labels))]
    for q in range(len(arcs)):
        arcs[q].append(Arc(o, o, 0.0, 1))
        for lab in labels:
            arcs[q].append(Arc(begin[lab], begin[lab], 0.0, chunk[lab]))
    for lab in labels:
        arcs[chunk[lab]].append(Arc(inside[lab], inside[lab], 0.0, chunk[lab]))
    return Automaton(arcs, 0, {q: 0.0 for q in range(len(arcs))}, kind="acceptor")


def compile_bio_window_constraint(n: int, labels: Sequence[str], table: SymbolTable) -> Automaton:
    """Valid BIO tag sequences of exactly ``n`` tags, deterministic and acyclic."""
    if n < 1:
        raise EmptyInput("window is empty")
    bio = build_bio_constraint(labels, table)
    tags = [table.find(t) for t in bio_tags(labels)]
    # Length-n sigma chain: any tag at every position.
    sigma = Automaton(
        [[Arc(t, t, 0.0, i + 1) for t in tags] for i in range(n)] + [[]],
        0,
        {n: 0.0},
        kind="acceptor",
    )
    return determinize_acyclic(project_output(compose(sigma, bio)))


def compile_constraint(spec: ConstraintSpec, tokens: Sequence[str], table: SymbolTable) -> Automaton:
    if spec.family is Family.SEGMENTATION:
        return compile_window_constraint(tokens, table)
    return compile_bio_window_constraint(len(tokens), spec.labels, table)
