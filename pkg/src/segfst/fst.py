"""Weighted finite-state acceptors and transducers over the tropical semiring.

Weights are negative log-probabilities combined with ``+`` along a path and
``min`` across paths.  Only the algorithms the segmentation pipeline needs
are provided: composition with a one-sided epsilon pattern, projection,
epsilon removal and determinization of acyclic machines, path counting, and
shortest distance.  Every algorithm returns a trimmed machine whose states are
numbered in topological order from the start state (breadth-first order if the
result is cyclic), so identical inputs give structurally identical outputs.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    AlphabetMismatch,
    CompositionError,
    EmptyInput,
    InvalidState,
    NotAcyclic,
)

EPSILON = 0
DELIMITER = 1
UNKNOWN = 2
# Pseudo-label reported by allowed_labels() for final states; never on an arc.
END = -1

EPSILON_SYMBOL = "<eps>"
DELIMITER_SYMBOL = "<SENT>"
UNKNOWN_SYMBOL = "<unk>"
END_SYMBOL = "</s>"

_RESERVED = (EPSILON_SYMBOL, DELIMITER_SYMBOL, UNKNOWN_SYMBOL)


class SymbolTable:
    """Bijection between symbol strings and integer ids.

    Ids 0, 1 and 2 are always epsilon, the sentence delimiter and the
    unknown-token symbol.  Transcript tokens get ids from 3 upwards in
    insertion order.
    """

    def __init__(self, symbols: Iterable[str] = ()) -> None:
        self._ids: dict[str, int] = {}
        self._symbols: list[str] = []
        for sym in _RESERVED:
            self._append(sym)
        for sym in symbols:
            self.add(sym)

    def _append(self, symbol: str) -> int:
        self._ids[symbol] = len(self._symbols)
        self._symbols.append(symbol)
        return self._ids[symbol]

    def add(self, symbol: str) -> int:
        if symbol in (EPSILON_SYMBOL, DELIMITER_SYMBOL):
            raise ValueError(f"{symbol!r} is reserved and cannot be used as a token")
        if not symbol or any(c.isspace() for c in symbol):
            raise ValueError(f"invalid token {symbol!r}")
        found = self._ids.get(symbol)
        return found if found is not None else self._append(symbol)

    def find(self, symbol: str) -> int:
        return self._ids[symbol]

    def symbol(self, label: int) -> str:
        if label == END:
            return END_SYMBOL
        if not 0 <= label < len(self._symbols):
            raise KeyError(label)
        return self._symbols[label]

    def token_ids(self) -> list[int]:
        """Ids usable as transcript tokens (everything except epsilon and delimiter)."""
        return [i for i in range(len(self._symbols)) if i not in (EPSILON, DELIMITER)]

    def __contains__(self, symbol: object) -> bool:
        return symbol in self._ids

    def __len__(self) -> int:
        return len(self._symbols)

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter((s, i) for i, s in enumerate(self._symbols))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SymbolTable) and self._symbols == other._symbols

    def to_text(self) -> str:
        return "".join(f"{s}\t{i}\n" for i, s in enumerate(self._symbols))

    @classmethod
    def from_text(cls, text: str) -> SymbolTable:
        rows = [line.split("\t") for line in text.splitlines() if line.strip()]
        pairs = sorted((int(i), s) for s, i in rows)
        if [i for i, _ in pairs] != list(range(len(pairs))):
            raise ValueError("symbol ids must be dense and start at 0")
        if tuple(s for _, s in pairs[: len(_RESERVED)]) != _RESERVED:
            raise ValueError("reserved symbols missing or renumbered")
        table = cls()
        for _, sym in pairs[len(_RESERVED):]:
            table.add(sym)
        return table

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> SymbolTable:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True, order=True)
class Arc:
    ilabel: int
    olabel: int
    weight: float
    nextstate: int


class Automaton:
    """An immutable weighted acceptor or transducer.

    ``arcs[q]`` lists the arcs leaving state ``q``; ``finals`` maps final
    states to their final weight.  An automaton with no states (``start`` is
    ``None``) accepts nothing.
    """

    __slots__ = ("_arcs", "_finals", "start", "kind", "_index")

    def __init__(
        self,
        arcs: Sequence[Sequence[Arc]],
        start: int | None,
        finals: Mapping[int, float],
        kind: str | None = None,
    ) -> None:
        n = len(arcs)
        self._arcs = tuple(tuple(a) for a in arcs)
        self._finals = dict(finals)
        if start is None:
            if n:
                raise ValueError("a non-empty automaton needs a start state")
        elif not 0 <= start < n:
            raise InvalidState(f"start state {start} out of range")
        self.start = start
        for q, out in enumerate(self._arcs):
            for arc in out:
                if not 0 <= arc.nextstate < n:
                    raise InvalidState(f"arc from {q} targets missing state {arc.nextstate}")
                if arc.ilabel == END or arc.olabel == END:
                    raise ValueError("END is not a valid arc label")
        for q in self._finals:
            if not 0 <= q < n:
                raise InvalidState(f"final state {q} out of range")
        same = all(a.ilabel == a.olabel for out in self._arcs for a in out)
        if kind is None:
            kind = "acceptor" if same else "transducer"
        if kind not in ("acceptor", "transducer"):
            raise ValueError(f"unknown kind {kind!r}")
        if kind == "acceptor" and not same:
            raise ValueError("acceptor arcs must have equal input and output labels")
        self.kind = kind
        self._index: list[dict[int, int]] | None = None

    @property
    def num_states(self) -> int:
        return len(self._arcs)

    @property
    def finals(self) -> Mapping[int, float]:
        return dict(self._finals)

    def arcs(self, state: int) -> tuple[Arc, ...]:
        self._check_state(state)
        return self._arcs[state]

    def num_arcs(self) -> int:
        return sum(len(out) for out in self._arcs)

    def is_final(self, state: int) -> bool:
        return state in self._finals

    def final_weight(self, state: int) -> float:
        return self._finals.get(state, float("inf"))

    def states(self) -> range:
        return range(len(self._arcs))

    def input_alphabet(self) -> set[int]:
        return {a.ilabel for out in self._arcs for a in out} - {EPSILON}

    def output_alphabet(self) -> set[int]:
        return {a.olabel for out in self._arcs for a in out} - {EPSILON}

    def _check_state(self, state: int) -> None:
        if not isinstance(state, int) or not 0 <= state < len(self._arcs):
            raise InvalidState(f"no state {state!r}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Automaton):
            return NotImplemented
        return (
            self._arcs == other._arcs
            and self._finals == other._finals
            and self.start == other.start
            and self.kind == other.kind
        )

    def __hash__(self) -> int:
        return hash((self._arcs, tuple(sorted(self._finals.items())), self.start))

    def __repr__(self) -> str:
        return (
            f"Automaton(kind={self.kind}, states={self.num_states}, "
            f"arcs={self.num_arcs()}, finals={sorted(self._finals)})"
        )


# -- construction -----------------------------------------------------------


def linear_acceptor(tokens: Sequence[str], table: SymbolTable) -> Automaton:
    """Chain acceptor for exactly ``tokens``; unseen tokens are added to ``table``."""
    if not tokens:
        raise EmptyInput("cannot build an acceptor for an empty token sequence")
    labels = [table.add(t) for t in tokens]
    return linear_acceptor_from_labels(labels)


def linear_acceptor_from_labels(labels: Sequence[int]) -> Automaton:
    if not labels:
        raise EmptyInput("cannot build an acceptor for an empty label sequence")
    arcs = [[Arc(lab, lab, 0.0, i + 1)] for i, lab in enumerate(labels)]
    arcs.append([])
    return Automaton(arcs, 0, {len(labels): 0.0}, kind="acceptor")


def identity_transducer(labels: Iterable[int]) -> Automaton:
    """One-state machine mapping every string over ``labels`` to itself."""
    loop = [Arc(lab, lab, 0.0, 0) for lab in sorted(set(labels)) if lab != EPSILON]
    return Automaton([loop], 0, {0: 0.0}, kind="transducer")


# -- structural helpers -----------------------------------------------------


def topological_order(a: Automaton) -> list[int]:
    """States reachable from the start, in topological order.

    Ties are broken by smallest state id.  Raises ``NotAcyclic`` if a cycle is
    reachable.
    """
    order = _kahn(a)
    if order is None:
        raise NotAcyclic("automaton contains a cycle")
    return order


def is_acyclic(a: Automaton) -> bool:
    return _kahn(a) is not None


def _reachable(a: Automaton) -> set[int]:
    if a.start is None:
        return set()
    seen = {a.start}
    stack = [a.start]
    while stack:
        q = stack.pop()
        for arc in a._arcs[q]:
            if arc.nextstate not in seen:
                seen.add(arc.nextstate)
                stack.append(arc.nextstate)
    return seen


def _kahn(a: Automaton) -> list[int] | None:
    reach = _reachable(a)
    indeg = dict.fromkeys(reach, 0)
    for q in reach:
        for arc in a._arcs[q]:
            indeg[arc.nextstate] += 1
    heap = [q for q, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        q = heapq.heappop(heap)
        order.append(q)
        for arc in a._arcs[q]:
            indeg[arc.nextstate] -= 1
            if indeg[arc.nextstate] == 0:
                heapq.heappush(heap, arc.nextstate)
    return order if len(order) == len(reach) else None


def _bfs_order(a: Automaton) -> list[int]:
    if a.start is None:
        return []
    seen = {a.start}
    order = [a.start]
    queue = deque([a.start])
    while queue:
        q = queue.popleft()
        for arc in sorted(a._arcs[q]):
            if arc.nextstate not in seen:
                seen.add(arc.nextstate)
                order.append(arc.nextstate)
                queue.append(arc.nextstate)
    return order


def trim(a: Automaton) -> Automaton:
    """Drop states that are unreachable from the start or cannot reach a final."""
    reach = _reachable(a)
    back: dict[int, list[int]] = {}
    for q in reach:
        for arc in a._arcs[q]:
            back.setdefault(arc.nextstate, []).append(q)
    coreach = {q for q in a._finals if q in reach}
    stack = list(coreach)
    while stack:
        q = stack.pop()
        for p in back.get(q, ()):
            if p not in coreach:
                coreach.add(p)
                stack.append(p)
    keep = reach & coreach
    if a.start not in keep:
        return Automaton([], None, {}, kind=a.kind)
    return _renumber(a, [q for q in range(a.num_states) if q in keep])


def canonicalize(a: Automaton) -> Automaton:
    """Trim, then renumber states topologically (BFS order for cyclic machines)."""
    a = trim(a)
    order = _kahn(a)
    if order is None:
        order = _bfs_order(a)
    return _renumber(a, order)


def _renumber(a: Automaton, order: Sequence[int]) -> Automaton:
    new_id = {q: i for i, q in enumerate(order)}
    arcs = []
    for q in order:
        out = {
            Arc(arc.ilabel, arc.olabel, arc.weight, new_id[arc.nextstate])
            for arc in a._arcs[q]
            if arc.nextstate in new_id
        }
        arcs.append(sorted(out, key=lambda x: (x.ilabel, x.olabel, x.nextstate, x.weight)))
    finals = {new_id[q]: w for q, w in a._finals.items() if q in new_id}
    start = new_id.get(a.start) if a.start is not None else None
    return Automaton(arcs, start, finals, kind=a.kind)


# -- algorithms -------------------------------------------------------------


def compose(a: Automaton, b: Automaton) -> Automaton:
    """Compose ``a`` with ``b`` (``a`` applied first).

    Only one operand may carry epsilons on the shared tape: either ``a`` has
    epsilon outputs or ``b`` has epsilon inputs, never both.  That is enough
    for the segmentation transducer (epsilon inputs) and the edit transducer
    (chained through linear acceptors), and it means no epsilon filter is
    needed to avoid redundant paths.
    """
    if a.start is None or b.start is None:
        return Automaton([], None, {})
    missing = a.output_alphabet() - b.input_alphabet()
    if missing:
        raise AlphabetMismatch(f"labels {sorted(missing)} have no match in the right operand")
    a_eps = any(arc.olabel == EPSILON for out in a._arcs for arc in out)
    b_eps = any(arc.ilabel == EPSILON for out in b._arcs for arc in out)
    if a_eps and b_eps:
        raise CompositionError(
            "both operands have epsilons on the shared tape; a full epsilon filter is not supported"
        )

    b_index: list[dict[int, list[Arc]]] = []
    for out in b._arcs:
        idx: dict[int, list[Arc]] = {}
        for arc in out:
            idx.setdefault(arc.ilabel, []).append(arc)
        b_index.append(idx)

    ids: dict[tuple[int, int], int] = {(a.start, b.start): 0}
    pairs = [(a.start, b.start)]
    arcs: list[list[Arc]] = []
    finals: dict[int, float] = {}

    def state_id(pair: tuple[int, int]) -> int:
        if pair not in ids:
            ids[pair] = len(pairs)
            pairs.append(pair)
        return ids[pair]

    i = 0
    while i < len(pairs):
        qa, qb = pairs[i]
        out: list[Arc] = []
        for x in a._arcs[qa]:
            if x.olabel == EPSILON:
                out.append(Arc(x.ilabel, EPSILON, x.weight, state_id((x.nextstate, qb))))
                continue
            for y in b_index[qb].get(x.olabel, ()):
                out.append(
                    Arc(x.ilabel, y.olabel, x.weight + y.weight, state_id((x.nextstate, y.nextstate)))
                )
        for y in b_index[qb].get(EPSILON, ()):
            out.append(Arc(EPSILON, y.olabel, y.weight, state_id((qa, y.nextstate))))
        arcs.append(out)
        if qa in a._finals and qb in b._finals:
            finals[i] = a._finals[qa] + b._finals[qb]
        i += 1
    return canonicalize(Automaton(arcs, 0, finals, kind="transducer"))


def project_output(t: Automaton) -> Automaton:
    """Acceptor over the output tape of ``t``."""
    arcs = [[Arc(x.olabel, x.olabel, x.weight, x.nextstate) for x in t._arcs[q]] for q in t.states()]
    return canonicalize(Automaton(arcs, t.start, t._finals, kind="acceptor"))


def project_input(t: Automaton) -> Automaton:
    arcs = [[Arc(x.ilabel, x.ilabel, x.weight, x.nextstate) for x in t._arcs[q]] for q in t.states()]
    return canonicalize(Automaton(arcs, t.start, t._finals, kind="acceptor"))


def remove_epsilon(a: Automaton) -> Automaton:
    """Remove arcs labelled epsilon on both tapes from an acyclic machine."""
    order = topological_order(a)
    closures: dict[int, dict[int, float]] = {}
    # Reverse topological order: a state's closure is built from its successors'.
    for q in reversed(order):
        closure = {q: 0.0}
        for arc in a._arcs[q]:
            if arc.ilabel == EPSILON and arc.olabel == EPSILON:
                for p, w in closures[arc.nextstate].items():
                    w += arc.weight
                    if w < closure.get(p, float("inf")):
                        closure[p] = w
        closures[q] = closure

    arcs: list[list[Arc]] = [[] for _ in a.states()]
    finals: dict[int, float] = {}
    for q in order:
        best: dict[tuple[int, int, int], float] = {}
        for p, wp in closures[q].items():
            for arc in a._arcs[p]:
                if arc.ilabel == EPSILON and arc.olabel == EPSILON:
                    continue
                key = (arc.ilabel, arc.olabel, arc.nextstate)
                w = wp + arc.weight
                if w < best.get(key, float("inf")):
                    best[key] = w
            if p in a._finals:
                fw = wp + a._finals[p]
                if fw < finals.get(q, float("inf")):
                    finals[q] = fw
        arcs[q] = [Arc(i, o, w, n) for (i, o, n), w in best.items()]
    return canonicalize(Automaton(arcs, a.start, finals, kind=a.kind))


def determinize_acyclic(a: Automaton) -> Automaton:
    """Weighted subset construction for an epsilon-free acyclic acceptor.

    Acyclic weighted acceptors are always determinizable, so this never
    fails on valid input.  Each result state carries residual weights that
    are pushed onto outgoing arcs and final weights.
    """
    if a.kind != "acceptor":
        raise ValueError("determinize_acyclic requires an acceptor; project first")
    topological_order(a)
    if any(arc.ilabel == EPSILON for out in a._arcs for arc in out):
        raise ValueError("determinize_acyclic requires an epsilon-free acceptor")
    if a.start is None:
        return a

    Subset = tuple[tuple[int, float], ...]
    start: Subset = ((a.start, 0.0),)
    ids: dict[Subset, int] = {start: 0}
    subsets = [start]
    arcs: list[list[Arc]] = []
    finals: dict[int, float] = {}
    i = 0
    while i < len(subsets):
        subset = subsets[i]
        by_label: dict[int, dict[int, float]] = {}
        fw = float("inf")
        for q, r in subset:
            for arc in a._arcs[q]:
                dest = by_label.setdefault(arc.ilabel, {})
                w = r + arc.weight
                if w < dest.get(arc.nextstate, float("inf")):
                    dest[arc.nextstate] = w
            if q in a._finals:
                fw = min(fw, r + a._finals[q])
        out = []
        for label in sorted(by_label):
            dest = by_label[label]
            wmin = min(dest.values())
            nxt: Subset = tuple(sorted((n, w - wmin) for n, w in dest.items()))
            if nxt not in ids:
                ids[nxt] = len(subsets)
                subsets.append(nxt)
            out.append(Arc(label, label, wmin, ids[nxt]))
        arcs.append(out)
        if fw != float("inf"):
            finals[i] = fw
        i += 1
    return canonicalize(Automaton(arcs, 0, finals, kind="acceptor"))


def is_deterministic(a: Automaton) -> bool:
    for out in a._arcs:
        labels = [arc.ilabel for arc in out]
        if EPSILON in labels or len(labels) != len(set(labels)):
            return False
    return True


def count_paths(a: Automaton) -> int:
    """Number of distinct accepting paths of an acyclic machine."""
    order = topological_order(a)
    if not order:
        return 0
    counts = dict.fromkeys(order, 0)
    counts[a.start] = 1
    for q in order:
        for arc in a._arcs[q]:
            counts[arc.nextstate] += counts[q]
    return sum(counts[q] for q in a._finals if q in counts)


def shortest_distance(a: Automaton) -> float:
    """Weight of the cheapest accepting path of an acyclic machine (inf if none)."""
    order = topological_order(a)
    if not order:
        return float("inf")
    dist = dict.fromkeys(order, float("inf"))
    dist[a.start] = 0.0
    for q in order:
        for arc in a._arcs[q]:
            w = dist[q] + arc.weight
            if w < dist[arc.nextstate]:
                dist[arc.nextstate] = w
    return min((dist[q] + w for q, w in a._finals.items() if q in dist), default=float("inf"))


def iter_paths(a: Automaton) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], float]]:
    """Yield ``(input labels, output labels, weight)`` for every accepting path.

    Epsilons are dropped from the label tuples.  Acyclic machines only.
    """
    topological_order(a)
    if a.start is None:
        return

    def walk(q: int, ins: tuple[int, ...], outs: tuple[int, ...], w: float):
        if q in a._finals:
            yield ins, outs, w + a._finals[q]
        for arc in a._arcs[q]:
            yield from walk(
                arc.nextstate,
                ins + ((arc.ilabel,) if arc.ilabel != EPSILON else ()),
                outs + ((arc.olabel,) if arc.olabel != EPSILON else ()),
                w + arc.weight,
            )

    yield from walk(a.start, (), (), 0.0)


def language(a: Automaton) -> set[tuple[int, ...]]:
    """Output-tape strings accepted by an acyclic machine."""
    return {outs for _, outs, _ in iter_paths(a)}


def accepts(a: Automaton, labels: Sequence[int]) -> bool:
    """Whether the input tape of ``a`` accepts ``labels``; works on cyclic machines."""
    if a.start is None:
        return False

    def closure(states: set[int]) -> set[int]:
        stack = list(states)
        seen = set(states)
        while stack:
            q = stack.pop()
            for arc in a._arcs[q]:
                if arc.ilabel == EPSILON and arc.nextstate not in seen:
                    seen.add(arc.nextstate)
                    stack.append(arc.nextstate)
        return seen

    current = closure({a.start})
    for lab in labels:
        current = closure({arc.nextstate for q in current for arc in a._arcs[q] if arc.ilabel == lab})
        if not current:
            return False
    return any(q in a._finals for q in current)


# -- deterministic traversal used by the decoder ----------------------------


def _index(a: Automaton) -> list[dict[int, int]]:
    if a._index is None:
        index = []
        for q, out in enumerate(a._arcs):
            row: dict[int, int] = {}
            for arc in out:
                if arc.ilabel in row or arc.ilabel == EPSILON:
                    raise ValueError(f"automaton is not deterministic at state {q}")
                row[arc.ilabel] = arc.nextstate
            index.append(row)
        a._index = index
    return a._index


def step(a: Automaton, state: int, label: int) -> int | None:
    """Successor of ``state`` on ``label`` in a deterministic machine, or ``None``."""
    a._check_state(state)
    return _index(a)[state].get(label)


def allowed_labels(a: Automaton, state: int) -> frozenset[int]:
    """Labels with an outgoing arc from ``state``, plus ``END`` if it is final."""
    a._check_state(state)
    labels = set(_index(a)[state])
    if state in a._finals:
        labels.add(END)
    return frozenset(labels)


# -- text dump ----------------------------------------------------------------


def _fmt_weight(w: float) -> str:
    return format(w, "g")


def dump(a: Automaton, table: SymbolTable | None = None) -> str:
    """AT&T-style text: ``src dst in out weight`` per arc, then ``state weight`` per final."""
    name = table.symbol if table is not None else str
    lines = []
    for q in a.states():
        for arc in a._arcs[q]:
            lines.append(
                f"{q}\t{arc.nextstate}\t{name(arc.ilabel)}\t{name(arc.olabel)}\t{_fmt_weight(arc.weight)}"
            )
    for q in sorted(a._finals):
        lines.append(f"{q}\t{_fmt_weight(a._finals[q])}")
    return "\n".join(lines) + "\n"


def load_dump(text: str, table: SymbolTable | None = None) -> Automaton:
    """Inverse of :func:`dump`; the start state is 0 by convention."""
    lookup = table.find if table is not None else int
    arcs: dict[int, list[Arc]] = {}
    finals: dict[int, float] = {}
    top = 0
    for line in text.splitlines():
        fields = line.split("\t")
        if not line.strip():
            continue
        if len(fields) == 5:
            src, dst = int(fields[0]), int(fields[1])
            arcs.setdefault(src, []).append(
                Arc(lookup(fields[2]), lookup(fields[3]), float(fields[4]), dst)
            )
            top = max(top, src, dst)
        elif len(fields) in (1, 2):
            q = int(fields[0])
            finals[q] = float(fields[1]) if len(fields) == 2 else 0.0
            top = max(top, q)
        else:
            raise ValueError(f"bad dump line: {line!r}")
    return Automaton([arcs.get(q, []) for q in range(top + 1)], 0, finals)
