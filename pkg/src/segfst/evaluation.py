"""Segmentation quality metrics and reference segmentation policies."""

from __future__ import annotations

import csv
import io
import json
import string
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .alignment import levenshtein_align, project_boundaries
from .errors import LengthMismatch
from .segmentation import Segmentation

TERMINAL_PUNCT = frozenset(".!?")
# Closing characters that may trail sentence-final punctuation: `end."` or `end.)`.
_CLOSERS = "\"')]}»”’"
_STRIP = string.punctuation + "“”‘’«»…—–"


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


def _prf(tp: int, n_pred: int, n_gold: int) -> PRF:
    if n_pred == 0 and n_gold == 0:
        return PRF(1.0, 1.0, 1.0)
    if n_pred == 0 or n_gold == 0:
        return PRF(0.0, 0.0, 0.0)
    p, r = tp / n_pred, tp / n_gold
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PRF(p, r, f)


def _units(seg: Segmentation, unit: str) -> set:
    if unit == "boundary":
        return set(seg.boundaries)
    if unit == "segment":
        return set(seg.spans())
    raise ValueError(f"unknown unit {unit!r}; use 'boundary' or 'segment'")


def _counts(pred: Segmentation, gold: Segmentation, unit: str) -> tuple[int, int, int]:
    if pred.n != gold.n:
        raise LengthMismatch(f"predicted passage has {pred.n} tokens, reference {gold.n}")
    p, g = _units(pred, unit), _units(gold, unit)
    return len(p & g), len(p), len(g)


def boundary_prf(pred: Segmentation, gold: Segmentation, unit: str = "boundary") -> PRF:
    """Precision, recall and F1 of predicted against reference boundaries.

    The passage end is not counted.  If both sides have no boundaries the
    score is perfect; if exactly one side is empty it is zero.  With
    ``unit="segment"`` whole segments must match exactly instead.
    """
    return _prf(*_counts(pred, gold, unit))


def corpus_prf(
    pairs: Iterable[tuple[Segmentation, Segmentation]],
    average: str = "micro",
    unit: str = "boundary",
) -> PRF:
    """Corpus-level scores; micro pools counts, macro averages per-passage scores."""
    pairs = list(pairs)
    if average == "micro":
        tp = n_pred = n_gold = 0
        for pred, gold in pairs:
            a, b, c = _counts(pred, gold, unit)
            tp, n_pred, n_gold = tp + a, n_pred + b, n_gold + c
        return _prf(tp, n_pred, n_gold)
    if average == "macro":
        if not pairs:
            return PRF(1.0, 1.0, 1.0)
        scores = [boundary_prf(p, g, unit) for p, g in pairs]
        return PRF(*(sum(s[i] for s in scores) / len(scores) for i in range(3)))
    raise ValueError(f"unknown average {average!r}")


# -- reference policies -------------------------------------------------------


def fixed_length_segment(n: int, length: int) -> Segmentation:
    """Disjoint segments of ``length`` tokens (the last may be shorter)."""
    if length < 1:
        raise ValueError("segment length must be at least 1")
    return Segmentation(n, tuple(range(length, n, length)))


def is_sentence_final(token: str, abbreviations: frozenset[str] = frozenset()) -> bool:
    if token.lower() in abbreviations:
        return False
    core = token.rstrip(_CLOSERS)
    return bool(core) and core[-1] in TERMINAL_PUNCT


def normalize_token(token: str) -> str:
    """Lowercase and strip surrounding punctuation, as ASR post-processing does."""
    return token.strip(_STRIP).lower()


def reference_boundaries(
    ref_tokens: Sequence[str], abbreviations: Iterable[str] = ()
) -> tuple[list[str], Segmentation]:
    """Clean tokens and sentence boundaries of a punctuated reference.

    A boundary follows every token ending in ``.``, ``!`` or ``?`` unless it
    is listed in ``abbreviations`` (compared lowercased, e.g. ``"st."``).
    Tokens that are pure punctuation are dropped but still end a sentence.
    """
    abbrev = frozenset(a.lower() for a in abbreviations)
    clean: list[str] = []
    bounds: set[int] = set()
    for tok in ref_tokens:
        final = is_sentence_final(tok, abbrev)
        norm = normalize_token(tok)
        if norm:
            clean.append(norm)
        if final and clean:
            bounds.add(len(clean))
    return clean, Segmentation.of(len(clean), (b for b in bounds if b < len(clean)))


def oracle_segment(
    ref_punctuated: Sequence[str], asr: Sequence[str], abbreviations: Iterable[str] = ()
) -> Segmentation:
    """Reference sentence boundaries projected onto an ASR transcript."""
    clean, gold = reference_boundaries(ref_punctuated, abbreviations)
    path = levenshtein_align(clean, list(asr))
    return project_boundaries(gold, path, len(asr))


# -- histograms and wellformedness -------------------------------------------


DEFAULT_BIN_EDGES = (0, 10, 20, 30, 40, 50)


def bin_labels(edges: Sequence[int] = DEFAULT_BIN_EDGES) -> list[str]:
    labels = [f"{lo}-{hi - 1}" for lo, hi in zip(edges, edges[1:])]
    labels.append(f">={edges[-1]}")
    return labels


def length_histogram(
    segs: Segmentation | Iterable[Segmentation], edges: Sequence[int] = DEFAULT_BIN_EDGES
) -> dict[str, int]:
    """Count segment lengths in bins ``[e_i, e_{i+1})`` plus an open last bin.

    The default is width-10 bins with everything of 50 tokens or more
    pooled into ``">=50"``.
    """
    if isinstance(segs, Segmentation):
        segs = [segs]
    if list(edges) != sorted(set(edges)) or not edges:
        raise ValueError("bin edges must be strictly increasing")
    labels = bin_labels(edges)
    hist = dict.fromkeys(labels, 0)
    for seg in segs:
        for length in seg.segment_lengths():
            if length < edges[0]:
                raise ValueError(f"segment length {length} below the first bin edge")
            idx = sum(length >= e for e in edges) - 1
            hist[labels[idx]] += 1
    return hist


def wellformed_rate(reports: Iterable) -> float:
    """Fraction of raw decoder outputs that were well-formed (1.0 for no outputs)."""
    flags = [r.wellformed for r in reports]
    return sum(flags) / len(flags) if flags else 1.0


# -- corpus report ------------------------------------------------------------


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    macro_f1: float
    n_passages: int
    unit: str = "boundary"
    wellformed_rate: float | None = None
    length_histogram: dict[str, int] = field(default_factory=dict)
    reference_length_histogram: dict[str, int] = field(default_factory=dict)
    per_passage: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_passages": self.n_passages,
            "unit": self.unit,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "macro_f1": self.macro_f1,
            "wellformed_rate": self.wellformed_rate,
            "length_histogram": dict(self.length_histogram),
            "reference_length_histogram": dict(self.reference_length_histogram),
            "per_passage": list(self.per_passage),
        }

    def to_json(self, per_passage: bool = True) -> str:
        data = self.to_dict()
        if not per_passage:
            del data["per_passage"]
        return json.dumps(data, indent=2)

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin", "predicted", "reference"])
        for label, count in self.length_histogram.items():
            writer.writerow([label, count, self.reference_length_histogram.get(label, 0)])
        return buf.getvalue()

    def per_passage_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["passage", "n_tokens", "n_pred", "n_gold", "precision", "recall", "f1"])
        for row in self.per_passage:
            writer.writerow([row[k] for k in
                             ("passage", "n_tokens", "n_pred", "n_gold", "precision", "recall", "f1")])
        return buf.getvalue()


def evaluate(
    preds: Sequence[Segmentation],
    golds: Sequence[Segmentation],
    reports: Iterable | None = None,
    unit: str = "boundary",
) -> EvalReport:
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predicted passages but {len(golds)} references")
    pairs = list(zip(preds, golds))
    micro = corpus_prf(pairs, "micro", unit)
    macro = corpus_prf(pairs, "macro", unit)
    rows = []
    for i, (p, g) in enumerate(pairs):
        s = boundary_prf(p, g, unit)
        rows.append({
            "passage": i,
            "n_tokens": p.n,
            "n_pred": len(p.boundaries),
            "n_gold": len(g.boundaries),
            "precision": s.precision,
            "recall": s.recall,
            "f1": s.f1,
        })
    return EvalReport(
        precision=micro.precision,
        recall=micro.recall,
        f1=micro.f1,
        macro_f1=macro.f1,
        n_passages=len(pairs),
        unit=unit,
        wellformed_rate=wellformed_rate(reports) if reports is not None else None,
        length_histogram=length_histogram(preds),
        reference_length_histogram=length_histogram(golds),
        per_passage=rows,
    )
