"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the summary lines appear at
the end of the session) or directly with ``python tests/test_acceptance.py``.
Tolerances are fixed here: every criterion is exact except criterion 5,
whose thresholds are the stated inequalities on corpus F1.
"""

from __future__ import annotations

import itertools
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import all_segmentations, brute_force_decode, edit_distance, prf  # noqa: E402

from segfst.alignment import levenshtein_align, project_boundaries  # noqa: E402
from segfst.constraints import compile_window_constraint  # noqa: E402
from segfst.decoding import DecodeConfig, Mode, decode_window  # noqa: E402
from segfst.evaluation import (  # noqa: E402
    PRF,
    boundary_prf,
    corpus_prf,
    fixed_length_segment,
    oracle_segment,
    reference_boundaries,
    wellformed_rate,
)
from segfst.fst import SymbolTable, count_paths, is_deterministic, language  # noqa: E402
from segfst.longform import WindowSpec, make_windows, segment_passage, segment_passage_detailed  # noqa: E402
from segfst.scoring import HallucinateScorer, NgramScorer, RandomScorer, train_ngram  # noqa: E402
from segfst.segmentation import Segmentation, insert_delimiters, parse_segmentation  # noqa: E402
from segfst.synthetic import make_corpus  # noqa: E402

RESULTS: dict[int, tuple[bool, str]] = {}


def record(number: int, ok: bool, detail: str) -> None:
    RESULTS[number] = (ok, detail)
    print(f"acceptance criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")


class FuzzScorer:
    """Random scores with a per-trial bias towards delimiters, <unk> or stopping."""

    shareable = True

    def __init__(self, seed: int) -> None:
        rng = random.Random(seed)
        self.inner = RandomScorer(seed)
        self.bias = {"<SENT>": rng.uniform(-3, 3), "<unk>": rng.uniform(-3, 3), "</s>": rng.uniform(-3, 3)}

    def score_next(self, ctx, candidates):
        scores = self.inner.score_next(ctx, candidates)
        return {c: s + self.bias.get(c, 0.0) for c, s in scores.items()}


# -- 1 ---------------------------------------------------------------------------------


def check_constraint_soundness(trials: int = 1000) -> tuple[bool, str]:
    rng = random.Random(2024)
    fst_ok = repair_ok = 0
    start = time.perf_counter()
    for trial in range(trials):
        n = rng.randint(1, 40)
        window = [rng.choice("abcdefgh") for _ in range(n)]
        beam = rng.randint(1, 4)
        scorer = FuzzScorer(trial)
        fst = decode_window(scorer, window, DecodeConfig(beam, Mode.FST))
        try:
            parsed = parse_segmentation(fst.generated, window)
            fst_ok += fst.report.wellformed and parsed == fst.segmentation
        except Exception:
            pass
        rep = decode_window(scorer, window, DecodeConfig(beam, Mode.REPAIR))
        seg = rep.segmentation
        repair_ok += (
            seg is not None
            and seg.n == n
            and all(0 < b < n for b in seg.boundaries)
            and list(seg.boundaries) == sorted(set(seg.boundaries))
        )
    elapsed = time.perf_counter() - start
    ok = fst_ok == trials and repair_ok == trials and elapsed < 60
    return ok, f"fst wellformed {fst_ok}/{trials}, repair valid {repair_ok}/{trials}, {elapsed:.1f}s"


# -- 2 ---------------------------------------------------------------------------------


def check_hallucination() -> tuple[bool, str]:
    passages = make_corpus(20, seed=31)
    rates = {}
    for mode in (Mode.UNCONSTRAINED, Mode.FST):
        reports = []
        for p in passages:
            res = segment_passage_detailed(p.tokens, HallucinateScorer(), DecodeConfig(1, mode))
            reports.extend(d.report for d in res.decodes)
        rates[mode] = (wellformed_rate(reports), len(reports))
    none_rate, n_windows = rates[Mode.UNCONSTRAINED]
    fst_rate, _ = rates[Mode.FST]
    ok = none_rate == 0.0 and fst_rate == 1.0
    return ok, f"{n_windows} windows: unconstrained {none_rate:.3f}, fst {fst_rate:.3f}"


# -- 3 ---------------------------------------------------------------------------------


def check_cardinality() -> tuple[bool, str]:
    failures = []
    for n in range(1, 13):
        tokens = [f"t{i % 5}" for i in range(n)]
        table = SymbolTable()
        composed = compile_window_constraint(tokens, table, method="compose")
        direct = compile_window_constraint(tokens, table, method="direct")
        brute = {tuple(table.find(x) for x in s) for s in all_segmentations(tokens)}
        if not (
            count_paths(composed) == 2 ** (n - 1) == len(brute)
            and language(composed) == brute
            and language(direct) == brute
            and composed == direct
            and is_deterministic(composed)
        ):
            failures.append(n)
    return not failures, "n=1..12 exact" if not failures else f"mismatch at n={failures}"


# -- 4 ---------------------------------------------------------------------------------


def check_oracle_identity() -> tuple[bool, str]:
    passages = make_corpus(100, seed=41)
    pairs = []
    for p in passages:
        ref = p.punctuated()
        clean, gold = reference_boundaries(ref)
        pairs.append((oracle_segment(ref, clean), gold))
    score = corpus_prf(pairs)
    return score.f1 == 1.0, f"F1 = {score.f1:.3f} over {len(pairs)} passages"


# -- 5 ---------------------------------------------------------------------------------


def check_beam_vs_greedy() -> tuple[bool, str]:
    start = time.perf_counter()
    train = make_corpus(500, seed=1001)
    test = make_corpus(200, seed=7)
    scorer = NgramScorer(train_ngram([p.delimited() for p in train], order=3, k=0.1))
    golds = [p.segmentation for p in test]
    f1 = {}
    for beam in (1, 4):
        preds = [segment_passage(p.tokens, scorer, DecodeConfig(beam, Mode.FST)) for p in test]
        f1[beam] = corpus_prf(zip(preds, golds)).f1
    fixed = corpus_prf((fixed_length_segment(g.n, 17), g) for g in golds).f1
    elapsed = time.perf_counter() - start
    ok = f1[4] >= f1[1] and min(f1.values()) >= fixed + 0.3 and elapsed < 300
    return ok, f"beam4 F1 {f1[4]:.3f}, greedy F1 {f1[1]:.3f}, FixedLength(17) F1 {fixed:.3f}, {elapsed:.1f}s"


# -- 6 ---------------------------------------------------------------------------------


class FreeSplitScorer:
    shareable = True

    def score_next(self, ctx, candidates):
        return {c: 0.0 if c == "<SENT>" else -1.0 for c in candidates}


def check_brute_force_equivalence() -> tuple[bool, str]:
    corpus = [p.delimited() for p in make_corpus(50, seed=61)]
    ngram = NgramScorer(train_ngram(corpus, order=3))
    vocab = sorted({t for seq in corpus for t in seq if t != "<SENT>"})
    rng = random.Random(6)
    cases = mismatches = 0
    for n in range(1, 11):
        for trial in range(4):
            window = [rng.choice(vocab[:12]) for _ in range(n)]
            for scorer in (ngram, RandomScorer(100 * n + trial), FreeSplitScorer()):
                res = decode_window(scorer, window, DecodeConfig(2 ** (n - 1), Mode.FST))
                labels, score = brute_force_decode(scorer, window)
                cases += 1
                mismatches += (res.generated, res.score) != (labels, score)
    return mismatches == 0, f"{cases - mismatches}/{cases} windows identical (n=1..10)"


# -- 7 ---------------------------------------------------------------------------------


def check_windowing() -> tuple[bool, str]:
    specs = [WindowSpec(40, 10, 5), WindowSpec(20, 10, 5), WindowSpec(100, 10, 5), WindowSpec(10, 4, 2)]
    for spec in specs:
        for n in range(1, 501):
            covered = list(itertools.chain.from_iterable(
                range(w.adopt_start, w.adopt_end) for w in make_windows(n, spec)
            ))
            if covered != list(range(n)):
                return False, f"adopt ranges do not partition n={n} for {spec}"
    rng = random.Random(7)
    for seed in range(10):
        tokens = [rng.choice("abcdef") for _ in range(rng.randint(1, 40))]
        for mode in Mode:
            cfg = DecodeConfig(2, mode)
            direct = decode_window(RandomScorer(seed), tokens, cfg)
            passage = segment_passage_detailed(tokens, RandomScorer(seed), cfg)
            if passage.decodes != (direct,):
                return False, f"n={len(tokens)} differs from single-window decoding"
    spec = WindowSpec(20, 10, 5)
    for seed in range(5):
        tokens = [rng.choice("abcdef") for _ in range(rng.randint(60, 200))]
        base = segment_passage(tokens, RandomScorer(seed), DecodeConfig(2), spec)
        k = len(make_windows(len(tokens), spec))
        for order_seed in range(3):
            order = list(range(k))
            random.Random(order_seed).shuffle(order)
            got = segment_passage_detailed(tokens, RandomScorer(seed), DecodeConfig(2), spec, order=order)
            if got.segmentation != base:
                return False, "stitched output depends on window order"
    return True, "partition n=1..500 x 4 specs, single-window identity, order invariance"


# -- 8 ---------------------------------------------------------------------------------


def check_alignment() -> tuple[bool, str]:
    rng = random.Random(8)
    vocab = ["a", "b", "c", "d", "e"]
    bad = 0
    for _ in range(10_000):
        src = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
        tgt = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
        bad += levenshtein_align(src, tgt).total_cost != edit_distance(src, tgt)
    ref = "this train leaves at four the next train will arrive in ten minutes".split()
    asr = "this train leaves at for the next train will arrive in ten minutes".split()
    gold = Segmentation(len(ref), (ref.index("the"),))
    projected = project_boundaries(gold, levenshtein_align(ref, asr), len(asr))
    example = insert_delimiters(asr, projected)[4:7] == ["for", "<SENT>", "the"]
    return bad == 0 and example, f"{10_000 - bad}/10000 costs equal, for/four boundary {'before' if example else 'not before'} 'the'"


# -- 9 ---------------------------------------------------------------------------------


def check_metrics() -> tuple[bool, str]:
    s = lambda n, *b: Segmentation(n, tuple(b))  # noqa: E731
    checks = [
        boundary_prf(s(10, 3, 7), s(10, 3, 8)) == PRF(0.5, 0.5, 0.5),
        boundary_prf(s(10, 2, 5), s(10, 2, 5)) == PRF(1.0, 1.0, 1.0),
        boundary_prf(s(5), s(5)) == PRF(1.0, 1.0, 1.0),
        boundary_prf(s(5), s(5, 2)) == PRF(0.0, 0.0, 0.0),
        boundary_prf(s(5, 2), s(5)) == PRF(0.0, 0.0, 0.0),
        tuple(boundary_prf(s(12, 1, 4, 9), s(12, 4, 9, 11))) == prf({1, 4, 9}, {4, 9, 11}),
    ]
    # Two passages of different sizes: micro pools counts, macro averages F1.
    pairs = [(s(10, 5), s(10, 5)), (s(20, 2, 4, 6, 8), s(20, 8, 15))]
    micro, macro = corpus_prf(pairs, "micro"), corpus_prf(pairs, "macro")
    p, r = 2 / 5, 2 / 3
    checks.append(micro == PRF(p, r, 2 * p * r / (p + r)))
    f2 = 2 * (1 / 4) * (1 / 2) / (1 / 4 + 1 / 2)
    checks.append(macro.f1 == (1.0 + f2) / 2 and macro.f1 != micro.f1)
    return all(checks), f"{sum(checks)}/{len(checks)} hand-computed cases"


CRITERIA = {
    1: check_constraint_soundness,
    2: check_hallucination,
    3: check_cardinality,
    4: check_oracle_identity,
    5: check_beam_vs_greedy,
    6: check_brute_force_equivalence,
    7: check_windowing,
    8: check_alignment,
    9: check_metrics,
}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    ok, detail = CRITERIA[number]()
    record(number, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for number, check in sorted(CRITERIA.items()):
        ok, detail = check()
        record(number, ok, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
