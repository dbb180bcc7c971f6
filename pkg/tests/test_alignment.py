import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segfst.alignment import (
    DELETE,
    INSERT,
    MATCH,
    SUBSTITUTE,
    fst_edit_distance,
    levenshtein_align,
    project_boundaries,
    repair_output,
)
from segfst.errors import LengthMismatch
from segfst.segmentation import Segmentation, insert_delimiters

from oracles import edit_distance

words = st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=8)


def kinds(path):
    return [op.kind for op in path.ops]


def test_cat_cats():
    path = levenshtein_align(["the", "cat", "sat"], ["the", "cats", "sat"])
    assert kinds(path) == [MATCH, SUBSTITUTE, MATCH]
    assert path.total_cost == 1


def test_identity_alignment():
    path = levenshtein_align(list("abc"), list("abc"))
    assert kinds(path) == [MATCH] * 3 and path.total_cost == 0


def test_empty_source():
    path = levenshtein_align([], ["a", "b"])
    assert kinds(path) == [INSERT, INSERT] and path.total_cost == 2
    assert levenshtein_align([], []).ops == ()


def test_tie_break_prefers_delete_over_insert():
    # "a b" -> "b": deleting "a" is the only optimal path; "a" -> "b" ties sub only.
    assert kinds(levenshtein_align(["a", "b"], ["b"])) == [DELETE, MATCH]
    assert kinds(levenshtein_align(["a"], ["b"])) == [SUBSTITUTE]
    # "a b" vs "b a": sub+sub and del+ins tie at cost 2; substitution wins.
    assert kinds(levenshtein_align(["a", "b"], ["b", "a"])) == [SUBSTITUTE, SUBSTITUTE]


def test_cost_matches_oracle_on_10k_random_pairs():
    rng = random.Random(7)
    vocab = ["a", "b", "c", "d", "e"]
    for _ in range(10_000):
        src = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
        tgt = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
        assert levenshtein_align(src, tgt).total_cost == edit_distance(src, tgt)


@given(words, words)
@settings(max_examples=200, deadline=None)
def test_path_invariants(src, tgt):
    path = levenshtein_align(src, tgt)
    srcs = [op.src for op in path.ops if op.src is not None]
    tgts = [op.tgt for op in path.ops if op.tgt is not None]
    assert srcs == list(range(len(src)))
    assert tgts == list(range(len(tgt)))
    for op in path.ops:
        if op.kind == MATCH:
            assert src[op.src] == tgt[op.tgt]
        if op.kind == SUBSTITUTE:
            assert src[op.src] != tgt[op.tgt]


@given(st.lists(st.sampled_from(["a", "b", "c"]), max_size=5), st.lists(st.sampled_from(["a", "b", "c"]), max_size=5))
@settings(max_examples=100, deadline=None)
def test_fst_cost_equals_dp_cost(src, tgt):
    assert fst_edit_distance(src, tgt) == levenshtein_align(src, tgt).total_cost


# -- projection -------------------------------------------------------------------


def test_identity_projection():
    seg = Segmentation(6, (2, 4))
    assert project_boundaries(seg, levenshtein_align(list("abcdef"), list("abcdef"))) == seg


def test_for_four_example():
    ref = "this train leaves at four the next train will arrive in ten minutes".split()
    asr = "this train leaves at for the next train will arrive in ten minutes".split()
    gold = Segmentation(len(ref), (ref.index("the"),))
    seg = project_boundaries(gold, levenshtein_align(ref, asr), len(asr))
    assert insert_delimiters(asr, seg)[4:7] == ["for", "<SENT>", "the"]
    assert seg.boundaries == (5,)


def test_boundary_before_deleted_token_moves_right():
    # Source a b x c, boundary before x (2); x is deleted, c matches target index 2.
    path = levenshtein_align(["a", "b", "x", "c"], ["a", "b", "c"])
    assert kinds(path) == [MATCH, MATCH, DELETE, MATCH]
    assert project_boundaries(Segmentation(4, (2,)), path).boundaries == (2,)


def test_boundary_dropped_when_nothing_follows():
    path = levenshtein_align(["a", "b", "x"], ["a", "b"])
    assert project_boundaries(Segmentation(3, (2,)), path).boundaries == ()


def test_projection_length_checks():
    path = levenshtein_align(["a", "b"], ["a", "b"])
    with pytest.raises(LengthMismatch):
        project_boundaries(Segmentation(3, (1,)), path)
    with pytest.raises(LengthMismatch):
        project_boundaries(Segmentation(2, (1,)), path, tgt_len=5)


# -- repair -------------------------------------------------------------------------


def test_repair_exact_reproduction():
    tokens = "i am hungry i am sleepy".split()
    gen = "i am hungry <SENT> i am sleepy".split()
    assert repair_output(gen, tokens) == Segmentation(6, (3,))


def test_repair_hallucinated_token_after_delimiter():
    tokens = "a b c d".split()
    assert repair_output("a b <SENT> zz c d".split(), tokens) == Segmentation(4, (2,))


def test_repair_dropped_token_inside_segment():
    tokens = "a b c <SENT> d e f".split()
    tokens = [t for t in tokens if t != "<SENT>"]
    assert repair_output("a c <SENT> d e f".split(), tokens) == Segmentation(6, (3,))


def test_repair_normalises_delimiter_runs():
    assert repair_output("<SENT> a <SENT> <SENT> b <SENT>".split(), ["a", "b"]) == Segmentation(2, (1,))
    assert repair_output([], ["a", "b"]) == Segmentation(2, ())


@given(st.lists(st.sampled_from(["a", "b", "c", "<SENT>", "<unk>", "</s>"]), max_size=15),
       st.lists(st.sampled_from(["a", "b", "c"]), min_size=1, max_size=8))
@settings(max_examples=300, deadline=None)
def test_repair_is_total(generated, tokens):
    seg = repair_output(generated, tokens)
    assert seg.n == len(tokens)
    assert all(0 < b < len(tokens) for b in seg.boundaries)


@given(st.lists(st.sampled_from(["a", "b", "c"]), min_size=1, max_size=10), st.data())
@settings(max_examples=200, deadline=None)
def test_repair_inverts_insertion(tokens, data):
    n = len(tokens)
    bounds = data.draw(st.sets(st.integers(1, max(n - 1, 1))).filter(lambda s: all(b < n for b in s)))
    seg = Segmentation.of(n, bounds)
    assert repair_output(insert_delimiters(tokens, seg), tokens) == seg


@given(words, words, st.data())
@settings(max_examples=200, deadline=None)
def test_projection_is_monotone(src, tgt, data):
    if len(src) < 2:
        return
    bounds = data.draw(st.sets(st.integers(1, len(src) - 1)))
    path = levenshtein_align(src, tgt)
    image = path.src_to_tgt()
    out = project_boundaries(Segmentation.of(len(src), bounds), path)
    # Each projected boundary comes from a source boundary, in the same order.
    nexts = []
    for b in sorted(bounds):
        later = [image[i] for i in range(b, len(src)) if image[i] is not None]
        if later and 0 < later[0] < len(tgt):
            nexts.append(later[0])
    assert list(out.boundaries) == sorted(set(nexts))
    assert nexts == sorted(nexts)
