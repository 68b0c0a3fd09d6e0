"""Word error rate against a brute-force edit-distance oracle."""

import itertools
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zrslm.eval import wer, word_edit_distance


def oracle_distance(ref: tuple, hyp: tuple) -> int:
    """Top-down memoized edit distance, structured unlike the production DP."""

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        if ref[i] == hyp[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j), go(i, j + 1), go(i + 1, j + 1))

    return go(0, 0)


def test_hand_cases():
    assert word_edit_distance(["a", "b"], ["a", "b"]) == 0
    assert word_edit_distance(["a", "b"], ["a", "x"]) == 1
    assert word_edit_distance(["a", "b"], ["a"]) == 1
    assert word_edit_distance(["a"], ["a", "b"]) == 1
    assert word_edit_distance(["a", "b", "c"], []) == 3
    assert word_edit_distance([], []) == 0
    assert word_edit_distance(["a", "b", "c", "d"], ["b", "c", "d", "e"]) == 2


def test_exhaustive_against_oracle_up_to_length_six():
    alphabet = ("a", "b", "c")
    seqs = [seq for n in range(0, 7)
            for seq in itertools.product(alphabet, repeat=n)
            if n <= 3]
    long_seqs = [tuple(alphabet[(i * 7 + k) % 3] for k in range(n))
                 for n in (4, 5, 6) for i in range(9)]
    pool = seqs + long_seqs
    for ref in pool:
        for hyp in pool:
            assert word_edit_distance(list(ref), list(hyp)) == \
                oracle_distance(ref, hyp), (ref, hyp)


word_seqs = st.lists(st.sampled_from(["a", "b", "c"]), max_size=6)


@settings(max_examples=300)
@given(word_seqs, word_seqs)
def test_random_pairs_match_oracle(ref, hyp):
    assert word_edit_distance(ref, hyp) == oracle_distance(tuple(ref), tuple(hyp))


@given(word_seqs, word_seqs)
def test_symmetry(a, b):
    assert word_edit_distance(a, b) == word_edit_distance(b, a)


@given(word_seqs, word_seqs, word_seqs)
def test_triangle_inequality(a, b, c):
    assert word_edit_distance(a, c) <= \
        word_edit_distance(a, b) + word_edit_distance(b, c)


def test_corpus_wer_pools_edits_over_reference_words():
    # 1 edit over 5 reference words, not the mean of per-pair rates.
    assert wer(["a", "c d e f"], ["b", "c d e f"]) == pytest.approx(1 / 5)


def test_wer_can_exceed_one():
    assert wer(["a"], ["b c d"]) == pytest.approx(3.0)


def test_wer_normalizes_both_sides():
    assert wer(["Hello, world!"], ["hello world"]) == 0.0
    assert wer(["ba | da"], ["ba da"]) == 0.0


def test_wer_validates_inputs():
    with pytest.raises(ValueError, match="references"):
        wer(["a"], ["a", "b"])
    with pytest.raises(ValueError, match="at least one"):
        wer([], [])
    with pytest.raises(ValueError, match="pair 1"):
        wer(["a", "?!"], ["a", "b"])


def test_empty_hypothesis_counts_deletions():
    assert wer(["a b c"], [""]) == pytest.approx(1.0)
