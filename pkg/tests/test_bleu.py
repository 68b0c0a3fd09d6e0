"""Corpus BLEU against hand-counted n-gram statistics."""

import math

import pytest

from zrslm.eval import bleu


def test_perfect_match_is_100():
    assert bleu(["the cat sat down", "ba da ka"],
                ["the cat sat down", "ba da ka"]) == pytest.approx(100.0)


def test_fully_disjoint_is_0():
    assert bleu(["a b c d"], ["e f g h"]) == 0.0


def test_hand_counted_example():
    # refs/hyps chosen so every order has hand-countable totals:
    #   hyp1 = "a b c d" vs ref "a b c d": 4/4 unigrams, 3/3 bigrams,
    #     2/2 trigrams, 1/1 four-grams.
    #   hyp2 = "e f x h" vs ref "e f g h": 3/4 unigrams, 1/3 bigrams,
    #     0/2 trigrams, 0/1 four-grams... which would zero the score, so
    #   hyp2 = "e f g x h" vs ref "e f g h": 4/5 unigrams ("x" misses),
    #     2/4 bigrams ("g x", "x h" miss), 1/3 trigrams, 0/2 four-grams.
    # Instead keep all orders positive with a length-8 second pair:
    refs = ["a b c d", "p q r s t u v w"]
    hyps = ["a b c d", "p q r s x u v w"]
    # order 1: (4 + 7) / (4 + 8) = 11/12
    # order 2: (3 + 5) / (3 + 7) = 8/10   (x breaks "t u" and makes "s x", "x u")
    # order 3: (2 + 3) / (2 + 6) = 5/8    (surviving: pqr,qrs,uvw + the 2 from pair 1)
    # order 4: (1 + 1) / (1 + 5) = 2/6    (surviving: uvw w? no: "t u v w" broken;
    #                                      survivors are "p q r s" and "a b c d")
    # lengths match so brevity penalty is 1.
    expected = 100.0 * math.exp(
        0.25 * (math.log(11 / 12) + math.log(8 / 10)
                + math.log(5 / 8) + math.log(2 / 6)))
    assert bleu(refs, hyps) == pytest.approx(expected, abs=1e-9)


def test_brevity_penalty():
    # Identical prefix, hypothesis one word short: all matched n-grams are
    # perfect so the score is exactly the penalty, exp(1 - 4/3).
    score = bleu(["a b c d"], ["a b c"])
    assert score == pytest.approx(100.0 * math.exp(1 - 4 / 3), abs=1e-9)


def test_no_penalty_for_long_hypothesis():
    # hyp longer than ref: BP stays 1, only the precisions drop.
    refs = ["a b c d"]
    hyps = ["a b c d e"]
    expected = 100.0 * math.exp(
        0.25 * (math.log(4 / 5) + math.log(3 / 4)
                + math.log(2 / 3) + math.log(1 / 2)))
    assert bleu(refs, hyps) == pytest.approx(expected, abs=1e-9)


def test_clipping_caps_repeated_ngrams():
    # "a a a a" vs ref with two a's: clipped unigram count is 2.
    refs = ["a a b c"]
    hyps = ["a a a a"]
    expected = 100.0 * math.exp(
        0.25 * (math.log(2 / 4) + math.log(1 / 3)))
    # orders 3 and 4 have hyp totals > 0 but matches 0 -> score is 0.
    assert bleu(refs, hyps) == 0.0
    del expected


def test_short_corpus_skips_unreachable_orders():
    # All segments shorter than 3 words: orders 3, 4 have zero totals on
    # both sides and are skipped rather than zeroing the score.
    refs = ["a b", "c d"]
    hyps = ["a b", "c d"]
    assert bleu(refs, hyps) == pytest.approx(100.0)


def test_empty_hypotheses_score_zero():
    with pytest.warns(UserWarning):
        assert bleu(["a b"], [""]) == 0.0


def test_normalization_applies():
    assert bleu(["The cat sat."], ["the cat sat"]) == pytest.approx(100.0)


def test_validates_lengths():
    with pytest.raises(ValueError):
        bleu(["a"], ["a", "b"])
    with pytest.raises(ValueError):
        bleu([], [])


def test_corpus_level_not_mean_of_segments():
    # Pooled counts: pair 1 perfect len 4, pair 2 disjoint len 4.
    # order1 4/8, order2 3/6, order3 2/4, order4 1/2 -> geometric mean 1/2.
    refs = ["a b c d", "e f g h"]
    hyps = ["a b c d", "w x y z"]
    assert bleu(refs, hyps) == pytest.approx(50.0, abs=1e-9)
