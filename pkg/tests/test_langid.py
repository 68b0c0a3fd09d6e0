"""Char n-gram naive-Bayes language ID against hand-computable oracles."""

import math
from collections import Counter

import numpy as np
import pytest

from zrslm.eval import (
    UNKNOWN,
    LangIdModel,
    confusion_matrix,
    fit_langid,
    language_accuracy,
    normalize_confusion,
)
from zrslm.eval.langid import MIN_FIT_LINES, ORDERS, _char_ngrams


def _corpus(lines_a, lines_b, n=MIN_FIT_LINES):
    reps_a = (lines_a * ((n // len(lines_a)) + 1))[:n]
    reps_b = (lines_b * ((n // len(lines_b)) + 1))[:n]
    return {"la": reps_a, "lb": reps_b}


def test_ngram_extraction_pads_with_spaces():
    assert list(_char_ngrams("ab", 1)) == [" ", "a", "b", " "]
    assert list(_char_ngrams("ab", 2)) == [" a", "ab", "b "]
    assert list(_char_ngrams("ab", 3)) == [" ab", "ab "]


def test_classifies_by_character_statistics():
    model = fit_langid(_corpus(["aaaa aaa", "aa aaaa"], ["bbbb bbb", "bb bbbb"]))
    assert model.classify("aaa aa") == "la"
    assert model.classify("bbb bb") == "lb"


def test_empty_or_punctuation_only_is_unknown():
    model = fit_langid(_corpus(["aaaa"], ["bbbb"]))
    assert model.classify("") == UNKNOWN
    assert model.classify("?!...") == UNKNOWN


def test_score_matches_hand_naive_bayes():
    corpora = _corpus(["ab"], ["ba"])
    model = fit_langid(corpora, smoothing=1.0)
    text = "ab"
    got = model.score(text)
    # Independent recount of the smoothed log-likelihoods.
    counts = {}
    vocab = {n: set() for n in ORDERS}
    for lang, lines in corpora.items():
        counts[lang] = {n: Counter() for n in ORDERS}
        for line in lines:
            for n in ORDERS:
                counts[lang][n].update(_char_ngrams(line, n))
        for n in ORDERS:
            vocab[n].update(counts[lang][n])
    for lang in corpora:
        expected = 0.0
        for n in ORDERS:
            denom = sum(counts[lang][n].values()) + len(vocab[n]) + 1
            for gram in _char_ngrams(f"{text}", n):
                expected += math.log((counts[lang][n][gram] + 1) / denom)
        assert got[lang] == pytest.approx(expected, rel=1e-12)


def test_fit_validates_inputs():
    with pytest.raises(ValueError, match="at least 2"):
        fit_langid({"only": ["x"] * MIN_FIT_LINES})
    with pytest.raises(ValueError, match="lines"):
        fit_langid({"la": ["x"] * (MIN_FIT_LINES - 1), "lb": ["y"] * MIN_FIT_LINES})


def test_identical_corpora_warn():
    lines = ["abab baba"] * MIN_FIT_LINES
    with pytest.warns(UserWarning, match="indistinguishable"):
        fit_langid({"la": list(lines), "lb": list(lines)})


def test_tie_breaks_to_alphabetically_first():
    with pytest.warns(UserWarning):
        model = fit_langid({"zz": ["abab"] * MIN_FIT_LINES,
                            "aa": ["abab"] * MIN_FIT_LINES})
    assert model.classify("ab") == "aa"


def test_language_accuracy_counts_expected_hits():
    model = fit_langid(_corpus(["aaaa aaa"], ["bbbb bbb"]))
    hyps = ["aaa", "aaaa", "bbb", ""]
    assert language_accuracy(hyps, "la", model) == pytest.approx(2 / 4)
    with pytest.raises(ValueError):
        language_accuracy([], "la", model)


def test_confusion_matrix_rows_sum_and_unknown_column():
    model = fit_langid(_corpus(["aaaa aaa"], ["bbbb bbb"]))
    rows, cols, matrix = confusion_matrix(
        {"la": ["aaa", "bbb", ""], "lb": ["bbb"]}, model)
    assert rows == ["la", "lb"]
    assert cols == ["la", "lb", UNKNOWN]
    assert matrix[0] == [1, 1, 1]
    assert matrix[1] == [0, 1, 0]
    norm = normalize_confusion(matrix)
    assert all(sum(row) == pytest.approx(1.0) for row in norm)
    assert norm[0] == pytest.approx([1 / 3, 1 / 3, 1 / 3])


def test_real_toy_languages_are_separable(tiny_corpus):
    corpora = {lang: tiny_corpus.lm_lines(lang) for lang in sorted(tiny_corpus.languages)}
    rng = np.random.default_rng(0)
    model = fit_langid({k: v for k, v in corpora.items()})
    for lang, lines in corpora.items():
        sample = [lines[int(i)] for i in rng.integers(len(lines), size=30)]
        acc = language_accuracy(sample, lang, model)
        assert acc >= 0.8, (lang, acc)
