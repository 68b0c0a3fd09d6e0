"""Character n-gram naive-Bayes language identification."""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .textnorm import normalize_text

UNKNOWN = "unknown"

ORDERS = (1, 2, 3)
MIN_FIT_LINES = 100


def _char_ngrams(text: str, n: int) -> Iterable[str]:
    padded = f" {text} "
    for i in range(len(padded) - n + 1):
        yield padded[i:i + n]


@dataclass
class LangIdModel:
    """Per-language log-likelihood tables over character 1..3-grams.

    Uniform priors; add-one style smoothing with a shared per-order vocabulary
    so scores are comparable across languages.
    """

    log_tables: dict[str, dict[int, dict[str, float]]]
    fallback: dict[str, dict[int, float]]
    languages: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        self.languages = tuple(sorted(self.log_tables))

    def score(self, text: str) -> dict[str, float]:
        norm = normalize_text(text)
        scores = {lang: 0.0 for lang in self.languages}
        for n in ORDERS:
            for gram in _char_ngrams(norm, n):
                for lang in self.languages:
                    table = self.log_tables[lang][n]
                    scores[lang] += table.get(gram, self.fallback[lang][n])
        return scores

    def classify(self, text: str) -> str:
        if not normalize_text(text):
            return UNKNOWN
        scores = self.score(text)
        return min(scores, key=lambda lang: (-scores[lang], lang))


def fit_langid(corpora: Mapping[str, Sequence[str]], smoothing: float = 1.0) -> LangIdModel:
    """Fit the classifier from per-language line collections."""
    if len(corpora) < 2:
        raise ValueError(f"need at least 2 languages, got {len(corpora)}")
    for lang, lines in corpora.items():
        if len(lines) < MIN_FIT_LINES:
            raise ValueError(
                f"language {lang!r} has {len(lines)} lines; need ≥ {MIN_FIT_LINES}")
    counts: dict[str, dict[int, Counter]] = {}
    vocab: dict[int, set[str]] = {n: set() for n in ORDERS}
    for lang, lines in corpora.items():
        counts[lang] = {n: Counter() for n in ORDERS}
        for line in lines:
            norm = normalize_text(line)
            for n in ORDERS:
                counts[lang][n].update(_char_ngrams(norm, n))
        for n in ORDERS:
            vocab[n].update(counts[lang][n])
    log_tables: dict[str, dict[int, dict[str, float]]] = {}
    fallback: dict[str, dict[int, float]] = {}
    for lang in sorted(corpora):
        log_tables[lang] = {}
        fallback[lang] = {}
        for n in ORDERS:
            # One extra smoothing bucket absorbs n-grams unseen in any corpus.
            denom = sum(counts[lang][n].values()) + smoothing * (len(vocab[n]) + 1)
            log_tables[lang][n] = {
                gram: math.log((counts[lang][n][gram] + smoothing) / denom)
                for gram in vocab[n]
            }
            fallback[lang][n] = math.log(smoothing / denom)
    digests = {lang: hash(tuple(sorted(counts[lang][max(ORDERS)].items())))
               for lang in corpora}
    seen: dict[int, str] = {}
    for lang, digest in sorted(digests.items()):
        if digest in seen:
            warnings.warn(
                f"languages {seen[digest]!r} and {lang!r} have identical "
                f"n-gram statistics; they are indistinguishable")
        seen[digest] = lang
    return LangIdModel(log_tables=log_tables, fallback=fallback)


def language_accuracy(hyps: Sequence[str], expected: str, model: LangIdModel) -> float:
    """Fraction of hypotheses detected as `expected`; unknown is incorrect."""
    if not hyps:
        raise ValueError("need at least one hypothesis")
    hits = sum(1 for h in hyps if model.classify(h) == expected)
    return hits / len(hyps)


def confusion_matrix(hyps_by_lang: Mapping[str, Sequence[str]],
                     model: LangIdModel) -> tuple[list[str], list[str], list[list[int]]]:
    """Counts of detected language per expected language.

    Returns (row_labels, column_labels, counts); columns cover every model
    language plus the unknown verdict.
    """
    rows = sorted(hyps_by_lang)
    cols = list(model.languages) + [UNKNOWN]
    col_index = {c: i for i, c in enumerate(cols)}
    matrix = []
    for lang in rows:
        hyps = hyps_by_lang[lang]
        if not hyps:
            raise ValueError(f"no hypotheses for expected language {lang!r}")
        row = [0] * len(cols)
        for h in hyps:
            row[col_index[model.classify(h)]] += 1
        matrix.append(row)
    return rows, cols, matrix


def normalize_confusion(matrix: Sequence[Sequence[int]]) -> list[list[float]]:
    out = []
    for row in matrix:
        total = sum(row)
        out.append([c / total for c in row])
    return out
