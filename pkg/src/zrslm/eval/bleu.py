"""Corpus-level BLEU-4 without smoothing."""

from __future__ import annotations

import math
import warnings
from collections import Counter
from typing import Sequence

from .textnorm import normalize_text

MAX_ORDER = 4


def _ngrams(words: list[str], n: int) -> Counter:
    return Counter(tuple(words[i:i + n]) for i in range(len(words) - n + 1))


def bleu(refs: Sequence[str], hyps: Sequence[str]) -> float:
    """Geometric mean of modified 1..4-gram precisions times brevity penalty.

    Corpus-level and unsmoothed: a zero precision at any order with matchable
    n-grams yields 0.  Orders longer than every hypothesis are skipped, so an
    exact-match corpus scores 100 regardless of sentence lengths.
    """
    if len(refs) != len(hyps):
        raise ValueError(f"got {len(refs)} references but {len(hyps)} hypotheses")
    if not refs:
        raise ValueError("need at least one reference/hypothesis pair")
    matches = [0] * (MAX_ORDER + 1)
    totals = [0] * (MAX_ORDER + 1)
    ref_len = 0
    hyp_len = 0
    for ref, hyp in zip(refs, hyps):
        r = normalize_text(ref).split()
        h = normalize_text(hyp).split()
        ref_len += len(r)
        hyp_len += len(h)
        for n in range(1, MAX_ORDER + 1):
            hyp_counts = _ngrams(h, n)
            if not hyp_counts:
                continue
            ref_counts = _ngrams(r, n)
            totals[n] += sum(hyp_counts.values())
            matches[n] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    if hyp_len == 0:
        warnings.warn("BLEU over all-empty hypotheses is 0")
        return 0.0
    log_prec = 0.0
    orders = 0
    for n in range(1, MAX_ORDER + 1):
        if totals[n] == 0:
            continue
        if matches[n] == 0:
            return 0.0
        log_prec += math.log(matches[n] / totals[n])
        orders += 1
    if orders == 0:
        return 0.0
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_prec / orders)
