"""Corpus word error rate via word-level minimum edit distance."""

from __future__ import annotations

from typing import Sequence

from .textnorm import normalize_text


def word_edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> int:
    """Levenshtein distance between word sequences (unit costs)."""
    if len(ref) < len(hyp):
        ref, hyp = hyp, ref
    prev = list(range(len(hyp) + 1))
    for i, rw in enumerate(ref, start=1):
        cur = [i] + [0] * len(hyp)
        for j, hw in enumerate(hyp, start=1):
            sub = prev[j - 1] + (rw != hw)
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, sub)
        prev = cur
    return prev[-1]


def wer(refs: Sequence[str], hyps: Sequence[str]) -> float:
    """(S + D + I) summed over the corpus, divided by total reference words.

    Both sides are normalized before scoring; references must be non-empty
    after normalization.
    """
    if len(refs) != len(hyps):
        raise ValueError(f"got {len(refs)} references but {len(hyps)} hypotheses")
    if not refs:
        raise ValueError("need at least one reference/hypothesis pair")
    edits = 0
    ref_words = 0
    for i, (ref, hyp) in enumerate(zip(refs, hyps)):
        r = normalize_text(ref).split()
        h = normalize_text(hyp).split()
        if not r:
            raise ValueError(f"empty reference at pair {i}: {ref!r}")
        edits += word_edit_distance(r, h)
        ref_words += len(r)
    return edits / ref_words
