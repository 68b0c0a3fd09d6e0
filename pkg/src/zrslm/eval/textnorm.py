"""Reference/hypothesis text normalization shared by all metrics."""

from __future__ import annotations

import unicodedata
from typing import Optional

# The acoustic word-boundary marker is stripped like punctuation so that a
# hypothesis echoing it is not penalized as a word error.
_EXTRA_STRIP = {"|"}


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P") or ch in _EXTRA_STRIP


def normalize_text(s: str, task: Optional[str] = None) -> str:
    """Lowercase, remove punctuation, collapse whitespace.  Idempotent.

    The same rule applies to every task; `task` is accepted so callers can
    keep one signature across metrics.
    """
    del task
    lowered = s.lower()
    cleaned = "".join(" " if _is_punct(ch) else ch for ch in lowered)
    return " ".join(cleaned.split())
