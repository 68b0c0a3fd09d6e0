"""Toy language construction with controllable phoneme-inventory overlap.

Languages draw their phoneme inventories from a shared 160-symbol universe
and spell every word as the concatenation of its phoneme symbols, so two
languages that share phonemes also share acoustics and letter sequences.
Inventory overlap between a language pair is set by a target Jaccard index.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from ..seeding import derive_seed
from .grammar import ALL_CONCEPTS

_CONSONANTS = "bdfghklmnprstvwz"
_VOWELS = "aeiou"

# 16 consonants x 5 vowels x {open, n-coda} = 160 syllable-like phonemes.
PHONEME_UNIVERSE: tuple[str, ...] = tuple(
    c + v + coda for c in _CONSONANTS for v in _VOWELS for coda in ("", "n")
)

_UNIVERSE_SET = frozenset(PHONEME_UNIVERSE)

# Acoustic marker for word boundaries; not part of any inventory.
WORD_BOUNDARY = "|"

JACCARD_TOLERANCE = 0.05


class InfeasibleJaccardError(ValueError):
    """No shared-symbol count achieves the target Jaccard within tolerance."""


def jaccard_phonemes(a: Iterable[str], b: Iterable[str]) -> float:
    sa, sb = set(a), set(b)
    union = sa | sb
    if not union:
        return 0.0
    return len(sa & sb) / len(union)


def words_to_phonemes(words: Iterable[str], lang: "ToyLanguage") -> tuple[str, ...]:
    """Phoneme sequence for a word sequence, boundary-marked between words."""
    out: list[str] = []
    for i, word in enumerate(words):
        if i > 0:
            out.append(WORD_BOUNDARY)
        try:
            out.extend(lang.lexicon[word])
        except KeyError:
            raise KeyError(f"word {word!r} not in lexicon of language {lang.id}") from None
    return tuple(out)


def transcript_to_phonemes(transcript: str, lang: "ToyLanguage") -> tuple[str, ...]:
    return words_to_phonemes(transcript.split(), lang)


def tokenize_word(word: str) -> tuple[str, ...]:
    """Split a spelled word back into its phoneme symbols.

    Every symbol is consonant+vowel with an optional "n" coda, and codas can
    only be followed by a consonant onset, so the decomposition is unique.
    """
    if not word:
        raise ValueError("not a phoneme spelling: ''")
    out: list[str] = []
    i = 0
    n = len(word)
    while i < n:
        if i + 1 >= n or word[i] not in _CONSONANTS or word[i + 1] not in _VOWELS:
            raise ValueError(f"not a phoneme spelling: {word!r}")
        j = i + 2
        if j < n and word[j] == "n" and (j + 1 == n or word[j + 1] in _CONSONANTS):
            j += 1
        out.append(word[i:j])
        i = j
    return tuple(out)


@dataclass
class ToyLanguage:
    """A synthetic language: phoneme inventory, lexicon, and word order."""

    id: str
    display_name: str
    family: str
    phonemes: tuple[str, ...]
    concept_words: dict[str, str]
    grammar_seed: int
    lexicon: dict[str, tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        bad = set(self.phonemes) - _UNIVERSE_SET
        if bad:
            raise ValueError(f"phonemes outside universe: {sorted(bad)}")
        if tuple(sorted(set(self.phonemes))) != tuple(self.phonemes):
            raise ValueError("phoneme inventory must be sorted and duplicate free")
        self.lexicon = {}
        for cid, word in self.concept_words.items():
            syms = tokenize_word(word)
            if any(s not in _UNIVERSE_SET for s in syms):
                raise ValueError(f"word {word!r} uses symbols outside the universe")
            self.lexicon[word] = syms
        if len(self.lexicon) != len(self.concept_words):
            raise ValueError("lexicon words must be unique")


def _pick_inventory(rng: np.random.Generator, size: int,
                    overlap_with: Optional[ToyLanguage],
                    target_jaccard: Optional[float]) -> tuple[str, ...]:
    universe = sorted(PHONEME_UNIVERSE)
    if overlap_with is None:
        chosen = rng.choice(len(universe), size=size, replace=False)
        return tuple(sorted(universe[i] for i in chosen))

    if target_jaccard is None:
        raise ValueError("target_jaccard is required when overlap_with is given")
    other = sorted(overlap_with.phonemes)
    m, n = len(other), size
    outside = sorted(_UNIVERSE_SET - set(other))
    lo = max(0, n - len(outside))
    hi = min(m, n)
    if lo > hi:
        raise InfeasibleJaccardError(
            f"no feasible overlap for sizes m={m}, n={n}, universe={len(universe)}")
    best_k, best_err = lo, float("inf")
    for k in range(lo, hi + 1):
        err = abs(k / (m + n - k) - target_jaccard)
        if err < best_err:
            best_k, best_err = k, err
    if best_err > JACCARD_TOLERANCE:
        raise InfeasibleJaccardError(
            f"target jaccard {target_jaccard:.3f} unreachable within "
            f"{JACCARD_TOLERANCE} for sizes m={m}, n={n} (best error {best_err:.3f})")
    shared_idx = rng.choice(m, size=best_k, replace=False)
    fresh_idx = rng.choice(len(outside), size=n - best_k, replace=False)
    inv = [other[i] for i in shared_idx] + [outside[i] for i in fresh_idx]
    return tuple(sorted(inv))


def _build_lexicon(rng: np.random.Generator, phonemes: tuple[str, ...]) -> dict[str, str]:
    words: dict[str, str] = {}
    used: set[str] = set()
    for cid in ALL_CONCEPTS:
        while True:
            length = int(rng.choice([1, 2, 3], p=[0.2, 0.5, 0.3]))
            idx = rng.integers(len(phonemes), size=length)
            word = "".join(phonemes[int(i)] for i in idx)
            if word not in used:
                used.add(word)
                words[cid] = word
                break
    return words


def make_language(lang_id: str, family: str, seed: int, inventory_size: int = 40,
                  overlap_with: Optional[ToyLanguage] = None,
                  target_jaccard: Optional[float] = None,
                  display_name: Optional[str] = None) -> ToyLanguage:
    """Create a language, optionally overlap-targeted against another one."""
    from .grammar import FAMILIES

    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    if not 4 <= inventory_size <= len(PHONEME_UNIVERSE):
        raise ValueError(f"inventory_size must be in [4, {len(PHONEME_UNIVERSE)}]")
    if target_jaccard is not None and not 0.0 <= target_jaccard <= 1.0:
        raise ValueError(f"target_jaccard must be in [0, 1], got {target_jaccard}")
    if overlap_with is not None and len(overlap_with.phonemes) < 2:
        raise ValueError("overlap base language needs an inventory of at least 2")
    inv_rng = np.random.default_rng(derive_seed(seed, "lang", lang_id, "inventory"))
    phonemes = _pick_inventory(inv_rng, inventory_size, overlap_with, target_jaccard)
    lex_rng = np.random.default_rng(derive_seed(seed, "lang", lang_id, "lexicon"))
    concept_words = _build_lexicon(lex_rng, phonemes)
    return ToyLanguage(
        id=lang_id,
        display_name=display_name if display_name is not None else lang_id.capitalize(),
        family=family,
        phonemes=phonemes,
        concept_words=concept_words,
        grammar_seed=derive_seed(seed, "lang", lang_id, "grammar"),
    )


def save_language(lang: ToyLanguage, path: str) -> None:
    payload = {
        "id": lang.id,
        "display_name": lang.display_name,
        "family": lang.family,
        "phonemes": list(lang.phonemes),
        "concept_words": lang.concept_words,
        "grammar_seed": lang.grammar_seed,
    }
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def load_language(path: str) -> ToyLanguage:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return ToyLanguage(
        id=payload["id"],
        display_name=payload["display_name"],
        family=payload["family"],
        phonemes=tuple(payload["phonemes"]),
        concept_words=dict(payload["concept_words"]),
        grammar_seed=int(payload["grammar_seed"]),
    )
