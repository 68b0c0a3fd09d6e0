"""Abstract concept grammar shared by all toy languages.

A sentence is one to three clauses.  Each clause fills a subset of fixed
role slots with concepts; every language realizes the same abstract phrase
through its own lexicon and its family's word order.  Role slots are unique
within a clause, which keeps the family reorderings invertible without a
parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from ..seeding import derive_seed

if TYPE_CHECKING:
    from .features import AcousticFeatures
    from .language import ToyLanguage

# Role classes and their concept inventories.  Concept ids are opaque tags;
# only the class prefix matters to the grammar.
CONCEPTS: dict[str, tuple[str, ...]] = {
    "GREET": tuple(f"g{i:02d}" for i in range(1, 7)),
    "NOUN": tuple(f"n{i:02d}" for i in range(1, 21)),
    "VERB": tuple(f"v{i:02d}" for i in range(1, 13)),
    "ADJ": tuple(f"a{i:02d}" for i in range(1, 11)),
    "TIME": tuple(f"t{i:02d}" for i in range(1, 7)),
    "PLACE": tuple(f"p{i:02d}" for i in range(1, 9)),
    "CONN": tuple(f"c{i:02d}" for i in range(1, 4)),
}

ALL_CONCEPTS: tuple[str, ...] = tuple(cid for cls in sorted(CONCEPTS) for cid in CONCEPTS[cls])

_CLASS_OF = {cid: cls for cls, cids in CONCEPTS.items() for cid in cids}

# Clause slots in canonical order, with the role class each draws from.
CLAUSE_SLOTS: tuple[tuple[str, str], ...] = (
    ("GREET", "GREET"),
    ("SUBJ_MOD", "ADJ"),
    ("SUBJ", "NOUN"),
    ("VERB", "VERB"),
    ("OBJ_MOD", "ADJ"),
    ("OBJ", "NOUN"),
    ("TIME", "TIME"),
    ("PLACE", "PLACE"),
)

SLOT_CLASS = dict(CLAUSE_SLOTS)
CANONICAL_ORDER = tuple(slot for slot, _ in CLAUSE_SLOTS)

# Base inclusion probability per optional slot (SUBJ and VERB are mandatory).
_SLOT_PROB = {
    "GREET": 0.25,
    "SUBJ_MOD": 0.35,
    "OBJ": 0.70,
    "OBJ_MOD": 0.35,
    "TIME": 0.30,
    "PLACE": 0.25,
}

# Word order per language family: a permutation of the clause slots.
FAMILIES: dict[str, tuple[str, ...]] = {
    "f-svo": ("GREET", "SUBJ_MOD", "SUBJ", "VERB", "OBJ_MOD", "OBJ", "TIME", "PLACE"),
    "f-sov": ("GREET", "TIME", "SUBJ_MOD", "SUBJ", "OBJ_MOD", "OBJ", "PLACE", "VERB"),
    "f-vso": ("GREET", "VERB", "SUBJ", "SUBJ_MOD", "OBJ", "OBJ_MOD", "PLACE", "TIME"),
    "f-ovs": ("GREET", "OBJ_MOD", "OBJ", "VERB", "TIME", "SUBJ_MOD", "SUBJ", "PLACE"),
}

MIN_WORDS = 3
MAX_WORDS = 15

# An abstract phrase: clauses of (slot, concept_id) in canonical slot order,
# plus the connective concepts joining consecutive clauses.
Clause = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class AbstractPhrase:
    clauses: tuple[Clause, ...]
    connectives: tuple[str, ...]  # len == len(clauses) - 1

    def num_words(self) -> int:
        return sum(len(c) for c in self.clauses) + len(self.connectives)


@dataclass
class Utterance:
    """One corpus sample: text in a language plus its pivot translation."""

    id: str
    lang: str
    phonemes: tuple[str, ...]
    transcript: str
    translation: str
    features: Optional["AcousticFeatures"] = field(default=None, repr=False)


def _slot_probs(grammar_seed: int) -> dict[str, float]:
    # Per-language jitter of the optional-slot probabilities, so languages
    # have mildly different sentence-shape distributions.
    rng = np.random.default_rng(derive_seed(grammar_seed, "slot-probs"))
    probs = {}
    for slot in sorted(_SLOT_PROB):
        factor = 0.8 + 0.45 * rng.random()
        probs[slot] = min(0.95, _SLOT_PROB[slot] * factor)
    return probs


def sample_phrase(lang: "ToyLanguage", rng_seed: int) -> AbstractPhrase:
    """Draw an abstract phrase from the language's jittered grammar."""
    probs = _slot_probs(lang.grammar_seed)
    rng = np.random.default_rng(derive_seed(lang.grammar_seed, "phrase", str(rng_seed)))

    def pick(cls: str) -> str:
        cids = CONCEPTS[cls]
        return cids[int(rng.integers(len(cids)))]

    while True:
        n_clauses = int(rng.choice([1, 2, 3], p=[0.55, 0.35, 0.10]))
        clauses = []
        for ci in range(n_clauses):
            slots: list[tuple[str, str]] = []
            has_obj = rng.random() < probs["OBJ"]
            for slot, cls in CLAUSE_SLOTS:
                if slot in ("SUBJ", "VERB"):
                    include = True
                elif slot == "OBJ":
                    include = has_obj
                elif slot == "OBJ_MOD":
                    include = has_obj and rng.random() < probs["OBJ_MOD"]
                elif slot == "GREET":
                    include = ci == 0 and rng.random() < probs["GREET"]
                else:
                    include = rng.random() < probs[slot]
                if include:
                    slots.append((slot, pick(cls)))
            clauses.append(tuple(slots))
        connectives = tuple(pick("CONN") for _ in range(n_clauses - 1))
        phrase = AbstractPhrase(tuple(clauses), connectives)
        if MIN_WORDS <= phrase.num_words() <= MAX_WORDS:
            return phrase


def render_phrase(phrase: AbstractPhrase, lang: "ToyLanguage") -> list[str]:
    """Realize an abstract phrase as a word sequence in `lang`."""
    order = FAMILIES[lang.family]
    rank = {slot: i for i, slot in enumerate(order)}
    words: list[str] = []
    for ci, clause in enumerate(phrase.clauses):
        if ci > 0:
            words.append(lang.concept_words[phrase.connectives[ci - 1]])
        for slot, cid in sorted(clause, key=lambda sc: rank[sc[0]]):
            words.append(lang.concept_words[cid])
    return words


def parse_words(words: list[str], lang: "ToyLanguage") -> AbstractPhrase:
    """Invert `render_phrase`: recover the abstract phrase from a rendering."""
    inv = {word: cid for cid, word in lang.concept_words.items()}
    order = FAMILIES[lang.family]
    clause_words: list[list[str]] = [[]]
    connectives: list[str] = []
    for w in words:
        cid = inv[w]
        if _CLASS_OF[cid] == "CONN":
            connectives.append(cid)
            clause_words.append([])
        else:
            clause_words[-1].append(cid)
    clauses = []
    for cids in clause_words:
        # Match concepts greedily against the family slot order; slots are
        # unique per clause so the assignment is unambiguous.
        assigned: list[tuple[str, str]] = []
        pos = 0
        for cid in cids:
            while pos < len(order) and SLOT_CLASS[order[pos]] != _CLASS_OF[cid]:
                pos += 1
            if pos >= len(order):
                raise ValueError(f"cannot align concept {cid} with family order {lang.family}")
            assigned.append((order[pos], cid))
            pos += 1
        canon = {s: i for i, s in enumerate(CANONICAL_ORDER)}
        clauses.append(tuple(sorted(assigned, key=lambda sc: canon[sc[0]])))
    return AbstractPhrase(tuple(clauses), tuple(connectives))


def sample_utterance(lang: "ToyLanguage", pivot: "ToyLanguage", rng_seed: int,
                     utt_id: str | None = None) -> Utterance:
    """Sample one parallel utterance: same abstract phrase in both lexicons."""
    from .language import words_to_phonemes

    if set(lang.concept_words) != set(pivot.concept_words):
        raise ValueError(
            f"languages {lang.id} and {pivot.id} do not share a concept vocabulary")
    phrase = sample_phrase(lang, rng_seed)
    src_words = render_phrase(phrase, lang)
    dst_words = render_phrase(phrase, pivot)
    return Utterance(
        id=utt_id if utt_id is not None else f"{lang.id}-u{rng_seed}",
        lang=lang.id,
        phonemes=words_to_phonemes(src_words, lang),
        transcript=" ".join(src_words),
        translation=" ".join(dst_words),
    )
