"""Synthetic toy-language corpora with controllable phoneme overlap."""

from .language import (
    PHONEME_UNIVERSE,
    WORD_BOUNDARY,
    InfeasibleJaccardError,
    ToyLanguage,
    jaccard_phonemes,
    load_language,
    make_language,
    save_language,
    tokenize_word,
    transcript_to_phonemes,
    words_to_phonemes,
)
from .grammar import (
    CONCEPTS,
    FAMILIES,
    AbstractPhrase,
    Utterance,
    parse_words,
    render_phrase,
    sample_phrase,
    sample_utterance,
)
from .features import (
    AcousticFeatures,
    FeatureFormatError,
    phoneme_prototype,
    read_features,
    synthesize_features,
    write_features,
)
from .build import (
    CorpusConfig,
    CorpusManifest,
    LanguageSpec,
    ManifestRecord,
    build_corpus,
    config_from_dict,
    config_to_dict,
    load_manifest,
)

__all__ = [
    "PHONEME_UNIVERSE",
    "WORD_BOUNDARY",
    "InfeasibleJaccardError",
    "ToyLanguage",
    "jaccard_phonemes",
    "load_language",
    "make_language",
    "save_language",
    "tokenize_word",
    "transcript_to_phonemes",
    "words_to_phonemes",
    "CONCEPTS",
    "FAMILIES",
    "AbstractPhrase",
    "Utterance",
    "parse_words",
    "render_phrase",
    "sample_phrase",
    "sample_utterance",
    "AcousticFeatures",
    "FeatureFormatError",
    "phoneme_prototype",
    "read_features",
    "synthesize_features",
    "write_features",
    "CorpusConfig",
    "CorpusManifest",
    "LanguageSpec",
    "ManifestRecord",
    "build_corpus",
    "config_from_dict",
    "config_to_dict",
    "load_manifest",
]
