"""Shared fixtures: small languages, corpora, and models sized for fast tests."""

from __future__ import annotations

import numpy as np
import pytest
import torch

from zrslm.corpus import (
    CorpusConfig,
    LanguageSpec,
    build_corpus,
    make_language,
)
from zrslm.encoder import EncoderConfig, SpeechEncoder, freeze
from zrslm.lm import CharTokenizer, LmConfig, TextLm, train_tokenizer
from zrslm.slm import LoraConfig, build_slm


@pytest.fixture(scope="session")
def lang_a():
    return make_language("aa", "f-svo", seed=11, inventory_size=16)


@pytest.fixture(scope="session")
def lang_b(lang_a):
    return make_language("bb", "f-sov", seed=11, inventory_size=16,
                         overlap_with=lang_a, target_jaccard=0.5)


@pytest.fixture(scope="session")
def tiny_corpus_config():
    return CorpusConfig(
        pivot=LanguageSpec(id="px", family="f-svo", display_name="Pivotese",
                           inventory_size=24),
        seen=[LanguageSpec(id="sa", family="f-sov", inventory_size=24,
                           overlap_base="px", jaccard_target=0.5)],
        unseen=[LanguageSpec(id="uu", family="f-vso", inventory_size=24,
                             overlap_base="sa", jaccard_target=0.8)],
        utterances_per_lang=20,
        lm_lines_per_lang=120,
        seed=5,
    )


@pytest.fixture(scope="session")
def tiny_corpus(tiny_corpus_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    return build_corpus(tiny_corpus_config, str(out))


@pytest.fixture(scope="session")
def tiny_encoder():
    torch.manual_seed(101)
    enc = SpeechEncoder(EncoderConfig(num_layers=2, d_ae=32, num_heads=2,
                                      d_feat=32, frame_ms_in=10))
    return freeze(enc)


def _tiny_lm_and_tok(corpus) -> tuple[TextLm, CharTokenizer]:
    texts = [rec.transcript for rec in corpus.records]
    texts += [rec.translation for rec in corpus.records]
    texts += [lang.display_name for lang in corpus.languages.values()]
    texts += ["Transcribe the content of this audio into English in textual "
              "form: The preceding audio is in X. Perform speech recognition"
              " (in X): .,!?"]
    tok = train_tokenizer(texts)
    torch.manual_seed(202)
    lm = TextLm(LmConfig(d_llm=32, enc_layers=1, dec_layers=1, heads=2,
                         ffn_dim=64, vocab_size=tok.vocab_size, max_len=512))
    return lm, tok


@pytest.fixture(scope="session")
def tiny_lm_tok(tiny_corpus):
    return _tiny_lm_and_tok(tiny_corpus)


@pytest.fixture()
def tiny_slm(tiny_corpus, tiny_encoder, tiny_lm_tok):
    """Fresh composite per test; the LM output head is nudged off zero so
    gradients reach the bridge."""
    lm, tok = _tiny_lm_and_tok(tiny_corpus)
    with torch.no_grad():
        gen = torch.Generator().manual_seed(7)
        lm.out_head.weight.normal_(0.0, 0.05, generator=gen)
    return build_slm(tiny_encoder, lm, tok, seed=3, lora_config=LoraConfig(rank=2))


def param_fingerprint(tensors) -> list[bytes]:
    """Exact byte image of each tensor, for has-it-changed comparisons."""
    out = []
    for t in tensors:
        arr = t.detach().cpu().numpy()
        out.append(arr.tobytes())
    return out


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
