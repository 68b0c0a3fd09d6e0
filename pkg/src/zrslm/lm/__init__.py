"""Encoder-decoder character LM: the frozen text backbone."""

from .tokenizer import (
    BOS,
    EOS,
    MASK,
    PAD,
    UNK,
    CharTokenizer,
    load_tokenizer,
    save_tokenizer,
    train_tokenizer,
)
from .model import (
    LmConfig,
    MultiHeadAttention,
    TextLm,
    generate_text,
    greedy_decode,
    pad_id_batch,
    seq2seq_loss,
    sinusoidal_positions,
)
from .io import load_lm, save_lm
from .training import (
    LmPretrainConfig,
    LmTuneConfig,
    conditional_perplexity,
    instruction_tune_mt,
    pretrain_lm,
    text_translate,
)

__all__ = [
    "BOS",
    "EOS",
    "MASK",
    "PAD",
    "UNK",
    "CharTokenizer",
    "load_tokenizer",
    "save_tokenizer",
    "train_tokenizer",
    "LmConfig",
    "MultiHeadAttention",
    "TextLm",
    "generate_text",
    "greedy_decode",
    "pad_id_batch",
    "seq2seq_loss",
    "sinusoidal_positions",
    "LmPretrainConfig",
    "LmTuneConfig",
    "conditional_perplexity",
    "instruction_tune_mt",
    "load_lm",
    "pretrain_lm",
    "save_lm",
    "text_translate",
]
