"""Checkpoint I/O for the text LM plus its tokenizer."""

from __future__ import annotations

import torch

from ..ckpt import load_checkpoint, save_checkpoint
from .model import LmConfig, TextLm
from .tokenizer import CharTokenizer


def save_lm(path: str, lm: TextLm, tok: CharTokenizer) -> None:
    if tok.vocab_size != lm.config.vocab_size:
        raise ValueError("tokenizer and LM vocabulary sizes differ")
    config = {"kind": "lm", "lm": lm.config.to_dict(),
              "tokenizer_chars": list(tok.chars)}
    arrays = {key: value.detach().cpu().numpy().copy()
              for key, value in lm.state_dict().items()}
    save_checkpoint(path, config, arrays)


def load_lm(path: str) -> tuple[TextLm, CharTokenizer]:
    config, arrays = load_checkpoint(path)
    if config.get("kind") != "lm":
        raise ValueError(f"checkpoint at {path} is not a text LM")
    lm = TextLm(LmConfig(**config["lm"]))
    lm.load_state_dict({key: torch.from_numpy(value)
                        for key, value in arrays.items()})
    tok = CharTokenizer(chars=tuple(config["tokenizer_chars"]))
    return lm, tok
