"""Text LM training: denoising pre-training and translation tuning.

Pre-training is span corruption over monolingual lines from every language
(including, by default, the zero-resource test languages): contiguous
character spans collapse to a single mask token or are deleted outright, and
the decoder reconstructs the full line.  Deleted spans matter downstream:
they teach reconstruction from inputs shorter than the output, which is the
regime audio soft tokens arrive in.  Most inputs carry a "{display name}: "
prefix, so the model learns which name produces which language's text; some
inputs are fully masked, making the decoder usable as a conditional language
model, and some are left uncorrupted, teaching plain copying.

Instruction tuning presents translation pairs in the same layout the speech
model uses: source text first, then a task prompt, with the target on the
decoder side.  A configurable fraction of each tuning batch replays the
denoising task so tuning does not erase what pre-training built.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
import torch

from ..encoder.pretrain import lr_at
from ..seeding import derive_seed
from .model import (
    LmConfig,
    TextLm,
    generate_text,
    pad_id_batch,
    seq2seq_loss,
)
from .tokenizer import BOS, EOS, MASK, PAD, CharTokenizer, train_tokenizer


@dataclass
class LmPretrainConfig:
    steps: int = 1500
    batch_size: int = 16
    peak_lr: float = 1e-3
    warmup_steps: int = 50
    weight_decay: float = 0.01
    corruption_rate: float = 0.3
    mean_span: int = 3
    full_mask_prob: float = 0.1
    identity_prob: float = 0.15
    drop_span_prob: float = 0.5
    name_prefix_prob: float = 0.7
    include_unseen_text: bool = True
    log_every: int = 100


@dataclass
class LmTuneConfig:
    steps: int = 800
    batch_size: int = 16
    peak_lr: float = 5e-4
    warmup_steps: int = 20
    weight_decay: float = 0.01
    replay_fraction: float = 0.5
    log_every: int = 100

    def __post_init__(self) -> None:
        if not 0.0 <= self.replay_fraction < 1.0:
            raise ValueError("replay_fraction must be in [0, 1)")


def _corrupt_ids(ids: list[int], rng: np.random.Generator,
                 cfg: LmPretrainConfig) -> list[int]:
    roll = rng.random()
    if roll < cfg.full_mask_prob:
        return [MASK]
    if roll < cfg.full_mask_prob + cfg.identity_prob:
        return list(ids)
    out: list[int] = []
    start_prob = cfg.corruption_rate / cfg.mean_span
    i = 0
    while i < len(ids):
        if rng.random() < start_prob:
            span = 1 + int(rng.integers(cfg.mean_span * 2 - 1))
            if rng.random() >= cfg.drop_span_prob:
                out.append(MASK)
            i += span
        else:
            out.append(ids[i])
            i += 1
    return out or [MASK]


def _run_updates(lm: TextLm, examples_fn, steps: int, batch_size: int,
                 peak_lr: float, warmup: int, weight_decay: float,
                 seed: int, stage: str, log_every: int,
                 params: Optional[list[torch.nn.Parameter]] = None) -> list[dict]:
    trainable = params if params is not None else list(lm.parameters())
    optim = torch.optim.AdamW(trainable, lr=peak_lr, weight_decay=weight_decay)
    log: list[dict] = []
    for step in range(1, steps + 1):
        t0 = time.monotonic()
        rng = np.random.default_rng(derive_seed(seed, stage, "batch", str(step)))
        enc_ids, dec_in, dec_tgt = examples_fn(rng, batch_size)
        pad_mask = enc_ids == PAD
        logits = lm(enc_ids, dec_in, enc_pad_mask=pad_mask)
        loss = seq2seq_loss(logits, dec_tgt)
        if not torch.isfinite(loss):
            raise RuntimeError(f"non-finite loss at {stage} step {step}")
        lr = lr_at(step, peak_lr, warmup)
        for group in optim.param_groups:
            group["lr"] = lr
        optim.zero_grad()
        loss.backward()
        optim.step()
        if step == 1 or step % log_every == 0 or step == steps:
            log.append({"step": step, "stage": stage, "loss": float(loss.item()),
                        "lr": lr, "wall_ms": (time.monotonic() - t0) * 1000.0})
    return log


def pretrain_lm(corpora: Mapping[str, tuple[str, Sequence[str]]],
                lm_config: LmConfig, config: LmPretrainConfig, seed: int,
                extra_texts: Sequence[str] = ()) -> tuple[TextLm, CharTokenizer, list[dict]]:
    """Pre-train from scratch on per-language (display_name, lines) corpora.

    `extra_texts` extends tokenizer coverage (prompt templates, names) without
    entering the training stream.
    """
    if not corpora or all(not lines for _, lines in corpora.values()):
        raise ValueError("pre-training corpora are empty")
    all_lines = [line for _, lines in corpora.values() for line in lines]
    names = [name for name, _ in corpora.values()]
    tok = train_tokenizer(all_lines + names + [": "] + list(extra_texts))
    lm_config = LmConfig(**{**lm_config.to_dict(), "vocab_size": tok.vocab_size})
    torch.manual_seed(derive_seed(seed, "lm-init"))
    lm = TextLm(lm_config)
    pool = [(name, tok.encode(line))
            for lang in sorted(corpora)
            for name, lines in [corpora[lang]]
            for line in lines]
    prefix_cache = {name: tok.encode(f"{name}: ") for name, _ in corpora.values()}

    def examples(rng: np.random.Generator, batch_size: int):
        enc_batch, dec_in_batch, dec_tgt_batch = [], [], []
        for idx in rng.integers(len(pool), size=batch_size):
            name, ids = pool[int(idx)]
            corrupted = _corrupt_ids(ids, rng, config)
            if rng.random() < config.name_prefix_prob:
                corrupted = prefix_cache[name] + corrupted
            enc_batch.append(corrupted + [EOS])
            dec_in_batch.append([BOS] + ids)
            dec_tgt_batch.append(ids + [EOS])
        return (pad_id_batch(enc_batch), pad_id_batch(dec_in_batch),
                pad_id_batch(dec_tgt_batch))

    log = _run_updates(lm, examples, config.steps, config.batch_size,
                       config.peak_lr, config.warmup_steps, config.weight_decay,
                       seed, "lm_pretrain", config.log_every)
    return lm, tok, log


def instruction_tune_mt(lm: TextLm, tok: CharTokenizer,
                        pairs: Sequence[tuple[str, str]], use_lora: bool,
                        config: LmTuneConfig, seed: int,
                        prompts: Sequence[str],
                        replay: Optional[Mapping[str, tuple[str, Sequence[str]]]] = None,
                        replay_config: Optional[LmPretrainConfig] = None,
                        ) -> tuple[TextLm, list[dict]]:
    """Tune on (source text, target text) pairs presented with task prompts.

    With `use_lora`, low-rank deltas on the attention query/value projections
    are trained and then merged back, leaving a plain model.  When `replay`
    corpora are given, `config.replay_fraction` of every batch re-runs the
    denoising objective on them to preserve the pre-trained behaviour.
    """
    if not pairs:
        raise ValueError("no tuning pairs given")
    if not prompts:
        raise ValueError("no prompt templates given")
    encoded = [(tok.encode(src), tok.encode(tgt)) for src, tgt in pairs]
    prompt_ids = [tok.encode(" " + p) for p in prompts]
    replay_pool: list[tuple[list[int], list[int]]] = []
    if replay is not None and config.replay_fraction > 0.0:
        rcfg = replay_config if replay_config is not None else LmPretrainConfig()
        replay_pool = [(tok.encode(f"{name}: "), tok.encode(line))
                       for lang in sorted(replay)
                       for name, lines in [replay[lang]]
                       for line in lines]
    else:
        rcfg = None

    def examples(rng: np.random.Generator, batch_size: int):
        enc_batch, dec_in_batch, dec_tgt_batch = [], [], []
        n_replay = int(round(batch_size * config.replay_fraction)) if replay_pool else 0
        for idx in rng.integers(len(encoded), size=batch_size - n_replay):
            src, tgt = encoded[int(idx)]
            prompt = prompt_ids[int(rng.integers(len(prompt_ids)))]
            enc_batch.append(src + prompt + [EOS])
            dec_in_batch.append([BOS] + tgt)
            dec_tgt_batch.append(tgt + [EOS])
        for idx in rng.integers(len(replay_pool), size=n_replay) if n_replay else ():
            prefix, ids = replay_pool[int(idx)]
            corrupted = _corrupt_ids(ids, rng, rcfg)
            if rng.random() < rcfg.name_prefix_prob:
                corrupted = prefix + corrupted
            enc_batch.append(corrupted + [EOS])
            dec_in_batch.append([BOS] + ids)
            dec_tgt_batch.append(ids + [EOS])
        return (pad_id_batch(enc_batch), pad_id_batch(dec_in_batch),
                pad_id_batch(dec_tgt_batch))

    if use_lora:
        from ..slm.lora import LoraConfig, lora_apply, merge_lora

        handle = lora_apply(lm, LoraConfig(), derive_seed(seed, "tune-lora"))
        log = _run_updates(lm, examples, config.steps, config.batch_size,
                           config.peak_lr, config.warmup_steps, config.weight_decay,
                           seed, "lm_tune", config.log_every,
                           params=handle.parameters())
        merge_lora(lm)
    else:
        log = _run_updates(lm, examples, config.steps, config.batch_size,
                           config.peak_lr, config.warmup_steps, config.weight_decay,
                           seed, "lm_tune", config.log_every)
    return lm, log


def text_translate(lm: TextLm, tok: CharTokenizer, text: str,
                   source_lang: Optional[str] = None) -> str:
    """Translate text by prompting exactly like the speech path, with the
    source text standing in for the audio."""
    del source_lang
    if not text.strip():
        warnings.warn("empty translation input; returning empty output")
        return ""
    from ..slm.prompts import ST_TEST_PROMPT

    return generate_text(lm, tok, f"{text} {ST_TEST_PROMPT}")


def conditional_perplexity(lm: TextLm, tok: CharTokenizer,
                           lines: Sequence[str], batch_size: int = 32) -> float:
    """Per-character perplexity of lines given a fully masked encoder input."""
    if not lines:
        raise ValueError("no lines given")
    total_nll = 0.0
    total_chars = 0
    with torch.no_grad():
        for lo in range(0, len(lines), batch_size):
            chunk = lines[lo:lo + batch_size]
            enc = pad_id_batch([[MASK, EOS]] * len(chunk))
            ids = [tok.encode(line) for line in chunk]
            dec_in = pad_id_batch([[BOS] + i for i in ids])
            dec_tgt = pad_id_batch([i + [PAD] for i in ids])
            logits = lm(enc, dec_in)
            logp = torch.log_softmax(logits, dim=-1)
            for b, seq in enumerate(ids):
                for t, token in enumerate(seq):
                    total_nll -= float(logp[b, t, token])
                total_chars += len(seq)
    return float(np.exp(total_nll / total_chars))
