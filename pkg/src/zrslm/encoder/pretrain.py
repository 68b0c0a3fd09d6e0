"""Masked-prediction pre-training of the speech encoder (BEST-RQ style).

Masked output positions (spans at the downsampled rate) have their input
frames replaced by a learned mask embedding; per-codebook softmax heads then
predict the frozen quantizer's target ids at those positions.  Heads are
discarded after pre-training; only the encoder is checkpointed.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import torch
from torch import nn

from ..ckpt import load_checkpoint, save_checkpoint
from ..corpus.features import AcousticFeatures
from ..seeding import derive_seed
from .bestrq import MaskSpec, RqCodebooks, rq_targets, sample_mask
from .model import EncoderConfig, SpeechEncoder, output_length


@dataclass
class PretrainConfig:
    """Published-recipe defaults; toy presets scale these down."""

    steps: int = 500_000
    batch_size: int = 8
    peak_lr: float = 5e-4
    warmup_steps: int = 50_000
    weight_decay: float = 0.01
    num_codebooks: int = 16
    vocab: int = 8192
    code_dim: int = 16
    mask: MaskSpec = field(default_factory=MaskSpec)
    log_every: int = 50


def lr_at(step: int, peak: float, warmup: int) -> float:
    """Linear warmup to `peak`, then inverse-square-root decay."""
    step = max(step, 1)
    if step <= warmup:
        return peak * step / warmup
    return peak * (warmup / step) ** 0.5


class BestRqPretrainer(nn.Module):
    """Encoder plus per-codebook prediction heads (zero-initialized)."""

    def __init__(self, encoder: SpeechEncoder, num_codebooks: int, vocab: int) -> None:
        super().__init__()
        self.encoder = encoder
        self.heads = nn.ModuleList(
            nn.Linear(encoder.config.d_ae, vocab) for _ in range(num_codebooks))
        for head in self.heads:
            nn.init.zeros_(head.weight)
            nn.init.zeros_(head.bias)


@dataclass
class PretrainItem:
    frames: torch.Tensor
    mask: np.ndarray
    targets: torch.Tensor


def make_batch(pool: Sequence[AcousticFeatures], indices: Sequence[int],
               books: RqCodebooks, spec: MaskSpec, rng_seed: int,
               target_cache: Optional[dict[int, np.ndarray]] = None) -> list[PretrainItem]:
    """Assemble masked-prediction items; utterances shorter than the mask
    span are skipped with a warning."""
    items = []
    for k, idx in enumerate(indices):
        feats = pool[idx]
        t_out = output_length(feats.num_frames, books.stack_factor)
        if t_out < spec.span:
            warnings.warn(f"skipping utterance with t_out={t_out} < span={spec.span}")
            continue
        if target_cache is not None and idx in target_cache:
            targets = target_cache[idx]
        else:
            targets = rq_targets(feats, books)
            if target_cache is not None:
                target_cache[idx] = targets
        mask = sample_mask(t_out, spec, derive_seed(rng_seed, "mask", str(k)))
        items.append(PretrainItem(
            frames=torch.from_numpy(feats.frames),
            mask=mask,
            targets=torch.from_numpy(targets),
        ))
    return items


def pretrain_step(trainer: BestRqPretrainer, batch: Sequence[PretrainItem]) -> torch.Tensor:
    """Mean cross-entropy over masked output frames and all codebooks."""
    factor = trainer.encoder.config.downsample_factor
    total = None
    count = 0
    for item in batch:
        masked_pos = np.flatnonzero(item.mask)
        if masked_pos.size == 0:
            continue
        frames = item.frames.clone()
        for i in masked_pos:
            lo, hi = int(i) * factor, min((int(i) + 1) * factor, frames.shape[0])
            frames[lo:hi] = trainer.encoder.mask_embedding
        hidden = trainer.encoder(frames)[-1]
        pos = torch.from_numpy(masked_pos)
        masked_hidden = hidden[pos]
        for n, head in enumerate(trainer.heads):
            logits = head(masked_hidden)
            ce = nn.functional.cross_entropy(logits, item.targets[n][pos], reduction="sum")
            total = ce if total is None else total + ce
        count += masked_pos.size * len(trainer.heads)
    if count == 0:
        warnings.warn("batch has zero masked frames; skipping with zero loss")
        return torch.zeros(())
    loss = total / count
    if not torch.isfinite(loss):
        raise RuntimeError(f"non-finite pre-training loss: {loss.item()}")
    return loss


def run_pretraining(pool: Sequence[AcousticFeatures], enc_config: EncoderConfig,
                    config: PretrainConfig, seed: int) -> tuple[SpeechEncoder, RqCodebooks, list[dict]]:
    """Train an encoder from scratch on an unlabeled feature pool."""
    if not pool:
        raise ValueError("pre-training pool is empty")
    torch.manual_seed(derive_seed(seed, "encoder-init"))
    encoder = SpeechEncoder(enc_config)
    trainer = BestRqPretrainer(encoder, config.num_codebooks, config.vocab)
    books = RqCodebooks(
        num_codebooks=config.num_codebooks, vocab=config.vocab, dim=config.code_dim,
        stacked_dim=enc_config.stacked_dim, seed=derive_seed(seed, "rq"),
        stack_factor=enc_config.downsample_factor)
    optim = torch.optim.AdamW(trainer.parameters(), lr=config.peak_lr,
                              weight_decay=config.weight_decay)
    log: list[dict] = []
    cache: dict[int, np.ndarray] = {}
    for step in range(1, config.steps + 1):
        t0 = time.monotonic()
        rng = np.random.default_rng(derive_seed(seed, "enc-batch", str(step)))
        indices = rng.integers(len(pool), size=config.batch_size)
        batch = make_batch(pool, [int(i) for i in indices], books, config.mask,
                           derive_seed(seed, "enc-mask", str(step)), target_cache=cache)
        lr = lr_at(step, config.peak_lr, config.warmup_steps)
        for group in optim.param_groups:
            group["lr"] = lr
        loss = pretrain_step(trainer, batch)
        if loss.grad_fn is not None:
            optim.zero_grad()
            loss.backward()
            optim.step()
        if step == 1 or step % config.log_every == 0 or step == config.steps:
            log.append({"step": step, "stage": "encoder_pretrain",
                        "loss": float(loss.item()), "lr": lr,
                        "wall_ms": (time.monotonic() - t0) * 1000.0})
    return encoder, books, log


def save_encoder(path: str, encoder: SpeechEncoder, books: RqCodebooks) -> None:
    config = {
        "encoder": encoder.config.to_dict(),
        "codebooks": {"num_codebooks": books.num_codebooks, "vocab": books.vocab,
                      "dim": books.dim, "stacked_dim": books.stacked_dim,
                      "seed": books.seed, "stack_factor": books.stack_factor},
    }
    arrays = {f"encoder.{k}": v.detach().cpu().numpy().astype(np.float32)
              for k, v in encoder.state_dict().items()}
    arrays["rq.projection"] = books.projection.reshape(books.num_codebooks, -1)
    arrays["rq.entries"] = books.entries.reshape(books.num_codebooks, -1)
    save_checkpoint(path, config, arrays)


def load_encoder(path: str) -> tuple[SpeechEncoder, RqCodebooks]:
    config, arrays = load_checkpoint(path)
    enc_config = EncoderConfig(**config["encoder"])
    torch.manual_seed(0)
    encoder = SpeechEncoder(enc_config)
    state = {k[len("encoder."):]: torch.from_numpy(v.copy())
             for k, v in arrays.items() if k.startswith("encoder.")}
    encoder.load_state_dict(state)
    meta = config["codebooks"]
    books = RqCodebooks(**meta)
    books.projection = arrays["rq.projection"].reshape(
        meta["num_codebooks"], meta["stacked_dim"], meta["dim"]).copy()
    books.entries = arrays["rq.entries"].reshape(
        meta["num_codebooks"], meta["vocab"], meta["dim"]).copy()
    return encoder, books
