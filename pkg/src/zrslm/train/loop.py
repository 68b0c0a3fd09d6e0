"""Staged multi-task training of the composite model.

Stage 1 (paper default) trains the bridge alone on ASR; stage 2 adds LoRA and
trains on the configured task mix.  Loss is next-token cross-entropy over the
target text only; audio and prompt live on the encoder side and carry no
labels.  Runs are deterministic given the seed.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import torch

from ..corpus.build import CorpusManifest
from ..corpus.features import AcousticFeatures
from ..lm.model import BOS, EOS, pad_id_batch, seq2seq_loss
from ..seeding import derive_seed
from ..slm.model import (TRAINABLE_COMPONENTS, SlmModel, assemble_input,
                         encode_audio, save_slm, set_trainable,
                         trainable_parameters)
from .batches import TrainItem, build_batches
from .prompts import TASKS, PromptBank, sample_prompt


@dataclass(frozen=True)
class StageConfig:
    name: str
    trainable_set: tuple[str, ...]
    data_tasks: tuple[str, ...]
    steps: int
    peak_lr: float
    warmup_steps: int = 10
    weight_decay: float = 0.01
    lr_schedule: str = "constant"

    def __post_init__(self) -> None:
        unknown = set(self.trainable_set) - set(TRAINABLE_COMPONENTS)
        if unknown or not self.trainable_set:
            raise ValueError(f"trainable_set must be a non-empty subset of "
                             f"{TRAINABLE_COMPONENTS}, got {self.trainable_set}")
        if not self.data_tasks or set(self.data_tasks) - set(TASKS):
            raise ValueError(f"data_tasks must be a non-empty subset of {TASKS}")
        if self.steps < 0 or self.peak_lr <= 0 or self.warmup_steps < 1:
            raise ValueError("steps must be >= 0, peak_lr > 0, warmup_steps >= 1")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")

    def to_dict(self) -> dict:
        return {"name": self.name, "trainable_set": list(self.trainable_set),
                "data_tasks": list(self.data_tasks), "steps": self.steps,
                "peak_lr": self.peak_lr, "warmup_steps": self.warmup_steps,
                "weight_decay": self.weight_decay, "lr_schedule": self.lr_schedule}


def paper_default_stages(tasks: Sequence[str] = ("st", "asr"), use_lora: bool = True,
                         include_stage1: bool = True, stage1_steps: int = 300,
                         stage2_steps: int = 600) -> tuple[StageConfig, ...]:
    """Bridge-only ASR warm-up, then joint training on the task mix."""
    stages: list[StageConfig] = []
    if include_stage1:
        stages.append(StageConfig(name="stage1", steps=stage1_steps, peak_lr=1e-4,
                                  trainable_set=("layer_weights", "adapter"),
                                  data_tasks=("asr",)))
    joint = ("layer_weights", "adapter") + (("lora",) if use_lora else ())
    stages.append(StageConfig(name="stage2", steps=stage2_steps, peak_lr=5e-5,
                              trainable_set=joint, data_tasks=tuple(tasks)))
    return tuple(stages)


@dataclass(frozen=True)
class TrainConfig:
    tasks: tuple[str, ...] = ("st", "asr")
    stages: tuple[StageConfig, ...] = field(
        default_factory=lambda: paper_default_stages())
    batch_size: int = 8
    seed: int = 0
    log_every: int = 25

    def __post_init__(self) -> None:
        if not self.tasks or set(self.tasks) - set(TASKS):
            raise ValueError(f"tasks must be a non-empty subset of {TASKS}")
        names = [s.name for s in self.stages]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate stage names: {names}")
        for stage in self.stages:
            if set(stage.data_tasks) - set(self.tasks):
                raise ValueError(f"stage {stage.name!r} uses tasks outside the "
                                 f"configured mix {self.tasks}")
        if self.batch_size < 1 or self.log_every < 1:
            raise ValueError("batch_size and log_every must be >= 1")

    def to_dict(self) -> dict:
        return {"tasks": list(self.tasks), "stages": [s.to_dict() for s in self.stages],
                "batch_size": self.batch_size, "seed": self.seed,
                "log_every": self.log_every}


@dataclass(frozen=True)
class TrainExample:
    utt_id: str
    features: AcousticFeatures
    prompt: str
    target: str


def _stage_lr(step: int, stage: StageConfig) -> float:
    if step <= stage.warmup_steps or stage.lr_schedule == "constant":
        return stage.peak_lr * min(1.0, step / stage.warmup_steps)
    frac = (step - stage.warmup_steps) / max(1, stage.steps - stage.warmup_steps)
    return stage.peak_lr * (0.1 + 0.9 * 0.5 * (1.0 + math.cos(math.pi * frac)))


def training_step(model: SlmModel, examples: Sequence[TrainExample]) -> torch.Tensor:
    """Mean cross-entropy over the batch's target tokens."""
    if not examples:
        raise ValueError("empty batch")
    lm, tok = model.lm, model.tokenizer
    rows = [assemble_input(encode_audio(model, ex.features), ex.prompt, lm, tok)
            for ex in examples]
    width = max(r.shape[0] for r in rows)
    enc = torch.zeros(len(rows), width, lm.config.d_llm)
    pad_mask = torch.ones(len(rows), width, dtype=torch.bool)
    for i, row in enumerate(rows):
        enc[i, :row.shape[0]] = row
        pad_mask[i, :row.shape[0]] = False
    target_ids = [tok.encode(ex.target) for ex in examples]
    dec_in = pad_id_batch([[BOS] + ids for ids in target_ids])
    dec_tgt = pad_id_batch([ids + [EOS] for ids in target_ids])
    logits = lm.decode(dec_in, lm.encode(enc, pad_mask), pad_mask)
    loss = seq2seq_loss(logits, dec_tgt)
    if not torch.isfinite(loss):
        raise RuntimeError(f"non-finite loss {loss.item()} on batch "
                           f"{[ex.utt_id for ex in examples]}")
    return loss


def _append_metrics(path: Optional[str], entry: dict) -> None:
    if path is None:
        return
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")


def run_stage(model: SlmModel, stage: StageConfig, manifest: CorpusManifest,
              bank: PromptBank, batch_size: int, seed: int, log_every: int = 25,
              metrics_path: Optional[str] = None,
              ckpt_path: Optional[str] = None) -> list[dict]:
    """Execute one stage's optimizer updates in place; returns the metrics log."""
    batches = build_batches(manifest, stage.data_tasks, batch_size,
                            derive_seed(seed, "batches", stage.name))
    if stage.steps == 0:
        if ckpt_path is not None:
            save_slm(ckpt_path, model)
        return []
    set_trainable(model, stage.trainable_set)
    params = trainable_parameters(model)
    optimizer = torch.optim.AdamW(params, lr=stage.peak_lr,
                                  weight_decay=stage.weight_decay)
    prompt_rng = np.random.default_rng(derive_seed(seed, "prompts", stage.name))
    feature_cache: dict[str, AcousticFeatures] = {}
    log: list[dict] = []
    t_last = time.perf_counter()
    for step in range(1, stage.steps + 1):
        items = next(batches)
        examples = [_to_example(item, model, manifest, bank, prompt_rng,
                                feature_cache) for item in items]
        lr = _stage_lr(step, stage)
        for group in optimizer.param_groups:
            group["lr"] = lr
        optimizer.zero_grad(set_to_none=True)
        loss = training_step(model, examples)
        loss.backward()
        optimizer.step()
        if step == 1 or step == stage.steps or step % log_every == 0:
            now = time.perf_counter()
            entry = {"step": step, "stage": stage.name, "loss": float(loss.item()),
                     "lr": lr, "wall_ms": (now - t_last) * 1000.0}
            t_last = now
            log.append(entry)
            _append_metrics(metrics_path, entry)
    if ckpt_path is not None:
        save_slm(ckpt_path, model)
    return log


def _to_example(item: TrainItem, model: SlmModel, manifest: CorpusManifest,
                bank: PromptBank, rng: np.random.Generator,
                cache: dict[str, AcousticFeatures]) -> TrainExample:
    rec = item.record
    if rec.id not in cache:
        cache[rec.id] = manifest.features_of(rec)
    display = manifest.languages[rec.lang].display_name
    prompt = sample_prompt(bank, rec.task, display, rng)
    return TrainExample(utt_id=rec.id, features=cache[rec.id], prompt=prompt,
                        target=item.target)


def run_training(model: SlmModel, config: TrainConfig, manifest: CorpusManifest,
                 bank: PromptBank, out_dir: Optional[str] = None) -> list[dict]:
    """Run every configured stage in order; returns the combined metrics log."""
    logs: list[dict] = []
    metrics_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        metrics_path = os.path.join(out_dir, "metrics.jsonl")
    for stage in config.stages:
        ckpt = None if out_dir is None else os.path.join(out_dir,
                                                         f"slm-{stage.name}.zrck")
        logs.extend(run_stage(model, stage, manifest, bank, config.batch_size,
                              config.seed, config.log_every, metrics_path, ckpt))
    return logs
