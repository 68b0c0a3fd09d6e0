"""Conformer-style speech encoder exposing every layer's output.

The encoder downsamples by stacking consecutive input frames (right-padding
to a multiple of the factor, so t_out = ceil(t_in / factor)) and runs a
stack of attention + convolution + feed-forward blocks.  Desk-scale defaults
are small; the config can also represent the full published scale (24
layers, 8 heads, hidden size 1024) for parameter accounting.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import torch
from torch import nn

from ..corpus.features import AcousticFeatures


@dataclass
class EncoderConfig:
    num_layers: int = 4
    d_ae: int = 128
    num_heads: int = 4
    downsample_factor: int = 4
    d_feat: int = 32
    frame_ms_in: int = 10
    ffn_mult: int = 4
    conv_kernel: int = 7

    def __post_init__(self) -> None:
        if self.num_layers < 1 or self.d_ae < 1 or self.num_heads < 1:
            raise ValueError("layer, dimension, and head counts must be positive")
        if self.d_ae % self.num_heads != 0:
            raise ValueError(f"d_ae {self.d_ae} not divisible by heads {self.num_heads}")
        if self.downsample_factor < 1:
            raise ValueError("downsample_factor must be >= 1")
        if self.conv_kernel % 2 != 1:
            raise ValueError("conv_kernel must be odd")

    @property
    def frame_ms_out(self) -> int:
        return self.frame_ms_in * self.downsample_factor

    @property
    def stacked_dim(self) -> int:
        return self.d_feat * self.downsample_factor

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LayerStack:
    """All per-layer outputs for one utterance: L matrices [t_out, d_ae]."""

    layers: list[torch.Tensor]
    t_out: int
    frame_ms: int

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("layer stack must be non-empty")
        shape = self.layers[0].shape
        if any(l.shape != shape for l in self.layers):
            raise ValueError("all layers must share one shape")
        if shape[0] != self.t_out:
            raise ValueError(f"t_out {self.t_out} does not match layer shape {shape}")

    @property
    def num_layers(self) -> int:
        return len(self.layers)


def output_length(t_in: int, factor: int) -> int:
    return -(-t_in // factor)


class ConformerBlock(nn.Module):
    def __init__(self, d: int, heads: int, ffn_mult: int, conv_kernel: int) -> None:
        super().__init__()
        self.attn_norm = nn.LayerNorm(d)
        self.attn = nn.MultiheadAttention(d, heads, batch_first=True)
        self.conv_norm = nn.LayerNorm(d)
        self.conv_in = nn.Conv1d(d, 2 * d, kernel_size=1)
        self.conv_depth = nn.Conv1d(d, d, kernel_size=conv_kernel,
                                    padding=conv_kernel // 2, groups=d)
        self.conv_out = nn.Conv1d(d, d, kernel_size=1)
        self.ffn_norm = nn.LayerNorm(d)
        self.ffn = nn.Sequential(
            nn.Linear(d, ffn_mult * d), nn.GELU(), nn.Linear(ffn_mult * d, d))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.attn_norm(x)
        attn_out, _ = self.attn(h, h, h, need_weights=False)
        x = x + attn_out
        h = self.conv_norm(x).transpose(-1, -2)
        h = nn.functional.glu(self.conv_in(h), dim=-2)
        h = torch.nn.functional.silu(self.conv_depth(h))
        x = x + self.conv_out(h).transpose(-1, -2)
        x = x + self.ffn(self.ffn_norm(x))
        return x


class SpeechEncoder(nn.Module):
    """Frame stacker + conformer blocks; forward returns all layer outputs."""

    def __init__(self, config: EncoderConfig) -> None:
        super().__init__()
        self.config = config
        self.input_proj = nn.Linear(config.stacked_dim, config.d_ae)
        self.mask_embedding = nn.Parameter(torch.zeros(config.d_feat))
        self.blocks = nn.ModuleList(
            ConformerBlock(config.d_ae, config.num_heads, config.ffn_mult,
                           config.conv_kernel)
            for _ in range(config.num_layers))

    def stack_frames(self, frames: torch.Tensor) -> torch.Tensor:
        """Right-pad [t, d_feat] to a factor multiple, then stack groups."""
        t_in, d = frames.shape
        if d != self.config.d_feat:
            raise ValueError(
                f"feature dim mismatch: expected {self.config.d_feat}, got {d}")
        factor = self.config.downsample_factor
        t_out = output_length(t_in, factor)
        pad = t_out * factor - t_in
        if pad:
            frames = torch.cat([frames, frames.new_zeros(pad, d)], dim=0)
        return frames.reshape(t_out, factor * d)

    def forward(self, frames: torch.Tensor) -> list[torch.Tensor]:
        """Encode one utterance [t_in, d_feat] into L outputs [t_out, d_ae]."""
        x = self.input_proj(self.stack_frames(frames)).unsqueeze(0)
        outputs = []
        for block in self.blocks:
            x = block(x)
            outputs.append(x.squeeze(0))
        return outputs


def freeze(model: nn.Module) -> nn.Module:
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def is_frozen(model: nn.Module) -> bool:
    return all(not p.requires_grad for p in model.parameters()) and not model.training


def encode(features: AcousticFeatures, model: SpeechEncoder) -> LayerStack:
    """Run the frozen encoder on one utterance and collect all layer outputs."""
    if not is_frozen(model):
        raise ValueError("encode requires a frozen encoder (freeze(model) first)")
    cfg = model.config
    if features.d_feat != cfg.d_feat:
        raise ValueError(
            f"feature dim mismatch: expected {cfg.d_feat}, got {features.d_feat}")
    if features.frame_ms != cfg.frame_ms_in:
        raise ValueError(
            f"frame rate mismatch: expected {cfg.frame_ms_in} ms, got {features.frame_ms} ms")
    with torch.no_grad():
        outputs = model(torch.from_numpy(features.frames))
    t_out = output_length(features.num_frames, cfg.downsample_factor)
    assert cfg.frame_ms_out == cfg.frame_ms_in * cfg.downsample_factor
    return LayerStack(layers=outputs, t_out=t_out, frame_ms=cfg.frame_ms_out)
