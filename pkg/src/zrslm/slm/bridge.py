"""Bridge from encoder layer stack to LM embedding space.

Two trainable pieces: per-layer scalar weights pooling all encoder layers,
AE(x) = (1/L) * sum_l w_l * h^l, and a 2-layer 1-D convolutional adapter
that maps hidden size d_AE to d_LLM while halving the frame rate (40 ms
frames in, 80 ms soft tokens out).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence, Union

import torch
from torch import nn

from ..encoder.model import LayerStack


class LayerWeights(nn.Module):
    """Learnable scalar per encoder layer, initialized to 1 (plain mean)."""

    def __init__(self, num_layers: int) -> None:
        super().__init__()
        if num_layers < 1:
            raise ValueError("num_layers must be positive")
        self.w = nn.Parameter(torch.ones(num_layers))

    @property
    def num_layers(self) -> int:
        return self.w.shape[0]


def layer_average(stack: Union[LayerStack, Sequence[torch.Tensor]],
                  weights: LayerWeights) -> torch.Tensor:
    """Weighted mean over layers: (1/L) * sum_l w_l * h^l."""
    layers = stack.layers if isinstance(stack, LayerStack) else list(stack)
    if len(layers) != weights.num_layers:
        raise ValueError(
            f"stack has {len(layers)} layers but weights cover {weights.num_layers}")
    stacked = torch.stack(tuple(layers), dim=0)
    w = weights.w.to(stacked.dtype)
    shape = (-1,) + (1,) * (stacked.dim() - 1)
    return (stacked * w.view(shape)).sum(dim=0) / weights.num_layers


@dataclass
class AdapterConfig:
    d_ae: int = 128
    d_llm: int = 128
    kernel: int = 3
    stride_layer1: int = 2
    stride_layer2: int = 1
    padding: int = 1
    bias: bool = True

    def __post_init__(self) -> None:
        if self.kernel % 2 != 1:
            raise ValueError(f"kernel must be odd, got {self.kernel}")
        if min(self.d_ae, self.d_llm) < 1:
            raise ValueError("dimensions must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class ConvAdapter(nn.Module):
    """Conv(d_AE -> d_LLM, stride 2) + GELU + Conv(d_LLM -> d_LLM, stride 1)."""

    def __init__(self, config: AdapterConfig) -> None:
        super().__init__()
        self.config = config
        self.conv1 = nn.Conv1d(config.d_ae, config.d_llm, config.kernel,
                               stride=config.stride_layer1, padding=config.padding,
                               bias=config.bias)
        self.act = nn.GELU()
        self.conv2 = nn.Conv1d(config.d_llm, config.d_llm, config.kernel,
                               stride=config.stride_layer2, padding=config.padding,
                               bias=config.bias)

    def forward(self, pooled: torch.Tensor) -> torch.Tensor:
        """[t, d_AE] -> [ceil(t/2), d_LLM] (batched input gets a batch dim)."""
        squeeze = pooled.dim() == 2
        if squeeze:
            pooled = pooled.unsqueeze(0)
        x = pooled.transpose(-1, -2)
        x = self.conv2(self.act(self.conv1(x)))
        x = x.transpose(-1, -2)
        return x.squeeze(0) if squeeze else x


def adapt(pooled: torch.Tensor, adapter: ConvAdapter) -> torch.Tensor:
    """Apply the adapter to a pooled [t, d_AE] matrix."""
    if pooled.dim() != 2:
        raise ValueError(f"expected [t, d_AE] input, got shape {tuple(pooled.shape)}")
    if pooled.shape[0] < 1:
        raise ValueError("need at least one input frame")
    out = adapter(pooled)
    if not torch.isfinite(out).all():
        raise RuntimeError("adapter produced non-finite values")
    return out


def adapter_output_length(t: int, config: AdapterConfig) -> int:
    l1 = (t + 2 * config.padding - config.kernel) // config.stride_layer1 + 1
    return (l1 + 2 * config.padding - config.kernel) // config.stride_layer2 + 1
