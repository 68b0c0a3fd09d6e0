"""Low-rank adaptation of frozen linear projections.

Each target projection W gains a delta (alpha/r) * B @ A with A seeded
Gaussian (scale 1/r) and B zero, so a freshly wrapped model computes exactly
what the base model computes.  Targets are located by attribute name on any
module that carries them, defaulting to the attention query and value
projections.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

from ..seeding import derive_seed


@dataclass
class LoraConfig:
    rank: int = 16
    alpha: float = 10.0
    targets: tuple[str, ...] = ("q_proj", "v_proj")

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if not self.targets:
            raise ValueError("need at least one target role")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["targets"] = list(self.targets)
        return d


class LoraLinear(nn.Module):
    def __init__(self, base: nn.Linear, rank: int, alpha: float, seed: int) -> None:
        super().__init__()
        self.base = base
        self.scaling = alpha / rank
        gen = torch.Generator().manual_seed(seed)
        self.lora_a = nn.Parameter(
            torch.randn(rank, base.in_features, generator=gen) / rank)
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        a = self.lora_a.to(x.dtype)
        b = self.lora_b.to(x.dtype)
        return self.base(x) + self.scaling * ((x @ a.T) @ b.T)

    def merged_weight(self) -> torch.Tensor:
        return self.base.weight + self.scaling * (self.lora_b @ self.lora_a)


@dataclass
class LoraHandle:
    config: LoraConfig
    wrapped: list[tuple[str, LoraLinear]]

    def parameters(self) -> list[nn.Parameter]:
        out = []
        for _, mod in self.wrapped:
            out.extend([mod.lora_a, mod.lora_b])
        return out

    def named_arrays(self) -> dict[str, torch.Tensor]:
        arrays = {}
        for name, mod in self.wrapped:
            arrays[f"lora.{name}.a"] = mod.lora_a
            arrays[f"lora.{name}.b"] = mod.lora_b
        return arrays


def lora_apply(module: nn.Module, config: LoraConfig, seed: int) -> LoraHandle:
    """Wrap every target projection under `module` with a LoRA delta."""
    targets: list[tuple[nn.Module, str, str]] = []
    for name, parent in module.named_modules():
        for role in config.targets:
            child = getattr(parent, role, None)
            if isinstance(child, nn.Linear):
                full = f"{name}.{role}" if name else role
                targets.append((parent, role, full))
    if not targets:
        raise ValueError(
            f"no target projections {config.targets} found in the architecture")
    wrapped = []
    for parent, role, full in sorted(targets, key=lambda t: t[2]):
        base = getattr(parent, role)
        base.weight.requires_grad_(False)
        if base.bias is not None:
            base.bias.requires_grad_(False)
        lora = LoraLinear(base, config.rank, config.alpha, derive_seed(seed, "lora", full))
        setattr(parent, role, lora)
        wrapped.append((full, lora))
    return LoraHandle(config=config, wrapped=wrapped)


def merge_lora(module: nn.Module) -> int:
    """Fold every LoRA delta into its base weight and restore plain linears."""
    merged = 0
    for name, parent in list(module.named_modules()):
        for attr, child in list(vars(parent).get("_modules", {}).items()):
            if isinstance(child, LoraLinear):
                with torch.no_grad():
                    child.base.weight.copy_(child.merged_weight())
                setattr(parent, attr, child.base)
                merged += 1
    return merged
