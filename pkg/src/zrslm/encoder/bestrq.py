"""Random-projection quantizer targets and span masking for pre-training.

The quantizer is initialized once from a seed and never updated: a random
projection per codebook maps stacked input frames to a small code space,
and the target id is the nearest (L2-normalized) random codebook entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..corpus.features import AcousticFeatures
from ..seeding import derive_seed


def calibrate_start_prob(target_ratio: float, span: int) -> float:
    """Per-frame span-start probability giving the target mask coverage.

    Coverage of a union of independently started spans approaches
    1 - (1 - p)^span, so p = 1 - (1 - ratio)^(1/span).
    """
    if not 0.0 < target_ratio < 1.0:
        raise ValueError(f"target_ratio must be in (0,1), got {target_ratio}")
    return 1.0 - (1.0 - target_ratio) ** (1.0 / span)


@dataclass
class MaskSpec:
    span: int = 10
    target_ratio: float = 0.40
    start_prob: Optional[float] = None

    def __post_init__(self) -> None:
        if self.span < 1:
            raise ValueError(f"span must be >= 1, got {self.span}")
        if self.start_prob is None:
            self.start_prob = calibrate_start_prob(self.target_ratio, self.span)
        if not 0.0 < self.start_prob < 1.0:
            raise ValueError(f"start_prob must be in (0,1), got {self.start_prob}")


def sample_mask(t_out: int, spec: MaskSpec, rng_seed: int) -> np.ndarray:
    """Boolean mask [t_out]: union of spans started independently per frame."""
    if t_out < spec.span:
        raise ValueError(f"t_out {t_out} shorter than mask span {spec.span}")
    rng = np.random.default_rng(rng_seed)
    starts = rng.random(t_out) < spec.start_prob
    mask = np.zeros(t_out, dtype=bool)
    for i in np.flatnonzero(starts):
        mask[i:i + spec.span] = True
    return mask


@dataclass
class RqCodebooks:
    """Frozen per-codebook projections and entries."""

    num_codebooks: int
    vocab: int
    dim: int
    stacked_dim: int
    seed: int
    stack_factor: int = 4
    projection: np.ndarray = field(init=False, repr=False)
    entries: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        rng = np.random.default_rng(derive_seed(self.seed, "rq-codebooks"))
        scale = 1.0 / np.sqrt(self.stacked_dim)
        self.projection = (scale * rng.standard_normal(
            (self.num_codebooks, self.stacked_dim, self.dim))).astype(np.float32)
        self.entries = rng.standard_normal(
            (self.num_codebooks, self.vocab, self.dim)).astype(np.float32)
        for n in range(self.num_codebooks):
            if len(np.unique(self.entries[n], axis=0)) != self.vocab:
                raise ValueError(f"codebook {n} has duplicate entries")


def _l2_normalize(x: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    return np.where(norm > 0, x / np.where(norm > 0, norm, 1.0), 0.0)


def stack_for_targets(features: AcousticFeatures, factor: int) -> np.ndarray:
    """Right-pad and group `factor` consecutive frames per output frame."""
    t_in, d = features.frames.shape
    if t_in < factor:
        raise ValueError(f"utterance of {t_in} frames has no full output frame "
                         f"at stacking factor {factor}")
    t_out = -(-t_in // factor)
    padded = np.zeros((t_out * factor, d), dtype=np.float32)
    padded[:t_in] = features.frames
    return padded.reshape(t_out, factor * d)


def rq_targets(features: AcousticFeatures, books: RqCodebooks) -> np.ndarray:
    """Target ids [num_codebooks, t_out] for one utterance."""
    if features.d_feat * books.stack_factor != books.stacked_dim:
        raise ValueError(
            f"feature dim {features.d_feat} x factor {books.stack_factor} does not "
            f"match codebook input dim {books.stacked_dim}")
    stacked = stack_for_targets(features, books.stack_factor)
    ids = np.empty((books.num_codebooks, stacked.shape[0]), dtype=np.int64)
    for n in range(books.num_codebooks):
        projected = _l2_normalize(stacked @ books.projection[n])
        entries = _l2_normalize(books.entries[n])
        # Unit vectors: nearest by Euclidean distance == highest dot product.
        ids[n] = np.argmax(projected @ entries.T, axis=1)
    return ids
