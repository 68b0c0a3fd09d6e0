"""Synthetic acoustic features and their on-disk format.

Each phoneme symbol has a fixed global prototype vector, independent of any
language or experiment seed, so the acoustic realization of a phoneme is
identical across languages.  An utterance is the per-phoneme prototypes,
each repeated for a seeded 4 to 8 frame duration, plus zero-mean noise.
The word-boundary marker is synthesized like any other symbol, giving the
model an acoustic cue for spaces.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from ..seeding import derive_seed
from .language import WORD_BOUNDARY

if TYPE_CHECKING:
    from .language import ToyLanguage

FORMAT_MAGIC = b"ZRSF"
FORMAT_VERSION = 1

DEFAULT_D_FEAT = 32
DEFAULT_FRAME_MS = 10

MIN_PHONE_FRAMES = 4
MAX_PHONE_FRAMES = 8


class FeatureFormatError(ValueError):
    """Raised when a feature file fails structural validation."""


@dataclass
class AcousticFeatures:
    """A (t, d_feat) float32 frame matrix at a fixed frame rate."""

    frames: np.ndarray
    frame_ms: int = DEFAULT_FRAME_MS

    def __post_init__(self) -> None:
        if self.frames.ndim != 2:
            raise ValueError(f"frames must be 2D, got shape {self.frames.shape}")
        if self.frames.dtype != np.float32:
            raise ValueError(f"frames must be float32, got {self.frames.dtype}")
        if self.frames.shape[0] == 0 or self.frames.shape[1] == 0:
            raise ValueError(f"frames must be non-empty, got shape {self.frames.shape}")
        if not np.isfinite(self.frames).all():
            raise ValueError("frames contain non-finite values")
        if self.frame_ms <= 0:
            raise ValueError(f"frame_ms must be positive, got {self.frame_ms}")

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def d_feat(self) -> int:
        return int(self.frames.shape[1])


def phoneme_prototype(symbol: str, d_feat: int = DEFAULT_D_FEAT) -> np.ndarray:
    """Unit-norm prototype vector for a phoneme symbol, the same everywhere."""
    rng = np.random.default_rng(derive_seed(0, "phoneme-prototype", symbol, str(d_feat)))
    vec = rng.standard_normal(d_feat)
    return (vec / np.linalg.norm(vec)).astype(np.float32)


def synthesize_features(phonemes: Sequence[str], lang: "ToyLanguage", rng_seed: int,
                        noise_level: float = 0.05,
                        d_feat: int = DEFAULT_D_FEAT,
                        frame_ms: int = DEFAULT_FRAME_MS) -> AcousticFeatures:
    """Render a phoneme sequence into a frame matrix.

    Each symbol emits 4 to 8 consecutive frames equal to its global prototype
    plus noise of scale `noise_level`; the total frame count is exactly the
    sum of the per-symbol durations.
    """
    if not phonemes:
        raise ValueError("phoneme sequence must be non-empty")
    if noise_level < 0:
        raise ValueError(f"noise_level must be non-negative, got {noise_level}")
    inventory = set(lang.phonemes)
    for symbol in phonemes:
        if symbol != WORD_BOUNDARY and symbol not in inventory:
            raise ValueError(f"phoneme {symbol!r} not in inventory of language {lang.id}")
    rng = np.random.default_rng(rng_seed)
    segments: list[np.ndarray] = []
    for symbol in phonemes:
        dur = int(rng.integers(MIN_PHONE_FRAMES, MAX_PHONE_FRAMES + 1))
        segments.append(np.tile(phoneme_prototype(symbol, d_feat), (dur, 1)))
    frames = np.concatenate(segments, axis=0)
    if noise_level > 0:
        frames = frames + noise_level * rng.standard_normal(frames.shape)
    return AcousticFeatures(frames=frames.astype(np.float32), frame_ms=frame_ms)


def write_features(path: str, feats: AcousticFeatures) -> None:
    header = struct.pack(
        "<4sIIII", FORMAT_MAGIC, FORMAT_VERSION,
        feats.num_frames, feats.d_feat, feats.frame_ms,
    )
    data = np.ascontiguousarray(feats.frames, dtype="<f4")
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())
    os.replace(tmp, path)


def read_features(path: str) -> AcousticFeatures:
    with open(path, "rb") as fh:
        header = fh.read(20)
        if len(header) != 20:
            raise FeatureFormatError(f"{path}: truncated header")
        magic, version, t, d, frame_ms = struct.unpack("<4sIIII", header)
        if magic != FORMAT_MAGIC:
            raise FeatureFormatError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise FeatureFormatError(f"{path}: unsupported version {version}")
        payload = fh.read()
    expected = t * d * 4
    if len(payload) != expected:
        raise FeatureFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}")
    frames = np.frombuffer(payload, dtype="<f4").reshape(t, d).astype(np.float32)
    return AcousticFeatures(frames=frames, frame_ms=int(frame_ms))
