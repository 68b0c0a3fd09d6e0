"""Seeded, task-alternating batch streams over the train split."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ..corpus.build import CorpusManifest, ManifestRecord
from ..seeding import derive_seed
from .prompts import TASKS


@dataclass(frozen=True)
class TrainItem:
    """One training example: the record plus its task-resolved target text."""

    record: ManifestRecord
    target: str

    @property
    def task(self) -> str:
        return self.record.task


def _target_of(rec: ManifestRecord) -> str:
    text = rec.translation if rec.task == "st" else rec.transcript
    if not text:
        raise ValueError(f"record {rec.id} has no target text for task {rec.task}")
    return text


def build_batches(manifest: CorpusManifest, tasks: Sequence[str], batch_size: int,
                  seed: int) -> Iterator[list[TrainItem]]:
    """Endless stream of batches cycling seeded epochs.

    Within an epoch the tasks alternate strictly (while both have items left),
    and each task's order is an independent seeded permutation.  Translation
    targets for st, transcripts for asr.
    """
    requested = tuple(dict.fromkeys(t.lower() for t in tasks))
    if not requested:
        raise ValueError("at least one task required")
    unknown = set(requested) - set(TASKS)
    if unknown:
        raise ValueError(f"unknown tasks {sorted(unknown)}; expected subset of {TASKS}")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = tuple(t for t in TASKS if t in requested)
    pools = {t: [TrainItem(rec, _target_of(rec))
                 for rec in manifest.records_for("train", task=t)] for t in order}
    for t, pool in pools.items():
        if not pool:
            raise ValueError(f"train split has no records for task {t!r}")

    def stream() -> Iterator[list[TrainItem]]:
        epoch = 0
        while True:
            shuffled: dict[str, list[TrainItem]] = {}
            for t in order:
                rng = np.random.default_rng(derive_seed(seed, "epoch", str(epoch), t))
                perm = rng.permutation(len(pools[t]))
                shuffled[t] = [pools[t][i] for i in perm]
            longest = max(len(v) for v in shuffled.values())
            interleaved = [shuffled[t][i] for i in range(longest) for t in order
                           if i < len(shuffled[t])]
            for start in range(0, len(interleaved), batch_size):
                yield interleaved[start:start + batch_size]
            epoch += 1

    return stream()
