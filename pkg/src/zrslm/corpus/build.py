"""Corpus assembly: languages, parallel utterances, features, manifests.

The builder materializes a full experiment corpus under one directory:

    languages/<id>.json    language definitions
    features/<id>.zrsf     one feature file per utterance
    lm_text/<id>.txt       monolingual text per language (pivot, seen, unseen)
    manifest.jsonl         one utterance record per line
    corpus.json            roles, stats, config echo

Unseen languages contribute test records and monolingual text only.  All
output is a pure function of the config, so rebuilding is byte-identical.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

from ..seeding import derive_seed
from .features import read_features, synthesize_features, write_features
from .grammar import Utterance, render_phrase, sample_phrase, sample_utterance
from .language import ToyLanguage, load_language, make_language, save_language

ROLES = ("pivot", "seen", "unseen")
SPLITS = ("train", "dev", "test")
TASKS = ("asr", "st")


@dataclass
class LanguageSpec:
    """Declarative description of one language in the corpus config."""

    id: str
    family: str
    display_name: Optional[str] = None
    inventory_size: int = 40
    overlap_base: Optional[str] = None
    jaccard_target: Optional[float] = None


@dataclass
class CorpusConfig:
    pivot: LanguageSpec
    seen: list[LanguageSpec]
    unseen: list[LanguageSpec]
    utterances_per_lang: int = 300
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    lm_lines_per_lang: int = 400
    d_feat: int = 32
    frame_ms: int = 10
    noise_level: float = 0.05
    seed: int = 0

    def split_counts(self) -> dict[str, int]:
        u = self.utterances_per_lang
        train = int(u * self.split_fractions[0])
        dev = int(u * self.split_fractions[1])
        return {"train": train, "dev": dev, "test": u - train - dev}

    def validate(self) -> None:
        specs = [self.pivot] + list(self.seen) + list(self.unseen)
        ids = [s.id for s in specs]
        seen_ids = {s.id for s in self.seen}
        unseen_ids = {s.id for s in self.unseen}
        if seen_ids & unseen_ids:
            raise ValueError(f"languages listed as both seen and unseen: {sorted(seen_ids & unseen_ids)}")
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate language ids in config: {sorted(ids)}")
        if not self.seen:
            raise ValueError("at least one seen language is required")
        known = set()
        for spec in specs:
            if spec.overlap_base is not None and spec.overlap_base not in known:
                raise ValueError(
                    f"language {spec.id} overlaps with {spec.overlap_base!r}, "
                    f"which is not defined earlier in the config")
            known.add(spec.id)
        if abs(sum(self.split_fractions) - 1.0) > 1e-9 or min(self.split_fractions) < 0:
            raise ValueError(f"split_fractions must be non-negative and sum to 1: {self.split_fractions}")
        if self.utterances_per_lang < 1 or self.lm_lines_per_lang < 1:
            raise ValueError("utterance and lm line counts must be positive")
        if self.split_counts()["train"] < 2 or self.split_counts()["test"] < 2:
            raise ValueError("train and test splits need at least 2 utterances per language")


@dataclass
class ManifestRecord:
    id: str
    lang: str
    split: str
    task: str
    transcript: str
    translation: str
    feature_path: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=False,
                          separators=(",", ":"))


@dataclass
class CorpusManifest:
    root: str
    roles: dict[str, str]
    records: list[ManifestRecord]
    stats: dict
    lm_text_paths: dict[str, str]
    languages: dict[str, ToyLanguage] = field(repr=False)

    @property
    def splits(self) -> dict[tuple[str, str], list[str]]:
        out: dict[tuple[str, str], list[str]] = {}
        for rec in self.records:
            out.setdefault((rec.split, rec.task), []).append(rec.id)
        return out

    def records_for(self, split: str, task: Optional[str] = None,
                    lang: Optional[str] = None) -> list[ManifestRecord]:
        return [r for r in self.records
                if r.split == split
                and (task is None or r.task == task)
                and (lang is None or r.lang == lang)]

    def features_of(self, rec: ManifestRecord):
        return read_features(os.path.join(self.root, rec.feature_path))

    def lm_lines(self, lang: str) -> list[str]:
        with open(os.path.join(self.root, self.lm_text_paths[lang]), encoding="utf-8") as fh:
            return [line.rstrip("\n") for line in fh]

    def unseen_ids(self) -> list[str]:
        return sorted(l for l, role in self.roles.items() if role == "unseen")

    def seen_ids(self) -> list[str]:
        return sorted(l for l, role in self.roles.items() if role == "seen")

    def pivot_id(self) -> str:
        return next(l for l, role in self.roles.items() if role == "pivot")

    def validate_hygiene(self) -> None:
        unseen = set(self.unseen_ids())
        for rec in self.records:
            if rec.split in ("train", "dev") and rec.lang in unseen:
                raise ValueError(
                    f"zero-resource hygiene violated: {rec.id} puts unseen "
                    f"language {rec.lang} in split {rec.split}")


def _build_languages(config: CorpusConfig) -> dict[str, ToyLanguage]:
    langs: dict[str, ToyLanguage] = {}
    for spec in [config.pivot] + list(config.seen) + list(config.unseen):
        base = langs[spec.overlap_base] if spec.overlap_base is not None else None
        langs[spec.id] = make_language(
            spec.id, spec.family, config.seed,
            inventory_size=spec.inventory_size,
            overlap_with=base,
            target_jaccard=spec.jaccard_target,
            display_name=spec.display_name,
        )
    return langs


def _atomic_write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def build_corpus(config: CorpusConfig, out_dir: str) -> CorpusManifest:
    """Materialize the corpus under `out_dir` and return its manifest."""
    config.validate()
    langs = _build_languages(config)
    roles = {config.pivot.id: "pivot"}
    roles.update({s.id: "seen" for s in config.seen})
    roles.update({s.id: "unseen" for s in config.unseen})

    for sub in ("languages", "features", "lm_text"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    for lang_id in sorted(langs):
        save_language(langs[lang_id], os.path.join(out_dir, "languages", f"{lang_id}.json"))

    pivot = langs[config.pivot.id]
    counts = config.split_counts()
    records: list[ManifestRecord] = []
    stats: dict[str, dict] = {}
    for spec in list(config.seen) + list(config.unseen):
        lang = langs[spec.id]
        role = roles[spec.id]
        lang_stats = {"records": 0, "frames": 0,
                      "by_split_task": {f"{s}/{t}": 0 for s in SPLITS for t in TASKS}}
        for split in SPLITS:
            if role == "unseen" and split != "test":
                continue
            for idx in range(counts[split]):
                utt_id = f"{spec.id}-{split}-{idx:05d}"
                utt = sample_utterance(
                    lang, pivot, derive_seed(config.seed, "utt", spec.id, split, str(idx)),
                    utt_id=utt_id)
                feats = synthesize_features(
                    utt.phonemes, lang, derive_seed(config.seed, "feat", utt_id),
                    noise_level=config.noise_level,
                    d_feat=config.d_feat, frame_ms=config.frame_ms)
                rel_path = os.path.join("features", f"{utt_id}.zrsf")
                write_features(os.path.join(out_dir, rel_path), feats)
                task = TASKS[idx % 2]
                records.append(ManifestRecord(
                    id=utt_id, lang=spec.id, split=split, task=task,
                    transcript=utt.transcript, translation=utt.translation,
                    feature_path=rel_path))
                lang_stats["records"] += 1
                lang_stats["frames"] += feats.num_frames
                lang_stats["by_split_task"][f"{split}/{task}"] += 1
        lang_stats["duration_ms"] = lang_stats["frames"] * config.frame_ms
        stats[spec.id] = lang_stats

    lm_text_paths: dict[str, str] = {}
    for lang_id in sorted(langs):
        lang = langs[lang_id]
        lines = []
        for i in range(config.lm_lines_per_lang):
            phrase = sample_phrase(lang, derive_seed(config.seed, "lmtext", lang_id, str(i)))
            lines.append(" ".join(render_phrase(phrase, lang)))
        rel = os.path.join("lm_text", f"{lang_id}.txt")
        _atomic_write_text(os.path.join(out_dir, rel), "\n".join(lines) + "\n")
        lm_text_paths[lang_id] = rel

    _atomic_write_text(os.path.join(out_dir, "manifest.jsonl"),
                       "".join(rec.to_json() + "\n" for rec in records))
    summary = {
        "format_version": 1,
        "roles": roles,
        "stats": stats,
        "lm_text": lm_text_paths,
        "languages": {l: os.path.join("languages", f"{l}.json") for l in sorted(langs)},
        "config": _config_to_dict(config),
    }
    _atomic_write_text(os.path.join(out_dir, "corpus.json"),
                       json.dumps(summary, indent=2, sort_keys=True, ensure_ascii=False) + "\n")

    manifest = CorpusManifest(root=out_dir, roles=roles, records=records,
                              stats=stats, lm_text_paths=lm_text_paths, languages=langs)
    manifest.validate_hygiene()
    return manifest


def config_to_dict(config: CorpusConfig) -> dict:
    out = asdict(config)
    out["split_fractions"] = list(config.split_fractions)
    return out


_config_to_dict = config_to_dict


def config_from_dict(payload: dict) -> CorpusConfig:
    def spec(d: dict) -> LanguageSpec:
        return LanguageSpec(**d)

    return CorpusConfig(
        pivot=spec(payload["pivot"]),
        seen=[spec(d) for d in payload["seen"]],
        unseen=[spec(d) for d in payload["unseen"]],
        utterances_per_lang=payload.get("utterances_per_lang", 300),
        split_fractions=tuple(payload.get("split_fractions", (0.8, 0.1, 0.1))),
        lm_lines_per_lang=payload.get("lm_lines_per_lang", 400),
        d_feat=payload.get("d_feat", 32),
        frame_ms=payload.get("frame_ms", 10),
        noise_level=payload.get("noise_level", 0.05),
        seed=payload.get("seed", 0),
    )


def load_manifest(out_dir: str) -> CorpusManifest:
    """Reload a built corpus directory into a manifest object."""
    with open(os.path.join(out_dir, "corpus.json"), encoding="utf-8") as fh:
        summary = json.load(fh)
    langs = {l: load_language(os.path.join(out_dir, rel))
             for l, rel in summary["languages"].items()}
    records = []
    with open(os.path.join(out_dir, "manifest.jsonl"), encoding="utf-8") as fh:
        for line in fh:
            records.append(ManifestRecord(**json.loads(line)))
    manifest = CorpusManifest(
        root=out_dir, roles=summary["roles"], records=records,
        stats=summary["stats"], lm_text_paths=summary["lm_text"], languages=langs)
    manifest.validate_hygiene()
    return manifest
