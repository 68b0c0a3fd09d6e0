"""Experiment configuration tree, YAML round trip, and shipped presets.

One master seed per experiment; every module receives a seed derived from it,
so a run is reproducible from (preset or config file) + one integer.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import yaml

from ..corpus.build import CorpusConfig, LanguageSpec, config_from_dict, config_to_dict
from ..encoder.bestrq import MaskSpec
from ..encoder.model import EncoderConfig
from ..encoder.pretrain import PretrainConfig
from ..lm.model import LmConfig
from ..lm.training import LmPretrainConfig, LmTuneConfig
from ..seeding import derive_seed
from ..slm.lora import LoraConfig
from ..train.loop import StageConfig, TrainConfig, paper_default_stages

OUT_ROOT_ENV = "ZRSLM_OUT"
DEFAULT_OUT_ROOT = "zrslm_out"


def resolve_out_root() -> str:
    return os.environ.get(OUT_ROOT_ENV) or DEFAULT_OUT_ROOT


@dataclass
class EncoderSection:
    model: EncoderConfig = field(default_factory=EncoderConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)


@dataclass
class LmSection:
    model: LmConfig = field(default_factory=LmConfig)
    pretrain: LmPretrainConfig = field(default_factory=LmPretrainConfig)
    tune: LmTuneConfig = field(default_factory=LmTuneConfig)
    instruction_tune: bool = True
    tune_use_lora: bool = False


@dataclass
class SlmSection:
    use_lora: bool = True
    lora: LoraConfig = field(default_factory=LoraConfig)


@dataclass
class EvalSection:
    split: str = "test"
    max_len: int = 160
    gen_batch_size: int = 16

    def __post_init__(self) -> None:
        if self.split not in ("train", "dev", "test"):
            raise ValueError(f"unknown split {self.split!r}")
        if self.max_len < 1 or self.gen_batch_size < 1:
            raise ValueError("max_len and gen_batch_size must be >= 1")


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    corpus: CorpusConfig
    encoder: EncoderSection = field(default_factory=EncoderSection)
    lm: LmSection = field(default_factory=LmSection)
    slm: SlmSection = field(default_factory=SlmSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalSection = field(default_factory=EvalSection)
    out: Optional[str] = None

    def validate(self) -> None:
        """Cross-section checks; sub-configs validate themselves on build."""
        if not self.name or any(c in self.name for c in "/\\ "):
            raise ValueError(f"experiment name must be a path-safe token, "
                             f"got {self.name!r}")
        self.corpus.validate()
        if self.corpus.d_feat != self.encoder.model.d_feat:
            raise ValueError(f"corpus d_feat {self.corpus.d_feat} != encoder "
                             f"d_feat {self.encoder.model.d_feat}")
        if self.corpus.frame_ms != self.encoder.model.frame_ms_in:
            raise ValueError(f"corpus frame_ms {self.corpus.frame_ms} != encoder "
                             f"frame_ms_in {self.encoder.model.frame_ms_in}")
        if not self.slm.use_lora:
            for stage in self.train.stages:
                if "lora" in stage.trainable_set:
                    raise ValueError(f"stage {stage.name!r} trains lora but "
                                     f"slm.use_lora is off")

    def run_dir(self) -> str:
        return self.out or os.path.join(resolve_out_root(), self.name)

    def to_dict(self) -> dict:
        payload = {
            "name": self.name,
            "seed": self.seed,
            "corpus": config_to_dict(self.corpus),
            "encoder": asdict(self.encoder),
            "lm": asdict(self.lm),
            "slm": asdict(self.slm),
            "train": self.train.to_dict(),
            "eval": asdict(self.eval),
            "out": self.out,
        }
        payload["slm"]["lora"]["targets"] = list(self.slm.lora.targets)
        return payload


def config_from_tree(payload: dict) -> ExperimentConfig:
    enc = payload.get("encoder", {})
    lm = payload.get("lm", {})
    slm = payload.get("slm", {})
    train = payload.get("train", {})
    pretrain = dict(enc.get("pretrain", {}))
    if isinstance(pretrain.get("mask"), dict):
        pretrain["mask"] = MaskSpec(**pretrain["mask"])
    stages = tuple(StageConfig(**{**s,
                                  "trainable_set": tuple(s["trainable_set"]),
                                  "data_tasks": tuple(s["data_tasks"])})
                   for s in train.get("stages", ()))
    lora = dict(slm.get("lora", {}))
    if "targets" in lora:
        lora["targets"] = tuple(lora["targets"])
    return ExperimentConfig(
        name=payload["name"],
        seed=payload["seed"],
        corpus=config_from_dict(payload["corpus"]),
        encoder=EncoderSection(model=EncoderConfig(**enc.get("model", {})),
                               pretrain=PretrainConfig(**pretrain)),
        lm=LmSection(model=LmConfig(**lm.get("model", {})),
                     pretrain=LmPretrainConfig(**lm.get("pretrain", {})),
                     tune=LmTuneConfig(**lm.get("tune", {})),
                     instruction_tune=lm.get("instruction_tune", True),
                     tune_use_lora=lm.get("tune_use_lora", False)),
        slm=SlmSection(use_lora=slm.get("use_lora", True),
                       lora=LoraConfig(**lora)),
        train=TrainConfig(tasks=tuple(train.get("tasks", ("st", "asr"))),
                          stages=stages if stages else paper_default_stages(),
                          batch_size=train.get("batch_size", 8),
                          seed=train.get("seed", 0),
                          log_every=train.get("log_every", 25)),
        eval=EvalSection(**payload.get("eval", {})),
        out=payload.get("out"),
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        payload = yaml.safe_load(fh)
    if not isinstance(payload, dict):
        raise ValueError(f"config file {path} does not hold a mapping")
    config = config_from_tree(payload)
    config.validate()
    return config


def save_config(path: str, config: ExperimentConfig) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)
    os.replace(tmp, path)


def apply_master_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    """Re-derive every per-module seed from a new master seed."""
    tree = config.to_dict()
    tree["seed"] = seed
    tree["corpus"]["seed"] = derive_seed(seed, "corpus")
    tree["train"]["seed"] = derive_seed(seed, "slm-train")
    return config_from_tree(tree)


# --- presets -----------------------------------------------------------------

_DESK_ENCODER = dict(num_layers=4, d_ae=128, num_heads=4, d_feat=32, frame_ms_in=10)
_DESK_ENC_PRETRAIN = dict(steps=800, batch_size=8, peak_lr=5e-4, warmup_steps=60,
                          num_codebooks=4, vocab=512, code_dim=16, log_every=50)
_DESK_LM = dict(d_llm=128, enc_layers=3, dec_layers=3, heads=4, ffn_dim=512,
                max_len=512)
_DESK_LM_PRETRAIN_STEPS = 1500
_FAMILIES = ("f-svo", "f-sov", "f-vso", "f-ovs")


def _reference_corpus(utterances: int = 300, lm_lines: int = 400) -> CorpusConfig:
    """Pivot + 3-language seen chain + high/low-overlap unseen pair.

    The seen chain overlaps tightly (0.75) so its inventory union stays small;
    the low-overlap unseen language then lands mostly outside every seen
    inventory, not just outside its named base.
    """
    return CorpusConfig(
        pivot=LanguageSpec(id="px", family="f-svo", display_name="English",
                           inventory_size=40),
        seen=[
            LanguageSpec(id="aa", family="f-sov", inventory_size=40,
                         overlap_base="px", jaccard_target=0.5),
            LanguageSpec(id="bb", family="f-vso", inventory_size=40,
                         overlap_base="aa", jaccard_target=0.75),
            LanguageSpec(id="cc", family="f-ovs", inventory_size=40,
                         overlap_base="bb", jaccard_target=0.75),
        ],
        unseen=[
            LanguageSpec(id="uh", family="f-sov", inventory_size=40,
                         overlap_base="aa", jaccard_target=0.8),
            LanguageSpec(id="ul", family="f-vso", inventory_size=40,
                         overlap_base="aa", jaccard_target=0.1),
        ],
        utterances_per_lang=utterances, lm_lines_per_lang=lm_lines)


def _desk_stages(tasks: Sequence[str], use_lora: bool, include_stage1: bool,
                 stage1_steps: int, stage2_steps: int) -> tuple[StageConfig, ...]:
    """Paper stage layout with learning rates rescaled for the desk-size model."""
    stages: list[StageConfig] = []
    if include_stage1:
        stages.append(StageConfig(name="stage1", steps=stage1_steps, peak_lr=1e-3,
                                  warmup_steps=25,
                                  trainable_set=("layer_weights", "adapter"),
                                  data_tasks=("asr",)))
    joint = ("layer_weights", "adapter") + (("lora",) if use_lora else ())
    stages.append(StageConfig(name="stage2", steps=stage2_steps, peak_lr=3e-4,
                              warmup_steps=25, trainable_set=joint,
                              data_tasks=tuple(tasks)))
    return tuple(stages)


def _base_config(name: str, corpus: CorpusConfig, tasks: Sequence[str],
                 use_lora: bool, include_stage1: bool,
                 stage1_steps: int = 500, stage2_steps: int = 1500) -> ExperimentConfig:
    stages = _desk_stages(tasks=tasks, use_lora=use_lora,
                          include_stage1=include_stage1,
                          stage1_steps=stage1_steps,
                          stage2_steps=stage2_steps)
    return ExperimentConfig(
        name=name, seed=0, corpus=corpus,
        encoder=EncoderSection(model=EncoderConfig(**_DESK_ENCODER),
                               pretrain=PretrainConfig(**_DESK_ENC_PRETRAIN)),
        lm=LmSection(model=LmConfig(**_DESK_LM),
                     pretrain=LmPretrainConfig(steps=_DESK_LM_PRETRAIN_STEPS),
                     tune=LmTuneConfig(steps=800)),
        slm=SlmSection(use_lora=use_lora),
        train=TrainConfig(tasks=tuple(tasks), stages=stages, batch_size=8,
                          log_every=25))


def _sweep_corpus(num_seen: int) -> CorpusConfig:
    seen = []
    prev = "px"
    for i in range(num_seen):
        lang_id = f"s{i:02d}"
        seen.append(LanguageSpec(id=lang_id, family=_FAMILIES[i % len(_FAMILIES)],
                                 inventory_size=40, overlap_base=prev,
                                 jaccard_target=0.5))
        prev = lang_id
    unseen = [LanguageSpec(id="uh", family="f-sov", inventory_size=40,
                           overlap_base="s00", jaccard_target=0.8),
              LanguageSpec(id="ul", family="f-vso", inventory_size=40,
                           overlap_base="s00", jaccard_target=0.1)]
    return CorpusConfig(
        pivot=LanguageSpec(id="px", family="f-svo", display_name="English",
                           inventory_size=40),
        seen=seen, unseen=unseen, utterances_per_lang=80, lm_lines_per_lang=150)


def _preset_reference() -> ExperimentConfig:
    return _base_config("reference", _reference_corpus(), ("st", "asr"),
                        use_lora=True, include_stage1=True)


def _preset_topline() -> ExperimentConfig:
    """Every language trained (the would-be unseen pair moves into seen)."""
    ref = _reference_corpus()
    corpus = CorpusConfig(pivot=ref.pivot, seen=list(ref.seen) + list(ref.unseen),
                          unseen=[], utterances_per_lang=ref.utterances_per_lang,
                          lm_lines_per_lang=ref.lm_lines_per_lang)
    return _base_config("topline", corpus, ("st", "asr"), use_lora=True,
                        include_stage1=True)


def _preset_cnn_only() -> ExperimentConfig:
    return _base_config("cnn-only", _reference_corpus(), ("st", "asr"),
                        use_lora=False, include_stage1=True)


def _preset_lora_no_stage1() -> ExperimentConfig:
    return _base_config("lora-no-stage1", _reference_corpus(), ("st", "asr"),
                        use_lora=True, include_stage1=False)


def _preset_st_only() -> ExperimentConfig:
    return _base_config("st-only", _reference_corpus(), ("st",),
                        use_lora=True, include_stage1=False)


def _preset_lm_no_unseen_text() -> ExperimentConfig:
    config = _base_config("lm-no-unseen-text", _reference_corpus(), ("st", "asr"),
                          use_lora=True, include_stage1=True)
    config.lm.pretrain = LmPretrainConfig(steps=_DESK_LM_PRETRAIN_STEPS,
                                          include_unseen_text=False)
    return config


def _preset_asr_sweep(label: str, num_seen: int) -> ExperimentConfig:
    config = _base_config(label, _sweep_corpus(num_seen), ("asr",),
                          use_lora=True, include_stage1=True,
                          stage1_steps=250, stage2_steps=600)
    config.lm.instruction_tune = False
    return config


PRESETS = {
    "reference": _preset_reference,
    "st-asr": _preset_reference,
    "topline": _preset_topline,
    "cnn-only": _preset_cnn_only,
    "lora-no-stage1": _preset_lora_no_stage1,
    "st-only": _preset_st_only,
    "lm-no-unseen-text": _preset_lm_no_unseen_text,
    "asr-e1": lambda: _preset_asr_sweep("asr-e1", 8),
    "asr-e2": lambda: _preset_asr_sweep("asr-e2", 16),
    "asr-e3": lambda: _preset_asr_sweep("asr-e3", 32),
}


def preset_config(name: str, seed: int = 0,
                  out: Optional[str] = None) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    config = PRESETS[name]()
    if name == "st-asr":
        config.name = "st-asr"
    config = apply_master_seed(config, seed)
    config.out = out
    config.validate()
    return config
