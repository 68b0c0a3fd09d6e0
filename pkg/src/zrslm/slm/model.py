"""Composite speech-language model: frozen encoder soft-prompting a frozen LM.

Audio flows encoder -> weighted layer average -> conv adapter and enters the
LM encoder as soft tokens, concatenated in front of the embedded text prompt.
Only the bridge (layer weights + adapter) and optional LoRA deltas train.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import torch
from torch import nn

from ..ckpt import load_checkpoint, save_checkpoint
from ..corpus.features import AcousticFeatures
from ..encoder.model import EncoderConfig, SpeechEncoder, encode, freeze, is_frozen
from ..lm.model import LmConfig, TextLm, greedy_decode
from ..lm.tokenizer import UNK, CharTokenizer
from ..seeding import derive_seed
from .bridge import AdapterConfig, ConvAdapter, LayerWeights, adapt, layer_average
from .lora import LoraConfig, LoraHandle, lora_apply
from .prompts import ST_TEST_PROMPT, asr_test_prompt

TRAINABLE_COMPONENTS = ("layer_weights", "adapter", "lora")


@dataclass
class SlmModel:
    """Frozen encoder + bridge + frozen LM, with an explicit trainable set."""

    encoder: SpeechEncoder
    layer_weights: LayerWeights
    adapter: ConvAdapter
    lm: TextLm
    tokenizer: CharTokenizer
    lora: Optional[LoraHandle] = None
    trainable_set: tuple[str, ...] = field(default=("layer_weights", "adapter"))

    def __post_init__(self) -> None:
        if self.layer_weights.num_layers != self.encoder.config.num_layers:
            raise ValueError("layer weights do not match encoder depth")
        if self.adapter.config.d_ae != self.encoder.config.d_ae:
            raise ValueError("adapter input dim does not match encoder output dim")
        if self.adapter.config.d_llm != self.lm.config.d_llm:
            raise ValueError("adapter output dim does not match LM width")
        if self.tokenizer.vocab_size != self.lm.config.vocab_size:
            raise ValueError("tokenizer and LM vocabulary sizes differ")
        set_trainable(self, self.trainable_set)

    @property
    def soft_token_frame_ms(self) -> int:
        """Duration covered by one soft token (adapter halves the frame rate)."""
        return self.encoder.config.frame_ms_out * self.adapter.config.stride_layer1

    def trainable_parameters(self) -> list[nn.Parameter]:
        return trainable_parameters(self)


def _component_parameters(model: SlmModel, name: str) -> list[nn.Parameter]:
    if name == "layer_weights":
        return [model.layer_weights.w]
    if name == "adapter":
        return list(model.adapter.parameters())
    if name == "lora":
        return [] if model.lora is None else model.lora.parameters()
    raise ValueError(f"unknown trainable component {name!r}")


def set_trainable(model: SlmModel, names: Sequence[str]) -> None:
    """Mark exactly `names` trainable; everything else stays frozen."""
    requested = tuple(names)
    unknown = set(requested) - set(TRAINABLE_COMPONENTS)
    if unknown:
        raise ValueError(f"unknown trainable components: {sorted(unknown)}; "
                         f"allowed: {list(TRAINABLE_COMPONENTS)}")
    if len(set(requested)) != len(requested):
        raise ValueError("duplicate names in trainable set")
    if "lora" in requested and model.lora is None:
        raise ValueError("trainable set names lora but the model has no LoRA deltas")
    freeze(model.encoder)
    for p in model.lm.parameters():
        p.requires_grad_(False)
    for name in TRAINABLE_COMPONENTS:
        flag = name in requested
        for p in _component_parameters(model, name):
            p.requires_grad_(flag)
    model.trainable_set = tuple(n for n in TRAINABLE_COMPONENTS if n in requested)


def trainable_parameters(model: SlmModel) -> list[nn.Parameter]:
    out: list[nn.Parameter] = []
    for name in model.trainable_set:
        out.extend(_component_parameters(model, name))
    return out


def named_state(model: SlmModel) -> dict[str, torch.Tensor]:
    """Every array in the composite under a stable component-prefixed name.

    LoRA factors appear under lora.*; the LM entries always use the base
    (unwrapped) key layout so the mapping is independent of LoRA presence.
    """
    out: dict[str, torch.Tensor] = {}
    for key, value in model.encoder.state_dict().items():
        out[f"encoder.{key}"] = value
    out["layer_weights.w"] = model.layer_weights.w.detach()
    for key, value in model.adapter.state_dict().items():
        out[f"adapter.{key}"] = value
    for key, value in model.lm.state_dict().items():
        if ".lora_a" in key or ".lora_b" in key:
            continue
        out[f"lm.{key.replace('.base.', '.')}"] = value
    if model.lora is not None:
        for key, value in model.lora.named_arrays().items():
            out[key] = value
    return out


def build_slm(encoder: SpeechEncoder, lm: TextLm, tokenizer: CharTokenizer,
              seed: int, adapter_config: Optional[AdapterConfig] = None,
              lora_config: Optional[LoraConfig] = None,
              trainable_set: Optional[Sequence[str]] = None) -> SlmModel:
    """Assemble the composite, freezing the encoder and LM.

    The adapter config defaults to bridging the given encoder and LM widths.
    When `lora_config` is set the LM attention projections are wrapped (output
    unchanged at init) and lora joins the default trainable set.
    """
    freeze(encoder)
    for p in lm.parameters():
        p.requires_grad_(False)
    if adapter_config is None:
        adapter_config = AdapterConfig(d_ae=encoder.config.d_ae, d_llm=lm.config.d_llm)
    adapter = ConvAdapter(adapter_config)
    torch.manual_seed(derive_seed(seed, "slm-adapter"))
    for p in adapter.parameters():
        if p.dim() > 1:
            nn.init.xavier_uniform_(p)
        else:
            nn.init.zeros_(p)
    lora = None
    if lora_config is not None:
        lora = lora_apply(lm, lora_config, derive_seed(seed, "slm-lora"))
    if trainable_set is None:
        trainable_set = ("layer_weights", "adapter") + (("lora",) if lora else ())
    return SlmModel(encoder=encoder,
                    layer_weights=LayerWeights(encoder.config.num_layers),
                    adapter=adapter, lm=lm, tokenizer=tokenizer, lora=lora,
                    trainable_set=tuple(trainable_set))


def encode_audio(model: SlmModel, features: AcousticFeatures) -> torch.Tensor:
    """Soft tokens [ceil(t_out/2), d_llm] for one utterance's features."""
    stack = encode(features, model.encoder)
    pooled = layer_average(stack, model.layer_weights)
    return adapt(pooled, model.adapter)


def assemble_input(soft: torch.Tensor, prompt: str, lm: TextLm,
                   tokenizer: CharTokenizer) -> torch.Tensor:
    """Concatenate [audio soft tokens ; embedded prompt] for the LM encoder.

    The prompt is tokenized with a trailing eos marking the end of the
    encoder input, then embedded through the frozen token-embedding table.
    """
    if not prompt:
        raise ValueError("prompt must be non-empty")
    if soft.dim() != 2 or soft.shape[1] != lm.config.d_llm:
        raise ValueError(f"soft tokens must be [t, {lm.config.d_llm}], "
                         f"got {tuple(soft.shape)}")
    ids = tokenizer.encode(prompt, add_eos=True)
    if UNK in ids:
        bad = sorted({ch for ch in prompt if ch not in tokenizer.char_to_id})
        warnings.warn(f"prompt characters outside vocabulary replaced by unk: {bad}")
    embedded = lm.embed_ids(torch.tensor(ids, dtype=torch.long))
    return torch.cat([soft.to(embedded.dtype), embedded], dim=0)


def prompt_for(task: str, language: Optional[str]) -> str:
    task = task.lower()
    if task == "st":
        return ST_TEST_PROMPT
    if task == "asr":
        if not language:
            raise ValueError("asr prompting requires the language display name")
        return asr_test_prompt(language)
    raise ValueError(f"unknown task {task!r}; expected 'st' or 'asr'")


def generate(model: SlmModel, features: AcousticFeatures, task: str,
             language: Optional[str] = None, max_len: int = 256) -> str:
    """Greedy hypothesis for one utterance under the fixed test prompt."""
    return generate_batch(model, [features], task, language, max_len)[0]


def generate_batch(model: SlmModel, features: Sequence[AcousticFeatures],
                   task: str, language: Optional[str] = None,
                   max_len: int = 256) -> list[str]:
    """Greedy hypotheses for several utterances in one padded LM batch."""
    if not features:
        return []
    prompt = prompt_for(task, language)
    with torch.no_grad():
        rows = [assemble_input(encode_audio(model, f), prompt, model.lm,
                               model.tokenizer) for f in features]
        width = max(r.shape[0] for r in rows)
        batch = torch.zeros(len(rows), width, model.lm.config.d_llm)
        pad_mask = torch.ones(len(rows), width, dtype=torch.bool)
        for i, row in enumerate(rows):
            batch[i, :row.shape[0]] = row
            pad_mask[i, :row.shape[0]] = False
        memory = model.lm.encode(batch, pad_mask)
        out = greedy_decode(model.lm, memory, pad_mask, max_len=max_len)
    return [model.tokenizer.decode(row.tolist()) for row in out]


def save_slm(path: str, model: SlmModel) -> None:
    """Write the full composite to one checkpoint (trainable set included)."""
    config = {
        "kind": "slm",
        "encoder": model.encoder.config.to_dict(),
        "lm": model.lm.config.to_dict(),
        "adapter": model.adapter.config.to_dict(),
        "lora": None if model.lora is None else model.lora.config.to_dict(),
        "tokenizer_chars": list(model.tokenizer.chars),
        "trainable_set": list(model.trainable_set),
    }
    arrays = {key: value.detach().cpu().numpy().copy()
              for key, value in named_state(model).items()}
    save_checkpoint(path, config, arrays)


def load_slm(path: str) -> SlmModel:
    """Rebuild a composite saved by save_slm."""
    config, arrays = load_checkpoint(path)
    if config.get("kind") != "slm":
        raise ValueError(f"checkpoint at {path} is not a composite model")

    def take(prefix: str) -> dict[str, torch.Tensor]:
        return {key[len(prefix):]: torch.from_numpy(value)
                for key, value in arrays.items() if key.startswith(prefix)}

    encoder = SpeechEncoder(EncoderConfig(**config["encoder"]))
    encoder.load_state_dict(take("encoder."))
    lm = TextLm(LmConfig(**config["lm"]))
    lm.load_state_dict(take("lm."))
    tokenizer = CharTokenizer(chars=tuple(config["tokenizer_chars"]))
    adapter = ConvAdapter(AdapterConfig(**config["adapter"]))
    adapter.load_state_dict(take("adapter."))
    layer_weights = LayerWeights(encoder.config.num_layers)
    with torch.no_grad():
        layer_weights.w.copy_(torch.from_numpy(arrays["layer_weights.w"]))
    lora = None
    if config["lora"] is not None:
        lora_cfg = LoraConfig(rank=config["lora"]["rank"],
                              alpha=config["lora"]["alpha"],
                              targets=tuple(config["lora"]["targets"]))
        lora = lora_apply(lm, lora_cfg, seed=0)
        with torch.no_grad():
            for key, value in lora.named_arrays().items():
                value.copy_(torch.from_numpy(arrays[key]))
    return SlmModel(encoder=encoder, layer_weights=layer_weights, adapter=adapter,
                    lm=lm, tokenizer=tokenizer, lora=lora,
                    trainable_set=tuple(config["trainable_set"]))
