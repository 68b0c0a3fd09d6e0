"""Bridge, LoRA, prompts, and the composite speech-language model."""

from .accounting import count_params
from .bridge import (AdapterConfig, ConvAdapter, LayerWeights, adapt,
                     adapter_output_length, layer_average)
from .lora import LoraConfig, LoraHandle, LoraLinear, lora_apply, merge_lora
from .model import (TRAINABLE_COMPONENTS, SlmModel, assemble_input, build_slm,
                    encode_audio, generate, generate_batch, load_slm,
                    named_state, prompt_for, save_slm, set_trainable,
                    trainable_parameters)
from .prompts import (ASR_TEST_PROMPT_TEMPLATE, ST_TEST_PROMPT, TEST_PROMPTS,
                      asr_test_prompt)

__all__ = [
    "ASR_TEST_PROMPT_TEMPLATE",
    "AdapterConfig",
    "ConvAdapter",
    "LayerWeights",
    "LoraConfig",
    "LoraHandle",
    "LoraLinear",
    "ST_TEST_PROMPT",
    "SlmModel",
    "TEST_PROMPTS",
    "TRAINABLE_COMPONENTS",
    "adapt",
    "adapter_output_length",
    "asr_test_prompt",
    "assemble_input",
    "build_slm",
    "count_params",
    "encode_audio",
    "generate",
    "generate_batch",
    "layer_average",
    "load_slm",
    "lora_apply",
    "merge_lora",
    "named_state",
    "prompt_for",
    "save_slm",
    "set_trainable",
    "trainable_parameters",
]
