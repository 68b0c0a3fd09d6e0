"""Analytic parameter accounting for the adapter and LoRA deltas."""

from __future__ import annotations

from typing import Optional

from ..lm.model import LmConfig
from .bridge import AdapterConfig
from .lora import LoraConfig

# Attention blocks per decoder layer carrying LoRA targets: self + cross.
_DEC_ATTN_BLOCKS = 2
_ENC_ATTN_BLOCKS = 1


def count_params(adapter_config: AdapterConfig,
                 lora_config: Optional[LoraConfig],
                 lm_config: LmConfig) -> dict:
    """Closed-form trainable-parameter counts from configs alone.

    adapter = (k*d_AE*d_LLM + d_LLM) + (k*d_LLM*d_LLM + d_LLM);
    lora    = sum over target matrices of r * (d_in + d_out), with targets in
    every self- and cross-attention block of the LM.
    """
    k = adapter_config.kernel
    d_ae = adapter_config.d_ae
    d_llm = adapter_config.d_llm
    parts = {
        "adapter.conv1.weight": k * d_ae * d_llm,
        "adapter.conv1.bias": d_llm if adapter_config.bias else 0,
        "adapter.conv2.weight": k * d_llm * d_llm,
        "adapter.conv2.bias": d_llm if adapter_config.bias else 0,
    }
    adapter_total = sum(v for key, v in parts.items() if key.startswith("adapter."))
    lora_total = 0
    if lora_config is not None:
        d = lm_config.d_llm
        num_matrices = len(lora_config.targets) * (
            _ENC_ATTN_BLOCKS * lm_config.enc_layers
            + _DEC_ATTN_BLOCKS * lm_config.dec_layers)
        per_matrix = lora_config.rank * (d + d)
        parts["lora.num_matrices"] = num_matrices
        parts["lora.per_matrix"] = per_matrix
        lora_total = num_matrices * per_matrix
    return {"adapter_total": adapter_total, "lora_total": lora_total, "parts": parts}
