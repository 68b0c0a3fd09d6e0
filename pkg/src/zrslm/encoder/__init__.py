"""Self-supervised speech encoder: conformer blocks + masked prediction."""

from .model import (
    ConformerBlock,
    EncoderConfig,
    LayerStack,
    SpeechEncoder,
    encode,
    freeze,
    is_frozen,
    output_length,
)
from .bestrq import (
    MaskSpec,
    RqCodebooks,
    calibrate_start_prob,
    rq_targets,
    sample_mask,
    stack_for_targets,
)
from .pretrain import (
    BestRqPretrainer,
    PretrainConfig,
    load_encoder,
    lr_at,
    make_batch,
    pretrain_step,
    run_pretraining,
    save_encoder,
)

__all__ = [
    "ConformerBlock",
    "EncoderConfig",
    "LayerStack",
    "SpeechEncoder",
    "encode",
    "freeze",
    "is_frozen",
    "output_length",
    "MaskSpec",
    "RqCodebooks",
    "calibrate_start_prob",
    "rq_targets",
    "sample_mask",
    "stack_for_targets",
    "BestRqPretrainer",
    "PretrainConfig",
    "load_encoder",
    "lr_at",
    "make_batch",
    "pretrain_step",
    "run_pretraining",
    "save_encoder",
]
