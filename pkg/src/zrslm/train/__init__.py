"""Prompt bank, batch streams, and the staged training loop."""

from .batches import TrainItem, build_batches
from .loop import (StageConfig, TrainConfig, TrainExample, paper_default_stages,
                   run_stage, run_training, training_step)
from .prompts import (LANGUAGE_PLACEHOLDER, TEMPLATES_PER_TASK, PromptBank,
                      default_prompt_bank, load_prompt_bank, parse_bank_text,
                      prompt_bank_checksum, sample_prompt)

__all__ = [
    "LANGUAGE_PLACEHOLDER",
    "PromptBank",
    "StageConfig",
    "TEMPLATES_PER_TASK",
    "TrainConfig",
    "TrainExample",
    "TrainItem",
    "build_batches",
    "default_prompt_bank",
    "load_prompt_bank",
    "paper_default_stages",
    "parse_bank_text",
    "prompt_bank_checksum",
    "run_stage",
    "run_training",
    "sample_prompt",
    "training_step",
]
