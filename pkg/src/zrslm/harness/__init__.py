"""Config-driven experiment runner, presets, caching, and comparisons."""

from .config import (EncoderSection, EvalSection, ExperimentConfig, LmSection,
                     PRESETS, SlmSection, apply_master_seed, config_from_tree,
                     load_config, preset_config, resolve_out_root, save_config)
from .experiment import (RunArtifacts, compare_runs, default_cache_root,
                         ensure_corpus, ensure_encoder, ensure_lm, eval_targets,
                         evaluate_slm, rerun_from_manifest, run_experiment)

__all__ = [
    "EncoderSection",
    "EvalSection",
    "ExperimentConfig",
    "LmSection",
    "PRESETS",
    "RunArtifacts",
    "SlmSection",
    "apply_master_seed",
    "compare_runs",
    "config_from_tree",
    "default_cache_root",
    "ensure_corpus",
    "ensure_encoder",
    "ensure_lm",
    "eval_targets",
    "evaluate_slm",
    "load_config",
    "preset_config",
    "rerun_from_manifest",
    "resolve_out_root",
    "run_experiment",
    "save_config",
]
