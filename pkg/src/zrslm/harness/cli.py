"""Command-line entry points for corpus building, training, and experiments."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from ..corpus.build import build_corpus
from ..slm.model import load_slm
from .config import (ExperimentConfig, PRESETS, apply_master_seed, load_config,
                     preset_config, save_config)
from .experiment import (compare_runs, default_cache_root, ensure_corpus,
                         ensure_encoder, ensure_lm, evaluate_slm, eval_targets,
                         _plan_lines, run_experiment)
from ..eval.report import save_report


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH",
                        help="YAML experiment config file")
    parser.add_argument("--preset", metavar="NAME", choices=sorted(PRESETS),
                        help=f"shipped preset ({', '.join(sorted(PRESETS))})")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="master seed override (re-derives module seeds)")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate and print the plan without computing")


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config and args.preset:
        raise SystemExit("pass either --config or --preset, not both")
    if args.config:
        config = load_config(args.config)
        if args.seed is not None:
            config = apply_master_seed(config, args.seed)
    else:
        config = preset_config(args.preset or "reference",
                               seed=0 if args.seed is None else args.seed)
    if args.out:
        config.out = args.out
    config.validate()
    return config


def _cmd_corpus_build(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    if args.dry_run:
        print(_plan_lines(config, default_cache_root())[1])
        return 0
    if args.out:
        manifest = build_corpus(config.corpus, args.out)
        out_dir = args.out
    else:
        manifest, out_dir, _ = ensure_corpus(config, default_cache_root())
    print(f"corpus: {out_dir} ({len(manifest.records)} records, "
          f"{len(manifest.languages)} languages)")
    return 0


def _cmd_encoder_pretrain(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    if args.dry_run:
        print("\n".join(_plan_lines(config, default_cache_root())[1:3]))
        return 0
    manifest, _, _ = ensure_corpus(config, default_cache_root())
    _, path, cached = ensure_encoder(config, manifest, default_cache_root())
    print(f"encoder: {path} ({'cached' if cached else 'trained'})")
    return 0


def _cmd_lm_pretrain(args: argparse.Namespace) -> int:
    from ..train.prompts import default_prompt_bank
    config = _resolve_config(args)
    if args.dry_run:
        plan = _plan_lines(config, default_cache_root())
        print("\n".join([plan[1], plan[3]]))
        return 0
    manifest, _, _ = ensure_corpus(config, default_cache_root())
    _, _, path, cached = ensure_lm(config, manifest, default_cache_root(),
                                   default_prompt_bank())
    print(f"lm: {path} ({'cached' if cached else 'trained'})")
    return 0


def _cmd_slm_train(args: argparse.Namespace) -> int:
    from ..seeding import derive_seed
    from ..slm.model import build_slm
    from ..train.loop import run_training
    from ..train.prompts import default_prompt_bank
    config = _resolve_config(args)
    if args.dry_run:
        print("\n".join(_plan_lines(config, default_cache_root())))
        return 0
    cache = default_cache_root()
    bank = default_prompt_bank()
    manifest, _, _ = ensure_corpus(config, cache)
    manifest.validate_hygiene()
    encoder, _, _ = ensure_encoder(config, manifest, cache)
    lm, tok, _, _ = ensure_lm(config, manifest, cache, bank)
    lora = config.slm.lora if config.slm.use_lora else None
    model = build_slm(encoder, lm, tok, seed=derive_seed(config.seed, "slm"),
                      lora_config=lora)
    train_dir = os.path.join(config.run_dir(), "train")
    run_training(model, config.train, manifest, bank, out_dir=train_dir)
    print(f"slm: trained into {train_dir}")
    return 0


def _cmd_eval_run(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    if args.dry_run:
        print(_plan_lines(config, default_cache_root())[-1])
        return 0
    run_dir = config.run_dir()
    last_stage = config.train.stages[-1].name
    ckpt = os.path.join(run_dir, "train", f"slm-{last_stage}.zrck")
    if not os.path.exists(ckpt):
        raise SystemExit(f"no trained model at {ckpt}; run `zrslm slm train` first")
    model = load_slm(ckpt)
    manifest, _, _ = ensure_corpus(config, default_cache_root())
    eval_dir = os.path.join(run_dir, "eval")
    os.makedirs(eval_dir, exist_ok=True)
    report = evaluate_slm(model, manifest, config,
                          hyp_path=os.path.join(eval_dir, "hypotheses.jsonl"))
    save_report(report, eval_dir)
    print(f"eval: {eval_dir}")
    print(json.dumps(report.group_means, indent=2, sort_keys=True))
    return 0


def _cmd_experiment_run(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    artifacts = run_experiment(config, dry_run=args.dry_run)
    if artifacts.status == "complete" and artifacts.report is not None:
        print(f"run complete: {artifacts.run_dir}")
        print(json.dumps(artifacts.report.group_means, indent=2, sort_keys=True))
    return 0


def _cmd_experiment_compare(args: argparse.Namespace) -> int:
    result = compare_runs(args.runs, out_dir=args.out)
    if args.out:
        print(f"comparison written to {args.out}")
    else:
        print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zrslm",
        description="Zero-resource speech tasks with a frozen encoder "
                    "soft-prompting a frozen text LM, on synthetic languages.")
    top = parser.add_subparsers(dest="group", required=True)

    def leaf(group: str, name: str, func, help_text: str,
             common: bool = True) -> argparse.ArgumentParser:
        if group not in groups:
            groups[group] = top.add_parser(group).add_subparsers(
                dest="command", required=True)
        sub = groups[group].add_parser(name, help=help_text)
        if common:
            _add_common(sub)
        sub.set_defaults(func=func)
        return sub

    groups: dict = {}
    leaf("corpus", "build", _cmd_corpus_build, "build the synthetic corpus")
    leaf("encoder", "pretrain", _cmd_encoder_pretrain,
         "self-supervised encoder pre-training")
    leaf("lm", "pretrain", _cmd_lm_pretrain,
         "text LM pre-training and instruction tuning")
    leaf("slm", "train", _cmd_slm_train, "staged training of the composite model")
    leaf("eval", "run", _cmd_eval_run, "evaluate a trained run directory")
    leaf("experiment", "run", _cmd_experiment_run, "full pipeline end to end")
    compare = leaf("experiment", "compare", _cmd_experiment_compare,
                   "align reports from several runs", common=False)
    compare.add_argument("runs", nargs="+", metavar="RUN_DIR",
                         help="run directories holding manifest.json")
    compare.add_argument("--out", metavar="DIR",
                         help="write comparison.csv/.json here")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
