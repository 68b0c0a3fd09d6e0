"""Experiment pipeline: corpus -> encoder -> LM -> SLM stages -> evaluation.

Corpus builds, encoder pre-training, and LM pre-training are content-addressed
in a shared cache keyed by their configs and derived seeds, so ablations that
share upstream settings reuse artifacts.  Each run directory holds a manifest
with the full config snapshot and a checksum of every artifact file.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..corpus.build import CorpusManifest, build_corpus, load_manifest
from ..encoder.model import SpeechEncoder
from ..encoder.pretrain import load_encoder, run_pretraining, save_encoder
from ..eval.langid import fit_langid
from ..eval.report import UNDEFINED_MARK, EvalReport, compile_report, save_report
from ..lm.io import load_lm, save_lm
from ..lm.model import TextLm
from ..lm.tokenizer import CharTokenizer
from ..lm.training import instruction_tune_mt, pretrain_lm
from ..seeding import derive_seed
from ..slm.model import SlmModel, build_slm, generate_batch
from ..train.loop import run_training
from ..train.prompts import PromptBank, default_prompt_bank, prompt_bank_checksum
from .config import ExperimentConfig, config_from_tree, resolve_out_root

MANIFEST_NAME = "manifest.json"
FORMAT_VERSION = 1


@dataclass
class RunArtifacts:
    run_dir: str
    status: str
    report: Optional[EvalReport] = None
    paths: dict = field(default_factory=dict)
    plan: list = field(default_factory=list)

    @property
    def manifest_path(self) -> str:
        return os.path.join(self.run_dir, MANIFEST_NAME)


def _hash_tree(payload) -> str:
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_json(path: str, payload: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def default_cache_root() -> str:
    return os.path.join(resolve_out_root(), "cache")


def corpus_cache_key(config: ExperimentConfig) -> str:
    return _hash_tree({"corpus": config.to_dict()["corpus"]})


def encoder_cache_key(config: ExperimentConfig) -> str:
    tree = config.to_dict()
    return _hash_tree({"corpus": corpus_cache_key(config), "encoder": tree["encoder"],
                       "seed": derive_seed(config.seed, "encoder")})


def lm_cache_key(config: ExperimentConfig) -> str:
    tree = config.to_dict()
    return _hash_tree({"corpus": corpus_cache_key(config), "lm": tree["lm"],
                       "seed": derive_seed(config.seed, "lm"),
                       "bank": prompt_bank_checksum()})


def ensure_corpus(config: ExperimentConfig,
                  cache_root: str) -> tuple[CorpusManifest, str, bool]:
    """Build (or reuse) the corpus for this config; returns (manifest, dir, hit)."""
    target = os.path.join(cache_root, f"corpus-{corpus_cache_key(config)}")
    if os.path.exists(os.path.join(target, "corpus.json")):
        return load_manifest(target), target, True
    os.makedirs(cache_root, exist_ok=True)
    staging = f"{target}.tmp{os.getpid()}"
    shutil.rmtree(staging, ignore_errors=True)
    build_corpus(config.corpus, staging)
    try:
        os.rename(staging, target)
    except OSError:
        shutil.rmtree(staging, ignore_errors=True)
    return load_manifest(target), target, False


def ensure_encoder(config: ExperimentConfig, manifest: CorpusManifest,
                   cache_root: str) -> tuple[SpeechEncoder, str, bool]:
    """Pre-train (or reuse) the speech encoder on train-split features."""
    path = os.path.join(cache_root, f"encoder-{encoder_cache_key(config)}.zrck")
    if os.path.exists(path):
        encoder, _ = load_encoder(path)
        return encoder, path, True
    os.makedirs(cache_root, exist_ok=True)
    pool = [manifest.features_of(rec) for rec in manifest.records_for("train")]
    encoder, books, log = run_pretraining(pool, config.encoder.model,
                                          config.encoder.pretrain,
                                          derive_seed(config.seed, "encoder"))
    save_encoder(path, encoder, books)
    _write_metrics(path + ".metrics.jsonl", log)
    return encoder, path, False


def _write_metrics(path: str, log: Sequence[dict]) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for entry in log:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _lm_corpora(config: ExperimentConfig,
                manifest: CorpusManifest) -> dict[str, tuple[str, list[str]]]:
    lang_ids = [manifest.pivot_id()] + manifest.seen_ids()
    if config.lm.pretrain.include_unseen_text:
        lang_ids += manifest.unseen_ids()
    return {lang: (manifest.languages[lang].display_name, manifest.lm_lines(lang))
            for lang in sorted(lang_ids)}


def ensure_lm(config: ExperimentConfig, manifest: CorpusManifest, cache_root: str,
              bank: PromptBank) -> tuple[TextLm, CharTokenizer, str, bool]:
    """Pre-train + instruction-tune (or reuse) the text LM."""
    path = os.path.join(cache_root, f"lm-{lm_cache_key(config)}.zrck")
    if os.path.exists(path):
        lm, tok = load_lm(path)
        return lm, tok, path, True
    os.makedirs(cache_root, exist_ok=True)
    seed = derive_seed(config.seed, "lm")
    display_names = [manifest.languages[l].display_name
                     for l in sorted(manifest.languages)]
    extra = bank.all_template_texts() + display_names
    lm, tok, log = pretrain_lm(_lm_corpora(config, manifest), config.lm.model,
                               config.lm.pretrain, seed, extra_texts=extra)
    if config.lm.instruction_tune:
        pairs = [(rec.transcript, rec.translation)
                 for rec in manifest.records_for("train", task="st")]
        _, tune_log = instruction_tune_mt(lm, tok, pairs,
                                          use_lora=config.lm.tune_use_lora,
                                          config=config.lm.tune,
                                          seed=derive_seed(seed, "tune"),
                                          prompts=bank.train_templates["st"],
                                          replay=_lm_corpora(config, manifest),
                                          replay_config=config.lm.pretrain)
        log = list(log) + list(tune_log)
    save_lm(path, lm, tok)
    _write_metrics(path + ".metrics.jsonl", log)
    return lm, tok, path, False


def evaluate_slm(model: SlmModel, manifest: CorpusManifest,
                 config: ExperimentConfig,
                 hyp_path: Optional[str] = None) -> EvalReport:
    """Generate hypotheses for the eval split and compile the report."""
    langid_model = fit_langid({lang: manifest.lm_lines(lang)
                               for lang in sorted(manifest.languages)})
    split, chunk = config.eval.split, config.eval.gen_batch_size
    st_pairs: dict[str, tuple[list[str], list[str]]] = {}
    asr_pairs: dict[str, tuple[list[str], list[str]]] = {}
    dump: list[dict] = []
    for lang in sorted(manifest.languages):
        display = manifest.languages[lang].display_name
        for task, pairs in (("st", st_pairs), ("asr", asr_pairs)):
            recs = manifest.records_for(split, task=task, lang=lang)
            if not recs:
                continue
            refs = [r.translation if task == "st" else r.transcript for r in recs]
            hyps: list[str] = []
            for start in range(0, len(recs), chunk):
                group = recs[start:start + chunk]
                feats = [manifest.features_of(r) for r in group]
                hyps.extend(generate_batch(model, feats, task, language=display,
                                           max_len=config.eval.max_len))
            pairs[lang] = (refs, hyps)
            dump.extend({"id": r.id, "lang": lang, "task": task, "ref": ref,
                         "hyp": hyp} for r, ref, hyp in zip(recs, refs, hyps))
    if hyp_path is not None:
        tmp = hyp_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            for row in dump:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        os.replace(tmp, hyp_path)
    roles = dict({manifest.pivot_id(): "pivot"},
                 **{l: "seen" for l in manifest.seen_ids()},
                 **{l: "unseen" for l in manifest.unseen_ids()})
    return compile_report(st_pairs, asr_pairs, roles, langid_model)


def eval_targets(config: ExperimentConfig) -> dict:
    """Languages with eval records: seen + unseen (the pivot has no audio)."""
    langs = sorted([s.id for s in config.corpus.seen]
                   + [s.id for s in config.corpus.unseen])
    return {"split": config.eval.split, "languages": langs, "tasks": ["asr", "st"]}


def _plan_lines(config: ExperimentConfig, cache_root: str) -> list[str]:
    checks = (
        ("corpus", os.path.join(cache_root, f"corpus-{corpus_cache_key(config)}",
                                "corpus.json")),
        ("encoder", os.path.join(cache_root,
                                 f"encoder-{encoder_cache_key(config)}.zrck")),
        ("lm", os.path.join(cache_root, f"lm-{lm_cache_key(config)}.zrck")),
    )
    lines = [f"run {config.name} (seed {config.seed}) -> {config.run_dir()}"]
    for stage, path in checks:
        state = "cached" if os.path.exists(path) else "build"
        lines.append(f"  {stage}: {state} ({path})")
    stages = ", ".join(f"{s.name}[{'+'.join(s.trainable_set)}]x{s.steps}"
                       for s in config.train.stages)
    lines.append(f"  slm train: {stages}; tasks {list(config.train.tasks)}")
    lines.append(f"  eval: split {config.eval.split}, "
                 f"languages {eval_targets(config)['languages']}")
    return lines


def _collect_checksums(run_dir: str, extra_files: Sequence[str]) -> dict[str, str]:
    sums: dict[str, str] = {}
    for base, _, names in os.walk(run_dir):
        for name in sorted(names):
            full = os.path.join(base, name)
            if name == MANIFEST_NAME and base == run_dir:
                continue
            sums[os.path.relpath(full, run_dir)] = _sha256_file(full)
    for full in extra_files:
        if os.path.isfile(full):
            sums[full] = _sha256_file(full)
    return sums


def run_experiment(config: ExperimentConfig, dry_run: bool = False,
                   cache_root: Optional[str] = None) -> RunArtifacts:
    """Execute the full pipeline; on failure the manifest is marked failed."""
    config.validate()
    cache_root = cache_root or default_cache_root()
    if dry_run:
        plan = _plan_lines(config, cache_root)
        print("\n".join(plan))
        return RunArtifacts(run_dir=config.run_dir(), status="dry-run", plan=plan)
    run_dir = config.run_dir()
    os.makedirs(run_dir, exist_ok=True)
    bank = default_prompt_bank()
    manifest_payload: dict = {
        "format_version": FORMAT_VERSION,
        "name": config.name,
        "seed": config.seed,
        "config": config.to_dict(),
        "prompt_bank_sha256": prompt_bank_checksum(),
        "eval_targets": eval_targets(config),
        "stages": {},
        "status": "running",
    }
    stages = manifest_payload["stages"]
    manifest_file = os.path.join(run_dir, MANIFEST_NAME)

    def record(stage: str, path: str, cached: bool, t0: float) -> None:
        stages[stage] = {"path": path, "cached": cached,
                         "wall_s": round(time.perf_counter() - t0, 3)}

    try:
        t0 = time.perf_counter()
        corpus_manifest, corpus_dir, hit = ensure_corpus(config, cache_root)
        corpus_manifest.validate_hygiene()
        record("corpus", corpus_dir, hit, t0)

        t0 = time.perf_counter()
        encoder, enc_path, hit = ensure_encoder(config, corpus_manifest, cache_root)
        record("encoder", enc_path, hit, t0)

        t0 = time.perf_counter()
        lm, tok, lm_path, hit = ensure_lm(config, corpus_manifest, cache_root, bank)
        record("lm", lm_path, hit, t0)

        t0 = time.perf_counter()
        lora_config = config.slm.lora if config.slm.use_lora else None
        model = build_slm(encoder, lm, tok, seed=derive_seed(config.seed, "slm"),
                          lora_config=lora_config)
        train_dir = os.path.join(run_dir, "train")
        run_training(model, config.train, corpus_manifest, bank, out_dir=train_dir)
        record("train", train_dir, False, t0)

        t0 = time.perf_counter()
        eval_dir = os.path.join(run_dir, "eval")
        os.makedirs(eval_dir, exist_ok=True)
        report = evaluate_slm(model, corpus_manifest, config,
                              hyp_path=os.path.join(eval_dir, "hypotheses.jsonl"))
        report_paths = save_report(report, eval_dir)
        record("eval", eval_dir, False, t0)

        manifest_payload["status"] = "complete"
        manifest_payload["group_means"] = report.group_means
        manifest_payload["artifacts"] = _collect_checksums(
            run_dir, [enc_path, lm_path,
                      os.path.join(corpus_dir, "manifest.jsonl"),
                      os.path.join(corpus_dir, "corpus.json")])
        _atomic_json(manifest_file, manifest_payload)
        paths = {"manifest": manifest_file, "train": os.path.join(run_dir, "train"),
                 **report_paths}
        return RunArtifacts(run_dir=run_dir, status="complete", report=report,
                            paths=paths)
    except BaseException as exc:
        manifest_payload["status"] = "failed"
        manifest_payload["error"] = f"{type(exc).__name__}: {exc}"
        manifest_payload["artifacts"] = _collect_checksums(run_dir, [])
        _atomic_json(manifest_file, manifest_payload)
        raise


def rerun_from_manifest(manifest_path: str,
                        cache_root: Optional[str] = None) -> RunArtifacts:
    """Re-execute a run from its recorded config snapshot."""
    with open(manifest_path, encoding="utf-8") as fh:
        payload = json.load(fh)
    config = config_from_tree(payload["config"])
    return run_experiment(config, cache_root=cache_root)


_COMPARE_METRICS = ("st_bleu", "asr_wer", "asr_wer_filtered", "language_accuracy")


def _report_cell(report: dict, lang: str, metric: str):
    if metric == "st_bleu":
        entry = report["st_bleu"].get(lang)
        return None if entry is None else entry["bleu"]
    if metric == "asr_wer":
        entry = report["asr"].get(lang)
        return None if entry is None else entry["wer"]
    if metric == "asr_wer_filtered":
        entry = report["asr"].get(lang)
        return None if entry is None else entry["wer_filtered"]
    entry = report["language_accuracy"].get(lang)
    return entry


def compare_runs(run_dirs: Sequence[str],
                 out_dir: Optional[str] = None) -> dict:
    """Aligned per-language metrics across runs, with seen/unseen mean rows.

    All runs must share eval targets (split, languages, tasks).  With exactly
    two runs a delta column (second minus first) is added per metric.
    """
    if len(run_dirs) < 1:
        raise ValueError("need at least one run directory")
    runs = []
    for run_dir in run_dirs:
        with open(os.path.join(run_dir, MANIFEST_NAME), encoding="utf-8") as fh:
            manifest = json.load(fh)
        if manifest.get("status") != "complete":
            raise ValueError(f"run {run_dir} status is {manifest.get('status')!r}, "
                             f"expected 'complete'")
        with open(os.path.join(run_dir, "eval", "report.json"),
                  encoding="utf-8") as fh:
            report = json.load(fh)
        runs.append({"dir": run_dir, "name": manifest["name"],
                     "targets": manifest["eval_targets"], "report": report})
    base = runs[0]["targets"]
    for other in runs[1:]:
        if other["targets"] != base:
            diffs = {k: (base.get(k), other["targets"].get(k))
                     for k in set(base) | set(other["targets"])
                     if base.get(k) != other["targets"].get(k)}
            raise ValueError(f"eval targets differ between {runs[0]['dir']} and "
                             f"{other['dir']}: {diffs}")
    langs = base["languages"]
    roles = runs[0]["report"]["roles"]
    row_keys = list(langs) + ["seen-mean", "unseen-mean"]
    add_delta = len(runs) == 2
    table: dict[str, dict] = {}
    for key in row_keys:
        row: dict = {"role": roles.get(key, "mean")}
        for metric in _COMPARE_METRICS:
            values = []
            for run in runs:
                if key.endswith("-mean"):
                    group = run["report"]["group_means"][key.split("-")[0]]
                    metric_key = {"st_bleu": "bleu", "asr_wer": "wer",
                                  "asr_wer_filtered": "wer_filtered",
                                  "language_accuracy": "language_accuracy"}[metric]
                    value = group.get(metric_key)
                else:
                    value = _report_cell(run["report"], key, metric)
                values.append(value)
                row[f"{run['name']}:{metric}"] = value
            if add_delta:
                a, b = values
                row[f"delta:{metric}"] = None if a is None or b is None else b - a
        table[key] = row
    result = {"runs": [r["name"] for r in runs], "dirs": list(run_dirs),
              "targets": base, "rows": table}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _atomic_json(os.path.join(out_dir, "comparison.json"), result)
        _write_comparison_csv(os.path.join(out_dir, "comparison.csv"), result)
    return result


def _write_comparison_csv(path: str, result: dict) -> None:
    rows = result["rows"]
    columns = ["language", "role"]
    first = rows[next(iter(rows))]
    columns += [c for c in first if c != "role"]
    lines = [",".join(columns)]
    for key, row in rows.items():
        cells = [key]
        for col in columns[1:]:
            value = row.get(col)
            if value is None:
                cells.append(UNDEFINED_MARK)
            elif isinstance(value, float):
                cells.append(f"{value:.4f}")
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)
