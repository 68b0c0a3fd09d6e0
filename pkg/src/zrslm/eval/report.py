"""Evaluation report assembly: per-language metrics with filtered variants."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .bleu import bleu
from .langid import LangIdModel, confusion_matrix, language_accuracy, normalize_confusion
from .wer import wer

# Rendered for metrics that are undefined (e.g. filtered WER over an empty
# subset), mirroring blank table cells.
UNDEFINED_MARK = "—"


@dataclass
class FilteredWer:
    wer_all: float
    wer_subset: Optional[float]
    subset_size: int
    total: int


def filtered_rescore(refs: Sequence[str], hyps: Sequence[str], expected: str,
                     model: LangIdModel) -> FilteredWer:
    """WER over everything and over the detected-in-language subset."""
    wer_all = wer(refs, hyps)
    kept = [(r, h) for r, h in zip(refs, hyps) if model.classify(h) == expected]
    if kept:
        kept_refs, kept_hyps = zip(*kept)
        wer_subset: Optional[float] = wer(list(kept_refs), list(kept_hyps))
    else:
        wer_subset = None
    return FilteredWer(wer_all=wer_all, wer_subset=wer_subset,
                       subset_size=len(kept), total=len(refs))


@dataclass
class EvalReport:
    """Per-language ST and ASR results plus language-ID diagnostics."""

    st_bleu: dict[str, dict]
    asr: dict[str, dict]
    language_accuracy: dict[str, float]
    confusion_rows: list[str]
    confusion_cols: list[str]
    confusion_counts: list[list[int]]
    roles: dict[str, str]
    group_means: dict[str, dict] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.group_means:
            self.group_means = self._compute_group_means()

    def _compute_group_means(self) -> dict[str, dict]:
        means: dict[str, dict] = {}
        for group in ("seen", "unseen"):
            langs = sorted(l for l, r in self.roles.items() if r == group)
            entry: dict[str, Optional[float]] = {}
            bleus = [self.st_bleu[l]["bleu"] for l in langs if l in self.st_bleu]
            entry["bleu"] = sum(bleus) / len(bleus) if bleus else None
            wers = [self.asr[l]["wer"] for l in langs if l in self.asr]
            entry["wer"] = sum(wers) / len(wers) if wers else None
            filt = [self.asr[l]["wer_filtered"] for l in langs
                    if l in self.asr and self.asr[l]["wer_filtered"] is not None]
            entry["wer_filtered"] = sum(filt) / len(filt) if filt else None
            accs = [self.language_accuracy[l] for l in langs if l in self.language_accuracy]
            entry["language_accuracy"] = sum(accs) / len(accs) if accs else None
            means[group] = entry
        return means

    def to_json_dict(self) -> dict:
        return {
            "st_bleu": self.st_bleu,
            "asr": self.asr,
            "language_accuracy": self.language_accuracy,
            "confusion": {
                "rows": self.confusion_rows,
                "cols": self.confusion_cols,
                "counts": self.confusion_counts,
                "fractions": normalize_confusion(self.confusion_counts)
                if self.confusion_counts else [],
            },
            "roles": self.roles,
            "group_means": self.group_means,
        }


def compile_report(st_pairs: Mapping[str, tuple[Sequence[str], Sequence[str]]],
                   asr_pairs: Mapping[str, tuple[Sequence[str], Sequence[str]]],
                   roles: Mapping[str, str],
                   langid_model: Optional[LangIdModel]) -> EvalReport:
    """Score (reference, hypothesis) pairs grouped by language.

    `st_pairs` and `asr_pairs` map language id to (refs, hyps).  Language
    identification, accuracy, and filtered re-scoring require `langid_model`.
    """
    st_bleu = {}
    for lang in sorted(st_pairs):
        refs, hyps = st_pairs[lang]
        st_bleu[lang] = {"bleu": bleu(refs, hyps), "count": len(refs)}
    asr: dict[str, dict] = {}
    lang_acc: dict[str, float] = {}
    rows: list[str] = []
    cols: list[str] = []
    counts: list[list[int]] = []
    if langid_model is not None and asr_pairs:
        hyps_by_lang = {lang: list(asr_pairs[lang][1]) for lang in sorted(asr_pairs)}
        rows, cols, counts = confusion_matrix(hyps_by_lang, langid_model)
    for lang in sorted(asr_pairs):
        refs, hyps = asr_pairs[lang]
        if langid_model is not None:
            scored = filtered_rescore(refs, hyps, lang, langid_model)
            asr[lang] = {
                "wer": scored.wer_all,
                "wer_filtered": scored.wer_subset,
                "subset_size": scored.subset_size,
                "count": scored.total,
            }
            lang_acc[lang] = language_accuracy(hyps, lang, langid_model)
        else:
            asr[lang] = {"wer": wer(refs, hyps), "wer_filtered": None,
                         "subset_size": 0, "count": len(refs)}
    return EvalReport(st_bleu=st_bleu, asr=asr, language_accuracy=lang_acc,
                      confusion_rows=rows, confusion_cols=cols,
                      confusion_counts=counts, roles=dict(roles))


def save_report(report: EvalReport, out_dir: str) -> dict[str, str]:
    """Write report.json, confusion.csv, and confusion_plot.csv."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {"report": os.path.join(out_dir, "report.json"),
             "confusion": os.path.join(out_dir, "confusion.csv"),
             "plot_data": os.path.join(out_dir, "confusion_plot.csv")}
    tmp = paths["report"] + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    os.replace(tmp, paths["report"])
    with open(paths["confusion"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["expected"] + list(report.confusion_cols))
        for lang, row in zip(report.confusion_rows, report.confusion_counts):
            writer.writerow([lang] + list(row))
    fractions = normalize_confusion(report.confusion_counts) if report.confusion_counts else []
    with open(paths["plot_data"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["expected", "detected", "fraction"])
        for lang, row in zip(report.confusion_rows, fractions):
            for col, frac in zip(report.confusion_cols, row):
                writer.writerow([lang, col, f"{frac:.6f}"])
    return paths
