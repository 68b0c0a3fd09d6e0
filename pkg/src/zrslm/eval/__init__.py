"""Evaluation: text normalization, WER, BLEU, language ID, reports."""

from .textnorm import normalize_text
from .wer import wer, word_edit_distance
from .bleu import bleu
from .langid import (
    UNKNOWN,
    LangIdModel,
    confusion_matrix,
    fit_langid,
    language_accuracy,
    normalize_confusion,
)
from .report import EvalReport, FilteredWer, compile_report, filtered_rescore, save_report

__all__ = [
    "normalize_text",
    "wer",
    "word_edit_distance",
    "bleu",
    "UNKNOWN",
    "LangIdModel",
    "fit_langid",
    "language_accuracy",
    "confusion_matrix",
    "normalize_confusion",
    "EvalReport",
    "FilteredWer",
    "compile_report",
    "filtered_rescore",
    "save_report",
]
