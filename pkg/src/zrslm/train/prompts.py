"""Prompt paraphrase bank: 25 training templates per task plus fixed test prompts.

The bank ships as a versioned text file (one template per line, sections per
task, trailing whitespace significant).  Training draws templates uniformly at
random conditional on the task; evaluation always uses the fixed test prompt.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from ..slm.prompts import TEST_PROMPTS

TASKS = ("asr", "st")
TEMPLATES_PER_TASK = 25
LANGUAGE_PLACEHOLDER = "{language}"
_BANK_RESOURCE = "prompt_bank.txt"


@dataclass(frozen=True)
class PromptBank:
    train_templates: dict[str, tuple[str, ...]]
    test_templates: dict[str, str] = field(default_factory=lambda: dict(TEST_PROMPTS))

    def __post_init__(self) -> None:
        if sorted(self.train_templates) != sorted(TASKS):
            raise ValueError(f"bank must cover exactly tasks {TASKS}, "
                             f"got {sorted(self.train_templates)}")
        for task, templates in self.train_templates.items():
            if len(templates) != TEMPLATES_PER_TASK:
                raise ValueError(f"task {task!r} has {len(templates)} templates, "
                                 f"expected {TEMPLATES_PER_TASK}")
            if len(set(templates)) != len(templates):
                raise ValueError(f"task {task!r} templates are not distinct")
            if any(not t.strip() for t in templates):
                raise ValueError(f"task {task!r} contains a blank template")
        for t in self.train_templates["asr"]:
            if LANGUAGE_PLACEHOLDER not in t:
                raise ValueError(f"asr template missing {LANGUAGE_PLACEHOLDER}: {t!r}")
        for t in self.train_templates["st"]:
            if LANGUAGE_PLACEHOLDER in t:
                raise ValueError(f"st template carries a language placeholder: {t!r}")
        if sorted(self.test_templates) != sorted(TASKS):
            raise ValueError("test templates must cover exactly the two tasks")

    def all_template_texts(self) -> list[str]:
        """Every template string, train and test, in stable order."""
        out: list[str] = []
        for task in TASKS:
            out.extend(self.train_templates[task])
            out.append(self.test_templates[task])
        return out


def parse_bank_text(text: str) -> PromptBank:
    sections: dict[str, list[str]] = {}
    current: Optional[list[str]] = None
    for raw in text.split("\n"):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            current = sections.setdefault(stripped[1:-1], [])
            continue
        if current is None:
            raise ValueError(f"template before any task section: {raw!r}")
        current.append(raw)
    return PromptBank(train_templates={k: tuple(v) for k, v in sections.items()})


def load_prompt_bank(path: str) -> PromptBank:
    with open(path, encoding="utf-8") as fh:
        return parse_bank_text(fh.read())


def _bank_resource_bytes() -> bytes:
    return resources.files("zrslm.train").joinpath("data", _BANK_RESOURCE).read_bytes()


def default_prompt_bank() -> PromptBank:
    """The bank packaged with the library."""
    return parse_bank_text(_bank_resource_bytes().decode("utf-8"))


def prompt_bank_checksum(path: Optional[str] = None) -> str:
    """sha256 of the bank file, for run manifests."""
    if path is None:
        payload = _bank_resource_bytes()
    else:
        with open(path, "rb") as fh:
            payload = fh.read()
    return hashlib.sha256(payload).hexdigest()


def sample_prompt(bank: PromptBank, task: str, language: Optional[str],
                  rng: np.random.Generator) -> str:
    """One training prompt, uniform over the task's templates."""
    task = task.lower()
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    templates = bank.train_templates[task]
    template = templates[int(rng.integers(len(templates)))]
    if task == "asr":
        if not language:
            raise ValueError("asr prompt sampling requires the language display name")
        return template.replace(LANGUAGE_PLACEHOLDER, language)
    return template
