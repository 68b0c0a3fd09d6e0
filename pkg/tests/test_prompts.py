"""Prompt bank: file format, invariants, sampling, checksums."""

import numpy as np
import pytest

from zrslm.slm.prompts import ST_TEST_PROMPT, TEST_PROMPTS, asr_test_prompt
from zrslm.train.prompts import (
    LANGUAGE_PLACEHOLDER,
    TASKS,
    TEMPLATES_PER_TASK,
    PromptBank,
    default_prompt_bank,
    load_prompt_bank,
    parse_bank_text,
    prompt_bank_checksum,
    sample_prompt,
)


def test_default_bank_shape():
    bank = default_prompt_bank()
    assert sorted(bank.train_templates) == sorted(TASKS)
    for task in TASKS:
        templates = bank.train_templates[task]
        assert len(templates) == TEMPLATES_PER_TASK
        assert len(set(templates)) == TEMPLATES_PER_TASK
    for t in bank.train_templates["asr"]:
        assert LANGUAGE_PLACEHOLDER in t
    for t in bank.train_templates["st"]:
        assert LANGUAGE_PLACEHOLDER not in t
    assert bank.test_templates == dict(TEST_PROMPTS)


def test_all_template_texts_is_stable_and_complete():
    bank = default_prompt_bank()
    texts = bank.all_template_texts()
    assert len(texts) == 2 * (TEMPLATES_PER_TASK + 1)
    assert texts == bank.all_template_texts()
    assert ST_TEST_PROMPT in texts


def _bank_text(n_asr=TEMPLATES_PER_TASK, n_st=TEMPLATES_PER_TASK):
    asr = "\n".join(f"Transcribe {LANGUAGE_PLACEHOLDER} take {i}: "
                    for i in range(n_asr))
    st = "\n".join(f"Translate to English v{i}: " for i in range(n_st))
    return f"# comment\n[asr]\n{asr}\n\n[st]\n{st}\n"


def test_parse_bank_text_round_trip(tmp_path):
    bank = parse_bank_text(_bank_text())
    assert len(bank.train_templates["asr"]) == TEMPLATES_PER_TASK
    path = tmp_path / "bank.txt"
    path.write_text(_bank_text(), encoding="utf-8")
    assert load_prompt_bank(str(path)).train_templates == bank.train_templates


def test_parse_bank_rejects_malformed_files():
    with pytest.raises(ValueError, match="before any task section"):
        parse_bank_text("just a template\n[asr]\n")
    with pytest.raises(ValueError, match="has 1 templates"):
        parse_bank_text(f"[asr]\nTranscribe {LANGUAGE_PLACEHOLDER}: \n"
                        f"[st]\n" + "\n".join(
                            f"v{i}" for i in range(TEMPLATES_PER_TASK)))
    with pytest.raises(ValueError, match="cover exactly tasks"):
        parse_bank_text(_bank_text() + "[mt]\nextra\n")


def test_bank_invariants_enforced():
    good = parse_bank_text(_bank_text()).train_templates
    missing_placeholder = dict(good)
    missing_placeholder["asr"] = tuple(
        t.replace(LANGUAGE_PLACEHOLDER, "X") for t in good["asr"])
    with pytest.raises(ValueError, match="missing"):
        PromptBank(train_templates=missing_placeholder)
    st_with_placeholder = dict(good)
    st_with_placeholder["st"] = (good["st"][:-1]
                                 + (f"Translate {LANGUAGE_PLACEHOLDER}: ",))
    with pytest.raises(ValueError, match="placeholder"):
        PromptBank(train_templates=st_with_placeholder)
    duplicated = dict(good)
    duplicated["st"] = (good["st"][0],) + good["st"][:-1]
    with pytest.raises(ValueError, match="not distinct"):
        PromptBank(train_templates=duplicated)


def test_sample_prompt_substitutes_language():
    bank = default_prompt_bank()
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = sample_prompt(bank, "asr", "Galuvian", rng)
        assert "Galuvian" in p
        assert LANGUAGE_PLACEHOLDER not in p
        assert p != sample_prompt(bank, "st", None, rng) or True
    st = sample_prompt(bank, "st", None, rng)
    assert st in bank.train_templates["st"]
    with pytest.raises(ValueError, match="language display name"):
        sample_prompt(bank, "asr", None, rng)
    with pytest.raises(ValueError, match="unknown task"):
        sample_prompt(bank, "mt", None, rng)


def test_sample_prompt_hits_every_template():
    bank = default_prompt_bank()
    rng = np.random.default_rng(1)
    seen = {sample_prompt(bank, "st", None, rng) for _ in range(600)}
    assert seen == set(bank.train_templates["st"])


def test_checksum_tracks_content(tmp_path):
    default = prompt_bank_checksum()
    assert default == prompt_bank_checksum()
    assert len(default) == 64
    path = tmp_path / "bank.txt"
    path.write_text(_bank_text(), encoding="utf-8")
    other = prompt_bank_checksum(str(path))
    assert other != default
    path.write_text(_bank_text() + "# trailing comment\n", encoding="utf-8")
    assert prompt_bank_checksum(str(path)) != other


def test_fixed_test_prompts():
    assert "English" in ST_TEST_PROMPT
    asr = asr_test_prompt("Galuvian")
    assert asr.count("Galuvian") == 2
    assert asr == TEST_PROMPTS["asr"].format(language="Galuvian")
