"""Fixed evaluation prompts (bit-exact strings)."""

ST_TEST_PROMPT = "Transcribe the content of this audio into English in textual form: "

ASR_TEST_PROMPT_TEMPLATE = (
    "The preceding audio is in {language}. "
    "Perform speech recognition (in {language}): "
)


def asr_test_prompt(language: str) -> str:
    return ASR_TEST_PROMPT_TEMPLATE.format(language=language)


TEST_PROMPTS = {"st": ST_TEST_PROMPT, "asr": ASR_TEST_PROMPT_TEMPLATE}
