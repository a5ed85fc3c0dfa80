"""k-shot prompt rendering and completion parsing.

Three template families are supported:

* ``completion``: the prompt ends with an unterminated target-language
  cue (``Spanish:``) so a foundation model continues with the translation.
* ``question``: same demonstration blocks, but the final block asks for
  the translation as a question (for instruction-tuned models).
* ``alpaca``: instruction/input/response layout; zero-shot only.

The default template strings are reconstructions committed here as the
reference fixture; they can be overridden with a JSON template file using
``{src_lang} {tgt_lang} {source} {target}`` placeholders.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

COMPLETION = "completion"
QUESTION = "question"
ALPACA = "alpaca"
TEMPLATE_KINDS = (COMPLETION, QUESTION, ALPACA)

#: ISO code -> display name for the languages used in this project.
#: Unknown codes fall back to the code itself.
LANGUAGE_NAMES = {
    "en": "English",
    "es": "Spanish",
    "it": "Italian",
    "de": "German",
    "ru": "Russian",
    "zh": "Chinese",
}


def display_name(lang: str) -> str:
    return LANGUAGE_NAMES.get(lang.lower(), lang)


class PromptError(Exception):
    pass


@dataclass(frozen=True)
class PromptTemplates:
    """Template strings for the three prompt families."""

    demo: str = "{src_lang}: {source}\n{tgt_lang}: {target}"
    completion_query: str = "{src_lang}: {source}\n{tgt_lang}:"
    question_query: str = (
        "{src_lang}: {source}\nHow would you translate this sentence into {tgt_lang}?"
    )
    alpaca: str = (
        "Below is an instruction that describes a task, paired with an input "
        "that provides further context. Write a response that appropriately "
        "completes the request.\n\n"
        "### Instruction:\nTranslate the following sentence from {src_lang} "
        "to {tgt_lang}.\n\n"
        "### Input:\n{source}\n\n"
        "### Response:"
    )
    separator: str = "\n\n"


DEFAULT_TEMPLATES = PromptTemplates()


def load_template_file(path: str | Path) -> PromptTemplates:
    """Read a JSON template file; absent keys keep the defaults."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(obj, dict):
        raise PromptError(f"template file {path} must hold a JSON object")
    known = {f.name for f in PromptTemplates.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(obj) - known
    if unknown:
        raise PromptError(f"unknown template keys: {sorted(unknown)}")
    return PromptTemplates(**obj)


@dataclass(frozen=True)
class PromptSpec:
    demos: tuple[tuple[str, str], ...]
    test_source: str
    src_lang: str
    tgt_lang: str
    template: str = COMPLETION

    @property
    def k(self) -> int:
        return len(self.demos)


@dataclass(frozen=True)
class GenerationParams:
    beam_size: int = 1
    temperature: float = 1.0
    no_repeat_ngram: int = 4
    max_new_tokens: int = 150

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.no_repeat_ngram < 0:
            raise ValueError("no_repeat_ngram must be >= 0")


def render_prompt(spec: PromptSpec, templates: PromptTemplates = DEFAULT_TEMPLATES) -> str:
    """Render the full k-shot prompt text for a spec."""
    if spec.template not in TEMPLATE_KINDS:
        raise PromptError(f"unknown template kind {spec.template!r}")
    if spec.template == ALPACA:
        if spec.k != 0:
            raise PromptError("the alpaca template supports 0-shot prompting only")
        return templates.alpaca.format(
            src_lang=spec.src_lang, tgt_lang=spec.tgt_lang, source=spec.test_source
        )
    blocks = [
        templates.demo.format(
            src_lang=spec.src_lang, tgt_lang=spec.tgt_lang, source=x, target=y
        )
        for x, y in spec.demos
    ]
    query_tpl = (
        templates.completion_query if spec.template == COMPLETION else templates.question_query
    )
    blocks.append(
        query_tpl.format(
            src_lang=spec.src_lang, tgt_lang=spec.tgt_lang, source=spec.test_source
        )
    )
    return templates.separator.join(blocks)


def parse_completion(raw: str) -> str:
    """Keep only the text before the first newline, trimmed."""
    return raw.split("\n", 1)[0].strip()


def render_alpaca_record(pair) -> dict:
    """One instruction-tuning record in instruction/input/output form.

    `pair` is a corpus.ParallelPair; its language codes are mapped to
    display names so the instruction reads naturally.
    """
    return _alpaca_record(pair.source.text, pair.target, pair.src_lang, pair.tgt_lang)


def _alpaca_record(source_text: str, target_text: str, src_lang: str, tgt_lang: str) -> dict:
    return {
        "instruction": (
            f"Translate the following sentence from "
            f"{display_name(src_lang)} to {display_name(tgt_lang)}."
        ),
        "input": source_text,
        "output": target_text,
    }
