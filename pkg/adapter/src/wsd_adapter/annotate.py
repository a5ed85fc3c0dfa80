"""Turns tab-separated parallel text into annotated corpus records.

Two backends produce the sense tags: a deterministic rule lexicon
(see lexicon.py) and an external HTTP model. Either way the output is
one JSON object per line with the fields id, text, tokens, target,
src_lang, tgt_lang; token spans are character offsets into the text.
"""

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import requests

from .lexicon import RuleLexicon

log = logging.getLogger("wsd_adapter")

# word runs or single punctuation marks, with character spans
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str


def tokenize(text: str) -> list[tuple[str, int, int]]:
    """Whitespace segmentation plus punctuation splitting.

    Returns (surface, start, end) triples in left-to-right order, so the
    spans always satisfy the corpus parser's ordering invariant.
    """
    return [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def read_parallel_tsv(stream: IO) -> tuple[list[tuple[str, str]], list[Diagnostic]]:
    """Read source<TAB>target lines. Malformed lines are skipped with a
    diagnostic; blank lines are ignored."""
    pairs: list[tuple[str, str]] = []
    diagnostics: list[Diagnostic] = []
    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\n")
        if "\t" not in line:
            if line.strip():
                diagnostics.append(Diagnostic(lineno, "no tab separator"))
            continue
        source, target = line.split("\t", 1)
        if not source.strip() or not target.strip():
            diagnostics.append(Diagnostic(lineno, "empty source or target side"))
            continue
        pairs.append((source, target))
    return pairs, diagnostics


def _untagged_tokens(text: str) -> list[dict]:
    return [
        {"surface": surface, "lemma": surface.lower(), "start": start, "end": end}
        for surface, start, end in tokenize(text)
    ]


def tag_with_rules(text: str, lexicon: RuleLexicon) -> list[dict]:
    tokens = _untagged_tokens(text)
    lemmas = [tok["lemma"] for tok in tokens]
    for i, tok in enumerate(tokens):
        if tok["lemma"] in lexicon.lemmas():
            context = set(lemmas[:i] + lemmas[i + 1 :])
            tok["sense"] = lexicon.sense_for(tok["lemma"], context)
    return tokens


def annotate_with_rules(
    pairs: Iterable[tuple[str, str]],
    lexicon: RuleLexicon,
    src_lang: str,
    tgt_lang: str,
    id_prefix: str = "s",
) -> list[dict]:
    records = []
    for i, (source, target) in enumerate(pairs, 1):
        records.append(
            {
                "id": f"{id_prefix}{i}",
                "text": source,
                "tokens": tag_with_rules(source, lexicon),
                "target": target,
                "src_lang": src_lang,
                "tgt_lang": tgt_lang,
            }
        )
    return records


def annotate_with_model(
    pairs: list[tuple[str, str]],
    base_url: str,
    src_lang: str,
    tgt_lang: str,
    id_prefix: str = "s",
    batch_size: int = 32,
    timeout: float = 30.0,
) -> tuple[list[dict], list[Diagnostic]]:
    """Annotate via an external model endpoint.

    POSTs {"sentences": [...]} batches to base_url and expects
    {"annotations": [[{lemma, sense, start, end}, ...], ...]} back, one
    inner list per sentence naming the sense-bearing tokens. The model's
    tokenization is trusted only where it maps onto our character spans;
    anything that does not is dropped with a diagnostic. A failed batch
    degrades to sense-free records rather than aborting the run.
    """
    records: list[dict] = []
    diagnostics: list[Diagnostic] = []
    session = requests.Session()
    for offset in range(0, len(pairs), batch_size):
        batch = pairs[offset : offset + batch_size]
        try:
            response = session.post(
                base_url, json={"sentences": [s for s, _ in batch]}, timeout=timeout
            )
            response.raise_for_status()
            annotations = response.json()["annotations"]
            if len(annotations) != len(batch):
                raise ValueError("annotation count does not match batch size")
        except (requests.RequestException, ValueError, KeyError) as exc:
            for i, _ in enumerate(batch):
                diagnostics.append(
                    Diagnostic(offset + i + 1, f"backend failure, no senses: {exc}")
                )
            annotations = [[] for _ in batch]
        for i, (source, target) in enumerate(batch):
            tokens = _untagged_tokens(source)
            by_span = {(t["start"], t["end"]): t for t in tokens}
            for tag in annotations[i]:
                span = (tag.get("start"), tag.get("end"))
                tok = by_span.get(span)
                if tok is None:
                    diagnostics.append(
                        Diagnostic(offset + i + 1, f"unalignable model span {span}")
                    )
                    continue
                tok["sense"] = tag["sense"]
                if tag.get("lemma"):
                    tok["lemma"] = str(tag["lemma"]).lower()
            records.append(
                {
                    "id": f"{id_prefix}{offset + i + 1}",
                    "text": source,
                    "tokens": tokens,
                    "target": target,
                    "src_lang": src_lang,
                    "tgt_lang": tgt_lang,
                }
            )
    for diag in diagnostics:
        log.warning("line %d: %s", diag.line, diag.message)
    return records, diagnostics


def write_records(records: Iterable[dict], path: str | Path) -> None:
    """Write records as JSON lines, atomically."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    tmp.replace(path)
