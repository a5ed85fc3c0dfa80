"""Sense inventory over a disambiguated corpus.

Keyed on (lowercased lemma, sense). Polysemy degree of a lemma is the
number of distinct senses observed for it in the indexed corpus; sense
frequency is the number of annotated occurrences of a sense. The postings
map each sense to the (sentence id, token position) pairs where it occurs.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import ParallelPair

INDEX_FORMAT_VERSION = 1


class IndexLoadError(Exception):
    """Persisted index could not be read (truncated, wrong version, ...)."""


@dataclass(frozen=True)
class SenseIndex:
    corpus_id: str
    lemma_senses: dict[str, frozenset[str]]
    sense_freq: dict[str, int]
    postings: dict[str, tuple[tuple[str, int], ...]]
    total_sense_tokens: int


def build_index(pairs: Iterable[ParallelPair], corpus_id: str = "") -> SenseIndex:
    """Fold a corpus into a SenseIndex.

    The result is independent of input order: posting lists are sorted by
    (sentence id, token position).
    """
    lemma_senses: dict[str, set[str]] = defaultdict(set)
    sense_freq: dict[str, int] = defaultdict(int)
    postings: dict[str, list[tuple[str, int]]] = defaultdict(list)
    total = 0
    for pair in pairs:
        sid = pair.source.id
        for position, tok in pair.source.sense_tokens():
            lemma_senses[tok.lemma].add(tok.sense)
            sense_freq[tok.sense] += 1
            postings[tok.sense].append((sid, position))
            total += 1
    return SenseIndex(
        corpus_id=corpus_id,
        lemma_senses={k: frozenset(v) for k, v in lemma_senses.items()},
        sense_freq=dict(sense_freq),
        postings={k: tuple(sorted(v)) for k, v in postings.items()},
        total_sense_tokens=total,
    )


def polysemy_degree(
    index: SenseIndex, lemma: str, overrides: Mapping[str, int] | None = None
) -> int:
    """Number of distinct senses observed for `lemma`; 0 if unseen.

    `overrides` optionally supplies Knowledge-Base-backed degrees that
    take precedence over corpus-observed counts.
    """
    lemma = lemma.lower()
    if overrides and lemma in overrides:
        return overrides[lemma]
    return len(index.lemma_senses.get(lemma, ()))


def sense_frequency(index: SenseIndex, sense: str) -> int:
    """Annotated occurrence count of `sense`; 0 if unseen."""
    return index.sense_freq.get(sense, 0)


def postings(index: SenseIndex, sense: str) -> list[tuple[str, int]]:
    """(sentence id, token position) occurrences of `sense`, sorted."""
    return list(index.postings.get(sense, ()))


def save_index(index: SenseIndex, path: str | Path) -> None:
    """Write the index as a single versioned JSON file (atomic)."""
    payload = {
        "format_version": INDEX_FORMAT_VERSION,
        "corpus_id": index.corpus_id,
        "total_sense_tokens": index.total_sense_tokens,
        "lemma_senses": {k: sorted(v) for k, v in sorted(index.lemma_senses.items())},
        "sense_freq": dict(sorted(index.sense_freq.items())),
        "postings": {k: [list(p) for p in v] for k, v in sorted(index.postings.items())},
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, ensure_ascii=False, indent=1), encoding="utf-8")
    tmp.replace(path)


def load_index(path: str | Path) -> SenseIndex:
    """Load a persisted index; raises IndexLoadError on any defect."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IndexLoadError(f"cannot read index file: {exc}") from exc
    if not text.strip():
        raise IndexLoadError("index file is empty")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IndexLoadError(f"index file is corrupt: {exc}") from exc
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise IndexLoadError("not an index file (missing format_version)")
    version = payload["format_version"]
    if version != INDEX_FORMAT_VERSION:
        raise IndexLoadError(
            f"unsupported index format version {version} "
            f"(this build reads version {INDEX_FORMAT_VERSION})"
        )
    try:
        return SenseIndex(
            corpus_id=payload["corpus_id"],
            lemma_senses={
                k: frozenset(v) for k, v in payload["lemma_senses"].items()
            },
            sense_freq={k: int(v) for k, v in payload["sense_freq"].items()},
            postings={
                k: tuple((sid, int(pos)) for sid, pos in v)
                for k, v in payload["postings"].items()
            },
            total_sense_tokens=int(payload["total_sense_tokens"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise IndexLoadError(f"index file is malformed: {exc}") from exc
