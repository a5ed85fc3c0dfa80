"""Data model and line-delimited file formats for sense-annotated parallel corpora.

A corpus file is UTF-8, one JSON object per line:

    {"id": "s1", "text": "I sat by the bank",
     "tokens": [{"surface": "bank", "lemma": "bank", "pos": "NOUN",
                 "sense": "bn:00008364n", "start": 13, "end": 17}],
     "target": "Me senté junto a la orilla", "src_lang": "en", "tgt_lang": "es"}

`sense` and `pos` are optional per token. An eval-set file uses the same
token schema but carries `good` / `bad` lexicalization lists instead of a
target:

    {"id": "e1", "text": "...", "tokens": [...],
     "good": ["orilla"], "bad": ["banco"]}

Malformed lines never abort parsing; they are skipped and reported as
per-line diagnostics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable


class CorpusError(Exception):
    """Fatal corpus problem (unreadable stream, not a per-line issue)."""


@dataclass(frozen=True)
class Diagnostic:
    """One skipped or rejected input line."""

    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True)
class AnnotatedToken:
    surface: str
    lemma: str
    start: int
    end: int
    pos: str = ""
    sense: str | None = None


@dataclass(frozen=True)
class AnnotatedSentence:
    id: str
    text: str
    tokens: tuple[AnnotatedToken, ...]

    def sense_tokens(self) -> list[tuple[int, AnnotatedToken]]:
        """(position, token) for every token carrying a sense annotation."""
        return [(i, t) for i, t in enumerate(self.tokens) if t.sense is not None]


@dataclass(frozen=True)
class ParallelPair:
    source: AnnotatedSentence
    target: str
    src_lang: str
    tgt_lang: str


@dataclass(frozen=True)
class EvalItem:
    id: str
    source: AnnotatedSentence
    good: frozenset[str]
    bad: frozenset[str]

    @property
    def sense_token(self) -> tuple[int, AnnotatedToken]:
        return self.source.sense_tokens()[0]


@dataclass(frozen=True)
class CorpusReport:
    sentences: int
    tokens: int
    sense_tokens: int
    distinct_lemmas: int
    distinct_senses: int


def _check_sense(sense: str) -> None:
    if not sense or any(c.isspace() for c in sense):
        raise ValueError(f"invalid sense identifier {sense!r}")


def _build_sentence(obj: dict) -> AnnotatedSentence:
    """Construct a validated AnnotatedSentence from a decoded record.

    Raises ValueError with a human-readable reason on any invariant
    violation. Lemmas are lowercased on ingest so that index keys never
    split on case.
    """
    sid = obj.get("id")
    text = obj.get("text")
    if not isinstance(sid, str) or not sid:
        raise ValueError("missing or empty 'id'")
    if not isinstance(text, str):
        raise ValueError("missing 'text'")
    raw_tokens = obj.get("tokens", [])
    if not isinstance(raw_tokens, list):
        raise ValueError("'tokens' must be a list")

    tokens = []
    prev_end = 0
    for i, tok in enumerate(raw_tokens):
        if not isinstance(tok, dict):
            raise ValueError(f"token {i} is not an object")
        try:
            surface = tok["surface"]
            lemma = tok["lemma"]
            start = tok["start"]
            end = tok["end"]
        except KeyError as exc:
            raise ValueError(f"token {i} missing field {exc}") from None
        sense = tok.get("sense")
        pos = tok.get("pos", "") or ""
        if not isinstance(start, int) or not isinstance(end, int):
            raise ValueError(f"token {i} span must be integers")
        if not (0 <= start < end <= len(text)):
            raise ValueError(f"token {i} span [{start}, {end}) out of bounds")
        if start < prev_end:
            raise ValueError(f"token {i} span overlaps or is out of order")
        prev_end = end
        if sense is not None:
            if not isinstance(sense, str):
                raise ValueError(f"token {i} sense must be a string")
            _check_sense(sense)
            if not lemma:
                raise ValueError(f"token {i} has a sense but no lemma")
        tokens.append(
            AnnotatedToken(
                surface=str(surface),
                lemma=str(lemma).lower(),
                start=start,
                end=end,
                pos=str(pos),
                sense=sense,
            )
        )
    return AnnotatedSentence(id=sid, text=text, tokens=tuple(tokens))


def _iter_decoded_lines(stream: IO) -> Iterable[tuple[int, str | None, str | None]]:
    """Yield (line number, text, decode error) over a text or byte stream."""
    try:
        iterator = iter(stream)
    except TypeError as exc:
        raise CorpusError(f"unreadable stream: {exc}") from exc
    for lineno, raw in enumerate(iterator, start=1):
        if isinstance(raw, bytes):
            try:
                yield lineno, raw.decode("utf-8"), None
            except UnicodeDecodeError as exc:
                yield lineno, None, f"invalid UTF-8: {exc}"
        else:
            yield lineno, raw, None


def parse_annotated_corpus(stream: IO) -> tuple[list[ParallelPair], list[Diagnostic]]:
    """Parse a corpus stream into pairs plus per-line diagnostics.

    Well-formed lines yield exactly one ParallelPair each, in input order.
    Malformed lines are skipped with a diagnostic. Duplicate sentence ids
    keep the first occurrence.
    """
    pairs: list[ParallelPair] = []
    diagnostics: list[Diagnostic] = []
    seen: set[str] = set()
    for lineno, line, decode_err in _iter_decoded_lines(stream):
        if decode_err is not None:
            diagnostics.append(Diagnostic(lineno, decode_err))
            continue
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("record is not an object")
            source = _build_sentence(obj)
            target = obj.get("target")
            src_lang = obj.get("src_lang")
            tgt_lang = obj.get("tgt_lang")
            if not isinstance(target, str) or not target:
                raise ValueError("missing or empty 'target'")
            if not src_lang or not tgt_lang:
                raise ValueError("missing language codes")
            if src_lang == tgt_lang:
                raise ValueError("src_lang and tgt_lang must differ")
        except (ValueError, json.JSONDecodeError) as exc:
            diagnostics.append(Diagnostic(lineno, str(exc)))
            continue
        if source.id in seen:
            diagnostics.append(Diagnostic(lineno, f"duplicate id {source.id!r}"))
            continue
        seen.add(source.id)
        pairs.append(
            ParallelPair(
                source=source,
                target=target,
                src_lang=str(src_lang),
                tgt_lang=str(tgt_lang),
            )
        )
    return pairs, diagnostics


def parse_eval_set(stream: IO) -> tuple[list[EvalItem], list[Diagnostic]]:
    """Parse an eval-set stream.

    Items must carry exactly one sense-bearing token and disjoint,
    non-empty good/bad lexicalization lists; violations are rejected with
    a diagnostic.
    """
    items: list[EvalItem] = []
    diagnostics: list[Diagnostic] = []
    seen: set[str] = set()
    for lineno, line, decode_err in _iter_decoded_lines(stream):
        if decode_err is not None:
            diagnostics.append(Diagnostic(lineno, decode_err))
            continue
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("record is not an object")
            source = _build_sentence(obj)
            if len(source.sense_tokens()) != 1:
                raise ValueError(
                    f"expected exactly one sense-bearing token, "
                    f"got {len(source.sense_tokens())}"
                )
            good = obj.get("good")
            bad = obj.get("bad")
            for name, variants in (("good", good), ("bad", bad)):
                if not isinstance(variants, list) or not variants:
                    raise ValueError(f"'{name}' must be a non-empty list")
                if any(not isinstance(v, str) or not v for v in variants):
                    raise ValueError(f"'{name}' contains an empty variant")
            good_set = frozenset(good)
            bad_set = frozenset(bad)
            if good_set & bad_set:
                raise ValueError("good and bad lexicalizations overlap")
        except (ValueError, json.JSONDecodeError) as exc:
            diagnostics.append(Diagnostic(lineno, str(exc)))
            continue
        if source.id in seen:
            diagnostics.append(Diagnostic(lineno, f"duplicate id {source.id!r}"))
            continue
        seen.add(source.id)
        items.append(EvalItem(id=source.id, source=source, good=good_set, bad=bad_set))
    return items, diagnostics


def _token_obj(tok: AnnotatedToken) -> dict:
    obj: dict = {
        "surface": tok.surface,
        "lemma": tok.lemma,
        "start": tok.start,
        "end": tok.end,
    }
    if tok.pos:
        obj["pos"] = tok.pos
    if tok.sense is not None:
        obj["sense"] = tok.sense
    return obj


def pair_to_record(pair: ParallelPair) -> dict:
    return {
        "id": pair.source.id,
        "text": pair.source.text,
        "tokens": [_token_obj(t) for t in pair.source.tokens],
        "target": pair.target,
        "src_lang": pair.src_lang,
        "tgt_lang": pair.tgt_lang,
    }


def serialize_pair(pair: ParallelPair) -> str:
    """One corpus-file line (no trailing newline)."""
    return json.dumps(pair_to_record(pair), ensure_ascii=False)


def serialize_eval_item(item: EvalItem) -> str:
    obj = {
        "id": item.id,
        "text": item.source.text,
        "tokens": [_token_obj(t) for t in item.source.tokens],
        "good": sorted(item.good),
        "bad": sorted(item.bad),
    }
    return json.dumps(obj, ensure_ascii=False)


def validate_corpus(pairs: list[ParallelPair]) -> CorpusReport:
    """Exhaustive counts over an already-parsed corpus."""
    tokens = 0
    sense_tokens = 0
    lemmas: set[str] = set()
    senses: set[str] = set()
    for pair in pairs:
        tokens += len(pair.source.tokens)
        for _, tok in pair.source.sense_tokens():
            sense_tokens += 1
            lemmas.add(tok.lemma)
            senses.add(tok.sense)
    return CorpusReport(
        sentences=len(pairs),
        tokens=tokens,
        sense_tokens=sense_tokens,
        distinct_lemmas=len(lemmas),
        distinct_senses=len(senses),
    )


def by_id(pairs: Iterable[ParallelPair]) -> dict[str, ParallelPair]:
    """Index a corpus by sentence id (first occurrence wins)."""
    out: dict[str, ParallelPair] = {}
    for pair in pairs:
        out.setdefault(pair.source.id, pair)
    return out
