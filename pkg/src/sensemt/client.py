"""HTTP client for text-generation endpoints, plus a deterministic mock.

The wire schema is a single JSON request
``{"prompt", "max_new_tokens", "temperature", "beam", "no_repeat_ngram"}``
answered by ``{"completion": "..."}``; a pluggable SchemaAdapter maps to
other completion-API shapes. Completions are cached in an append-only
JSONL file keyed by hash(prompt + generation params + model id) so
re-runs never re-send.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import requests

from .prompts import GenerationParams, parse_completion


class AuthError(Exception):
    """Missing or rejected credentials; raised before/instead of a batch."""


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    auth_env: str = ""  # name of the env var holding the token, never the token
    timeout: float = 30.0
    max_in_flight: int = 4
    retries: int = 3
    backoff: float = 0.1

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class SchemaAdapter:
    """Maps our request/response to a particular serving stack's schema."""

    to_request: Callable[[str, GenerationParams], dict]
    from_response: Callable[[dict], str]


def _default_request(prompt: str, gen: GenerationParams) -> dict:
    return {
        "prompt": prompt,
        "max_new_tokens": gen.max_new_tokens,
        "temperature": gen.temperature,
        "beam": gen.beam_size,
        "no_repeat_ngram": gen.no_repeat_ngram,
    }


def _default_response(payload: dict) -> str:
    completion = payload.get("completion")
    if not isinstance(completion, str):
        raise ValueError("response has no 'completion' string")
    return completion


DEFAULT_ADAPTER = SchemaAdapter(to_request=_default_request, from_response=_default_response)


@dataclass(frozen=True)
class CompletionRecord:
    prompt_hash: str
    raw: str
    parsed: str
    latency: float
    model: str
    params: GenerationParams
    error: str | None = None


def completion_key(prompt: str, gen: GenerationParams, model: str) -> str:
    digest = hashlib.sha256()
    digest.update(model.encode("utf-8"))
    digest.update(
        json.dumps(
            [gen.beam_size, gen.temperature, gen.no_repeat_ngram, gen.max_new_tokens]
        ).encode("utf-8")
    )
    digest.update(prompt.encode("utf-8"))
    return digest.hexdigest()


class CompletionCache:
    """Append-only completion store; one JSON record per line."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[str, str] = {}
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    self._entries[obj["key"]] = obj["raw"]

    def get(self, key: str) -> str | None:
        return self._entries.get(key)

    def put(self, key: str, raw: str) -> None:
        if key in self._entries:
            return
        self._entries[key] = raw
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"key": key, "raw": raw}, ensure_ascii=False) + "\n")


def _request_once(
    cfg: EndpointConfig, adapter: SchemaAdapter, headers: dict, prompt: str, gen: GenerationParams
) -> str:
    resp = requests.post(
        cfg.base_url,
        json=adapter.to_request(prompt, gen),
        headers=headers,
        timeout=cfg.timeout,
    )
    if resp.status_code in (401, 403):
        raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
    resp.raise_for_status()
    return adapter.from_response(resp.json())


def translate_batch(
    prompts: Sequence[str],
    cfg: EndpointConfig,
    gen: GenerationParams,
    cache: CompletionCache | None = None,
    model: str = "default",
    adapter: SchemaAdapter = DEFAULT_ADAPTER,
) -> list[CompletionRecord]:
    """Translate prompts, in order, with caching, retries and bounded fan-out.

    Transient failures (connection errors, 5xx) are retried with
    exponential backoff up to the retry budget; a prompt that keeps
    failing yields an error record rather than aborting the batch.
    """
    headers: dict[str, str] = {}
    if cfg.auth_env:
        token = os.environ.get(cfg.auth_env)
        if not token:
            raise AuthError(f"environment variable {cfg.auth_env!r} is not set")
        headers["Authorization"] = f"Bearer {token}"

    def run_one(prompt: str) -> CompletionRecord:
        key = completion_key(prompt, gen, model)
        if cache is not None:
            hit = cache.get(key)
            if hit is not None:
                return CompletionRecord(
                    prompt_hash=key,
                    raw=hit,
                    parsed=parse_completion(hit),
                    latency=0.0,
                    model=model,
                    params=gen,
                )
        start = time.monotonic()
        last_error = "no attempt made"
        for attempt in range(cfg.retries + 1):
            try:
                raw = _request_once(cfg, adapter, headers, prompt, gen)
            except AuthError:
                raise
            except (requests.ConnectionError, requests.Timeout, requests.HTTPError) as exc:
                status = getattr(getattr(exc, "response", None), "status_code", None)
                transient = status is None or status >= 500
                last_error = str(exc)
                if transient and attempt < cfg.retries:
                    time.sleep(cfg.backoff * (2**attempt))
                    continue
                break
            except (ValueError, json.JSONDecodeError) as exc:
                last_error = f"malformed response: {exc}"
                break
            else:
                latency = time.monotonic() - start
                return CompletionRecord(
                    prompt_hash=key,
                    raw=raw,
                    parsed=parse_completion(raw),
                    latency=latency,
                    model=model,
                    params=gen,
                )
        return CompletionRecord(
            prompt_hash=key,
            raw="",
            parsed="",
            latency=time.monotonic() - start,
            model=model,
            params=gen,
            error=last_error,
        )

    if not prompts:
        return []
    with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
        records = list(pool.map(run_one, prompts))
    if cache is not None:
        # single-writer cache update, in input order
        for record in records:
            if record.error is None:
                cache.put(record.prompt_hash, record.raw)
    return records


# --- deterministic mock model -------------------------------------------------

#: word -> ordered [(sense, target form), ...]; the first entry is the
#: most frequent sense and acts as the zero-context default.
MockLexicon = dict[str, list[tuple[str, str]]]


def load_mock_lexicon(path: str | Path) -> MockLexicon:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return {word: [(s, t) for s, t in entries] for word, entries in obj.items()}


def _words(text: str) -> list[str]:
    return [w.strip(".,;:!?\"'()").lower() for w in text.split()]


def _split_prompt(prompt: str) -> tuple[list[tuple[str, str]], str]:
    """Recover (demo pairs, test source) from a default-template prompt."""
    blocks = prompt.split("\n\n")
    demos: list[tuple[str, str]] = []
    test_source = ""
    for block in blocks:
        lines = block.split("\n")
        cued = [ln.split(": ", 1)[1] for ln in lines if ": " in ln]
        if len(cued) >= 2:
            demos.append((cued[0], cued[1]))
        elif len(cued) == 1:
            test_source = cued[0]
    if not test_source and demos:
        # final block rendered as "Lang: X\nLang:" pairs up oddly; last
        # block with a bare trailing cue is the query
        test_source = demos.pop()[0]
    return demos, test_source


def mock_translate(
    prompt: str, lexicon: MockLexicon, behavior: str = "copy-from-demo"
) -> str:
    """Deterministic word-by-word mock translation of a rendered prompt.

    For each source word found in the lexicon, the target form is copied
    from the earliest demonstration pair whose source contains the word
    and whose target contains one of the word's known forms; with no such
    demonstration the most-frequent-sense form is used. Unknown words are
    copied verbatim. A newline plus filler is appended so output parsing
    is exercised.
    """
    if behavior != "copy-from-demo":
        raise ValueError(f"unknown mock behavior {behavior!r}")
    demos, test_source = _split_prompt(prompt)

    def translate_word(word: str) -> str:
        key = word.strip(".,;:!?\"'()").lower()
        entries = lexicon.get(key)
        if not entries:
            return word
        forms = [form for _, form in entries]
        for demo_src, demo_tgt in demos:
            if key in _words(demo_src):
                tgt_words = set(_words(demo_tgt))
                for form in forms:
                    if form.lower() in tgt_words:
                        return form
        return forms[0]

    translated = " ".join(translate_word(w) for w in test_source.split())
    return translated + "\n(model filler text)"
