"""Ambiguity-maximizing fine-tuning corpus selection.

Sentences are scored by (max polysemy degree over their sense-bearing
lemmas, min frequency over their senses), ranked twice (most polysemous
first; rarest first), and the two rankings are interleaved top-down into
a deduplicated selection of size N. The selection is emitted as
instruction-tuning records plus a fine-tuning config manifest.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from . import __version__
from .corpus import AnnotatedSentence, ParallelPair
from .index import SenseIndex, polysemy_degree, sense_frequency
from .prompts import render_alpaca_record

#: LoRA fine-tuning hyperparameters used for every emitted manifest.
FINETUNE_HYPERPARAMS = {
    "lora_rank": 8,
    "lora_alpha": 8,
    "lora_dropout": 0.05,
    "batch_size": 32,
    "learning_rate": 3e-4,
    "max_length": 256,
    "epochs": 5,
}


class CurationError(Exception):
    pass


@dataclass(frozen=True)
class AmbiguityScore:
    max_degree: int
    min_freq: int


@dataclass(frozen=True)
class CurationRanking:
    by_degree: tuple[str, ...]
    by_rarity: tuple[str, ...]
    selected: tuple[str, ...]
    target_size: int


def score_sentence(sentence: AnnotatedSentence, index: SenseIndex) -> AmbiguityScore | None:
    """Ambiguity score of a sentence; None when it bears no senses."""
    degrees = []
    freqs = []
    for _, tok in sentence.sense_tokens():
        degrees.append(polysemy_degree(index, tok.lemma))
        freqs.append(sense_frequency(index, tok.sense))
    if not degrees:
        return None
    return AmbiguityScore(max_degree=max(degrees), min_freq=min(freqs))


def _interleave(by_degree: list[str], by_rarity: list[str], n: int) -> list[str]:
    """Alternate the two rankings, skipping duplicates, until n ids.

    A skipped duplicate is backfilled from deeper in the same list so
    each list still contributes its share. The degree list goes first and
    absorbs the extra slot when n is odd.
    """
    selected: list[str] = []
    taken: set[str] = set()
    iters = [iter(by_degree), iter(by_rarity)]
    exhausted = [False, False]
    turn = 0
    while len(selected) < n and not all(exhausted):
        it = iters[turn]
        for sid in it:
            if sid not in taken:
                taken.add(sid)
                selected.append(sid)
                break
        else:
            exhausted[turn] = True
        turn = 1 - turn
    return selected


def rank_and_interleave(
    corpus: Mapping[str, ParallelPair], index: SenseIndex, n: int, seed: int = 0
) -> CurationRanking:
    """Dual-rank the corpus and interleave the rankings into N sentences.

    `seed` is accepted for CLI symmetry; the procedure itself is fully
    deterministic (ties are broken by the opposite score, then id).
    """
    if n < 1:
        raise CurationError(f"target size must be >= 1, got {n}")
    scores: dict[str, AmbiguityScore] = {}
    for sid, pair in corpus.items():
        score = score_sentence(pair.source, index)
        if score is not None:
            scores[sid] = score

    by_degree = sorted(
        scores, key=lambda s: (-scores[s].max_degree, scores[s].min_freq, s)
    )
    by_rarity = sorted(
        scores, key=lambda s: (scores[s].min_freq, -scores[s].max_degree, s)
    )
    selected = _interleave(by_degree, by_rarity, n)
    return CurationRanking(
        by_degree=tuple(by_degree),
        by_rarity=tuple(by_rarity),
        selected=tuple(selected),
        target_size=n,
    )


def split_validation(
    selected: list[str] | tuple[str, ...], holdout: int = 500, seed: int = 0
) -> tuple[list[str], list[str]]:
    """Seeded random train/validation split; validation gets `holdout` ids."""
    selected = list(selected)
    if holdout < 0:
        raise CurationError("holdout must be >= 0")
    if holdout >= len(selected) and holdout > 0:
        raise CurationError(
            f"holdout {holdout} must be smaller than the selection ({len(selected)})"
        )
    if holdout == 0:
        return selected, []
    rng = random.Random(seed)
    shuffled = list(selected)
    rng.shuffle(shuffled)
    validation = set(shuffled[:holdout])
    train = [sid for sid in selected if sid not in validation]
    valid = [sid for sid in selected if sid in validation]
    return train, valid


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def emit_finetune_dataset(
    train: list[str],
    valid: list[str],
    corpus: Mapping[str, ParallelPair],
    out_dir: str | Path,
    corpus_id: str = "",
    index_checksum: str = "",
    seed: int = 0,
    holdout: int = 500,
) -> dict[str, Path]:
    """Write train/valid instruction-tuning files plus the config manifest.

    Returns the paths written. All writes are atomic.
    """
    if not train:
        raise CurationError("empty training selection")
    for sid in list(train) + list(valid):
        if sid not in corpus:
            raise CurationError(f"selected id {sid!r} not found in corpus")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "train": out_dir / "train.jsonl",
        "valid": out_dir / "valid.jsonl",
        "manifest": out_dir / "manifest.json",
    }
    for name, ids in (("train", train), ("valid", valid)):
        lines = [
            json.dumps(render_alpaca_record(corpus[sid]), ensure_ascii=False)
            for sid in ids
        ]
        _atomic_write(paths[name], "".join(line + "\n" for line in lines))

    manifest = dict(FINETUNE_HYPERPARAMS)
    manifest.update(
        {
            "holdout": holdout,
            "train_records": len(train),
            "valid_records": len(valid),
            "corpus_id": corpus_id,
            "index_checksum": index_checksum,
            "seed": seed,
            "tool_version": __version__,
        }
    )
    _atomic_write(paths["manifest"], json.dumps(manifest, indent=2) + "\n")
    return paths


def file_checksum(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
