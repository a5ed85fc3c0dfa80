"""Same-sense demonstration retrieval for in-context learning.

Given a query sentence, pick the sense borne by its most polysemous
lemma, then sample k demonstration pairs whose sources contain that same
sense. Sampling is uniform without replacement and fully determined by
the seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping

from .corpus import AnnotatedSentence, ParallelPair
from .index import SenseIndex, polysemy_degree, postings, sense_frequency

MATCHED_ONLY = "matched-only"
PAD_RANDOM = "pad-random"
POLICIES = (MATCHED_ONLY, PAD_RANDOM)


@dataclass(frozen=True)
class TargetSenseChoice:
    token_position: int
    lemma: str
    sense: str
    degree: int


@dataclass(frozen=True)
class DemonstrationSet:
    demos: tuple[ParallelPair, ...]
    requested_k: int
    matched_k: int
    fallback_used: bool
    seed: int


@dataclass(frozen=True)
class CoverageReport:
    covered: int
    eligible: int
    fraction: float
    zero_denominator: bool


def select_target_sense(
    sentence: AnnotatedSentence,
    index: SenseIndex,
    degree_overrides: Mapping[str, int] | None = None,
) -> TargetSenseChoice | None:
    """Pick the sense-bearing token whose lemma is most polysemous.

    Ties go to the higher frequency of the borne sense, then to the
    lowest token position. Returns None when no token carries a sense
    known to the index.
    """
    best: TargetSenseChoice | None = None
    best_key: tuple[int, int, int] | None = None
    for position, tok in sentence.sense_tokens():
        degree = polysemy_degree(index, tok.lemma, degree_overrides)
        if degree < 1:
            continue
        key = (-degree, -sense_frequency(index, tok.sense), position)
        if best_key is None or key < best_key:
            best_key = key
            best = TargetSenseChoice(
                token_position=position,
                lemma=tok.lemma,
                sense=tok.sense,
                degree=degree,
            )
    return best


def _candidate_ids(index: SenseIndex, sense: str, exclude_id: str | None) -> list[str]:
    ids = {sid for sid, _ in postings(index, sense)}
    ids.discard(exclude_id)
    return sorted(ids)


def _sample(rng: random.Random, candidates: list[str], k: int) -> list[str]:
    return rng.sample(candidates, min(k, len(candidates)))


def sample_demonstrations(
    index: SenseIndex,
    corpus: Mapping[str, ParallelPair],
    sense: str,
    k: int,
    seed: int,
    exclude_id: str | None = None,
) -> DemonstrationSet:
    """Uniformly sample up to k same-sense pairs, never the excluded id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rng = random.Random(seed)
    chosen = _sample(rng, _candidate_ids(index, sense, exclude_id), k)
    demos = tuple(corpus[sid] for sid in chosen)
    return DemonstrationSet(
        demos=demos,
        requested_k=k,
        matched_k=len(demos),
        fallback_used=False,
        seed=seed,
    )


def retrieve_similar(
    sentence: AnnotatedSentence,
    index: SenseIndex,
    corpus: Mapping[str, ParallelPair],
    k: int,
    seed: int,
    policy: str = MATCHED_ONLY,
    degree_overrides: Mapping[str, int] | None = None,
) -> DemonstrationSet:
    """End-to-end retrieval: target-sense choice plus seeded sampling.

    When the query has no usable sense, or `pad-random` needs filler,
    demonstrations come from random non-query corpus pairs and
    `fallback_used` is set.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown fallback policy {policy!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rng = random.Random(seed)
    choice = select_target_sense(sentence, index, degree_overrides)

    matched: list[str] = []
    if choice is not None:
        matched = _sample(rng, _candidate_ids(index, choice.sense, sentence.id), k)

    demo_ids = list(matched)
    fallback_used = choice is None
    if len(demo_ids) < k and (choice is None or policy == PAD_RANDOM):
        pool = sorted(set(corpus) - set(demo_ids) - {sentence.id})
        fill = _sample(rng, pool, k - len(demo_ids))
        if fill:
            fallback_used = True
        demo_ids.extend(fill)

    return DemonstrationSet(
        demos=tuple(corpus[sid] for sid in demo_ids),
        requested_k=k,
        matched_k=len(matched),
        fallback_used=fallback_used,
        seed=seed,
    )


def coverage_report(
    corpus: Mapping[str, ParallelPair], index: SenseIndex, k: int
) -> CoverageReport:
    """Fraction of sense-bearing sentences with k full same-sense matches."""
    covered = 0
    eligible = 0
    for sid, pair in corpus.items():
        if not pair.source.sense_tokens():
            continue
        eligible += 1
        choice = select_target_sense(pair.source, index)
        if choice is None:
            continue
        if len(_candidate_ids(index, choice.sense, sid)) >= k:
            covered += 1
    if eligible == 0:
        return CoverageReport(covered=0, eligible=0, fraction=0.0, zero_denominator=True)
    return CoverageReport(
        covered=covered,
        eligible=eligible,
        fraction=covered / eligible,
        zero_denominator=False,
    )
