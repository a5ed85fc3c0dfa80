"""Disambiguation accuracy over hypothesis translations, plus metric correlation.

A hypothesis is judged Hit when it contains one of the item's good
lexicalizations, Error when it contains only bad ones, and Miss
otherwise. Matching is case-folded; space-delimited variants are matched
as whole token sequences while variants in non-segmented scripts
(Chinese etc.) are matched as substrings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

from scipy.special import betainc

from .corpus import EvalItem

HIT = "hit"
ERROR = "error"
MISS = "miss"

EXCLUDE = "exclude"
COUNT_AS_ERROR = "count-as-error"
MISS_POLICIES = (EXCLUDE, COUNT_AS_ERROR)


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class Verdict:
    kind: str  # hit | error | miss
    matched: str | None = None


@dataclass(frozen=True)
class MatcherConfig:
    # auto: per-variant script detection; token / substring force a mode
    mode: str = "auto"


@dataclass(frozen=True)
class EvalReport:
    verdicts: dict[str, Verdict]
    hits: int
    errors: int
    misses: int
    miss_policy: str
    accuracy: float
    accuracy_exclude: float
    accuracy_count_as_error: float
    diagnostics: tuple[str, ...] = ()


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int


def _has_cjk(text: str) -> bool:
    return any(
        0x4E00 <= ord(c) <= 0x9FFF
        or 0x3400 <= ord(c) <= 0x4DBF
        or 0x3040 <= ord(c) <= 0x30FF
        for c in text
    )


def _tokens(text: str) -> list[str]:
    return [w.strip(".,;:!?\"'()«»¿¡") for w in text.casefold().split()]


def _contains_token_seq(haystack: list[str], needle: list[str]) -> bool:
    if not needle:
        return False
    span = len(needle)
    return any(haystack[i : i + span] == needle for i in range(len(haystack) - span + 1))


def _variant_matches(hypothesis: str, variant: str, matcher: MatcherConfig) -> bool:
    mode = matcher.mode
    if mode == "auto":
        mode = "substring" if _has_cjk(variant) else "token"
    if mode == "substring":
        return variant.casefold() in hypothesis.casefold()
    return _contains_token_seq(_tokens(hypothesis), _tokens(variant))


def judge(
    hypothesis: str, item: EvalItem, matcher: MatcherConfig = MatcherConfig()
) -> Verdict:
    """Judge one hypothesis against an item; good variants checked first."""
    for variant in sorted(item.good):
        if _variant_matches(hypothesis, variant, matcher):
            return Verdict(kind=HIT, matched=variant)
    for variant in sorted(item.bad):
        if _variant_matches(hypothesis, variant, matcher):
            return Verdict(kind=ERROR, matched=variant)
    return Verdict(kind=MISS)


def parse_hypotheses(stream: IO) -> dict[str, str]:
    """Read a hypotheses file: one `id<TAB>translation` per line."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if "\t" not in line:
            raise EvaluationError(f"line {lineno}: expected 'id<TAB>translation'")
        hid, text = line.split("\t", 1)
        if hid in out:
            raise EvaluationError(f"line {lineno}: duplicate hypothesis id {hid!r}")
        out[hid] = text
    return out


def evaluate_run(
    hypotheses: Mapping[str, str],
    items: Sequence[EvalItem],
    miss_policy: str = EXCLUDE,
    matcher: MatcherConfig = MatcherConfig(),
) -> EvalReport:
    """Judge every item and aggregate accuracies under both miss policies."""
    if miss_policy not in MISS_POLICIES:
        raise EvaluationError(f"unknown miss policy {miss_policy!r}")
    verdicts: dict[str, Verdict] = {}
    diagnostics: list[str] = []
    for item in items:
        if item.id in verdicts:
            raise EvaluationError(f"duplicate eval item id {item.id!r}")
        hyp = hypotheses.get(item.id)
        if hyp is None:
            diagnostics.append(f"no hypothesis for item {item.id!r}")
            verdicts[item.id] = Verdict(kind=MISS)
        else:
            verdicts[item.id] = judge(hyp, item, matcher)

    hits = sum(1 for v in verdicts.values() if v.kind == HIT)
    errors = sum(1 for v in verdicts.values() if v.kind == ERROR)
    misses = sum(1 for v in verdicts.values() if v.kind == MISS)
    total = len(verdicts)
    decided = hits + errors
    acc_exclude = hits / decided if decided else 0.0
    acc_all = hits / total if total else 0.0
    if total == 0:
        diagnostics.append("empty evaluation: no items")
    return EvalReport(
        verdicts=verdicts,
        hits=hits,
        errors=errors,
        misses=misses,
        miss_policy=miss_policy,
        accuracy=acc_exclude if miss_policy == EXCLUDE else acc_all,
        accuracy_exclude=acc_exclude,
        accuracy_count_as_error=acc_all,
        diagnostics=tuple(diagnostics),
    )


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Product-moment correlation with a two-sided Student-t p-value.

    The p-value is computed from t = rho * sqrt((n-2) / (1-rho^2)) via
    the regularized incomplete beta function.
    """
    if len(x) != len(y):
        raise EvaluationError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise EvaluationError(f"need at least 3 points, got {n}")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise EvaluationError("correlation undefined for a constant input")
    rho = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    rho = max(-1.0, min(1.0, rho))
    df = n - 2
    if abs(rho) >= 1.0:
        p = 0.0
    else:
        t2 = rho * rho * df / (1.0 - rho * rho)
        p = float(betainc(df / 2.0, 0.5, df / (df + t2)))
    return CorrelationResult(rho=rho, p_value=p, n=n)


def correlate_metrics(
    rows: Iterable[Mapping[str, object]],
    accuracy_col: str = "accuracy",
    metric_cols: Sequence[str] | None = None,
) -> tuple[dict[str, CorrelationResult], list[str]]:
    """Correlate an accuracy column against each metric column.

    Rows missing any needed cell are excluded with a diagnostic. Returns
    (per-column results, diagnostics).
    """
    rows = list(rows)
    if metric_cols is None:
        cols: set[str] = set()
        for row in rows:
            cols.update(row)
        cols.discard(accuracy_col)
        metric_cols = sorted(c for c in cols if c != "system")
    diagnostics: list[str] = []

    def cell(row: Mapping[str, object], col: str) -> float | None:
        value = row.get(col)
        if value is None or value == "":
            return None
        try:
            return float(value)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            return None

    results: dict[str, CorrelationResult] = {}
    for col in metric_cols:
        xs: list[float] = []
        ys: list[float] = []
        for i, row in enumerate(rows):
            acc = cell(row, accuracy_col)
            metric = cell(row, col)
            if acc is None or metric is None:
                diagnostics.append(f"row {i}: missing {accuracy_col!r} or {col!r}, excluded")
                continue
            xs.append(acc)
            ys.append(metric)
        results[col] = pearson(xs, ys)
    return results, diagnostics
