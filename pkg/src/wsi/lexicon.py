"""Rolling correlation-lexicon baseline classifier.

For a target month t, candidate terms are counted over comments from months
up to t - 2 (the wage statistics publish with a two-month lag), filtered to
a minimum mean monthly frequency, and ranked by Pearson correlation between
their monthly frequency and wage growth. The ten most positively and ten
most negatively correlated terms classify the target month's comments by
occurrence counts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

from .classify import ClassProbabilities, UNRELATED
from .corpus import MonthKey, SurveyRecord, WageSeries, month_range
from .econometrics import UndefinedCorrelationError, pearson

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _load_stop_words() -> frozenset[str]:
    text = resources.files("wsi").joinpath("assets/stopwords_en.txt").read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


STOP_WORDS = _load_stop_words()


def tokenize(text: str, stop_words: frozenset[str] = STOP_WORDS) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop stop words."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in stop_words]


@dataclass(frozen=True)
class TermStats:
    term: str
    monthly: Mapping[MonthKey, int]
    mean_frequency: float
    correlation: float | None  # None when undefined (zero variance)


@dataclass(frozen=True)
class Lexicon:
    """Word lists selected for one target month.

    ``positive`` and ``negative`` are (term, correlation) pairs, positive
    sorted by descending and negative by ascending correlation, ties at the
    cut resolved toward the alphabetically lower term. ``degenerate`` marks
    a lexicon where either polarity fell short of the requested size.
    """

    as_of: MonthKey
    window_end: MonthKey
    positive: tuple[tuple[str, float], ...]
    negative: tuple[tuple[str, float], ...]
    degenerate: bool

    def __post_init__(self) -> None:
        if self.window_end != self.as_of.minus(2):
            raise ValueError("window must end exactly two months before as_of")
        overlap = {t for t, _ in self.positive} & {t for t, _ in self.negative}
        if overlap:
            raise ValueError(f"polarity lists overlap: {sorted(overlap)}")

    @property
    def positive_terms(self) -> frozenset[str]:
        return frozenset(t for t, _ in self.positive)

    @property
    def negative_terms(self) -> frozenset[str]:
        return frozenset(t for t, _ in self.negative)


def monthly_term_counts(
    grouped: Mapping[MonthKey, Sequence[SurveyRecord]],
    stop_words: frozenset[str] = STOP_WORDS,
) -> dict[str, dict[MonthKey, int]]:
    """Token occurrence counts per term per month, over translated text."""
    counts: dict[str, dict[MonthKey, int]] = {}
    for month, records in grouped.items():
        for record in records:
            for token in tokenize(record.text, stop_words):
                per_month = counts.setdefault(token, {})
                per_month[month] = per_month.get(month, 0) + 1
    return counts


def build_term_stats(
    grouped: Mapping[MonthKey, Sequence[SurveyRecord]],
    wages: WageSeries,
    window: Sequence[MonthKey],
    *,
    min_mean_frequency: float = 5.0,
    term_counts: Mapping[str, Mapping[MonthKey, int]] | None = None,
) -> list[TermStats]:
    """Frequency-filtered terms with their correlation against wage growth.

    Terms must average at least ``min_mean_frequency`` occurrences per month
    over the window. Correlation is None for terms whose frequency does not
    vary within the window (they cannot be ranked).
    """
    window = list(window)
    if len(window) < 2:
        raise ValueError("correlation window needs at least 2 months")
    growth = []
    for m in window:
        g = wages.yoy(m)
        if g is None:
            raise ValueError(f"wage growth undefined for window month {m}")
        growth.append(g)
    if term_counts is None:
        term_counts = monthly_term_counts(
            {m: grouped.get(m, []) for m in window}
        )
    stats: list[TermStats] = []
    for term in sorted(term_counts):
        per_month = term_counts[term]
        freqs = [per_month.get(m, 0) for m in window]
        mean = sum(freqs) / len(window)
        if mean < min_mean_frequency:
            continue
        try:
            corr = pearson(freqs, growth)
        except UndefinedCorrelationError:
            corr = None
        stats.append(
            TermStats(
                term=term,
                monthly={m: per_month.get(m, 0) for m in window},
                mean_frequency=mean,
                correlation=corr,
            )
        )
    return stats


def select_lexicon(stats: Sequence[TermStats], as_of: MonthKey,
                   max_terms: int = 10) -> Lexicon:
    """Top positively and negatively correlated terms for one target month."""
    ranked = [(s.term, s.correlation) for s in stats if s.correlation is not None]
    positive = sorted(
        ((t, c) for t, c in ranked if c > 0), key=lambda tc: (-tc[1], tc[0])
    )[:max_terms]
    negative = sorted(
        ((t, c) for t, c in ranked if c < 0), key=lambda tc: (tc[1], tc[0])
    )[:max_terms]
    return Lexicon(
        as_of=as_of,
        window_end=as_of.minus(2),
        positive=tuple(positive),
        negative=tuple(negative),
        degenerate=len(positive) < max_terms or len(negative) < max_terms,
    )


def occurrence_counts(tokens: Sequence[str], lexicon: Lexicon) -> tuple[int, int]:
    """(positive, negative) word occurrence counts of one tokenized comment."""
    p = sum(1 for t in tokens if t in lexicon.positive_terms)
    n = sum(1 for t in tokens if t in lexicon.negative_terms)
    return p, n


def lexicon_classify(tokens: Sequence[str], lexicon: Lexicon,
                     smoothing: str = "laplace") -> ClassProbabilities:
    """Occurrence-count classification of one tokenized comment.

    With P positive-word and N negative-word occurrences, no occurrences at
    all means the comment is unrelated. Otherwise the default "laplace"
    policy maps to (P, N, 1)/(P+N+1), leaving a shrinking neutral mass;
    the "none" policy drops the neutral pseudo-count: (P, N, 0)/(P+N).
    """
    p, n = occurrence_counts(tokens, lexicon)
    if p + n == 0:
        return UNRELATED
    if smoothing == "laplace":
        denom = p + n + 1
        return ClassProbabilities(p / denom, n / denom, 1 / denom)
    if smoothing == "none":
        denom = p + n
        return ClassProbabilities(p / denom, n / denom, 0.0)
    raise ValueError(f"unknown smoothing policy: {smoothing}")


@dataclass(frozen=True)
class LexiconPolicy:
    """Configuration of the baseline classifier."""

    window: str = "expanding"  # "expanding" or "rolling:<width>"
    min_mean_frequency: float = 5.0
    max_terms: int = 10
    smoothing: str = "laplace"

    def rolling_width(self) -> int | None:
        if self.window == "expanding":
            return None
        kind, _, width = self.window.partition(":")
        if kind != "rolling" or not width.isdigit() or int(width) < 2:
            raise ValueError(f"invalid window policy: {self.window}")
        return int(width)


def window_for(as_of: MonthKey, history_start: MonthKey,
               policy: LexiconPolicy) -> list[MonthKey]:
    """Correlation window for one target month under the configured policy."""
    end = as_of.minus(2)
    width = policy.rolling_width()
    if width is not None:
        start = end.minus(width - 1)
        if start < history_start:
            start = history_start
    else:
        start = history_start
    return month_range(start, end)


def rolling_lexicons(
    grouped: Mapping[MonthKey, Sequence[SurveyRecord]],
    wages: WageSeries,
    targets: Sequence[MonthKey],
    policy: LexiconPolicy = LexiconPolicy(),
) -> dict[MonthKey, Lexicon]:
    """Lexicons for every feasible target month, reusing one count table.

    A target is feasible when its window holds at least two months that all
    have defined wage growth; infeasible targets are absent from the result.
    The expanding window starts at the first month covered by both the
    comment history and the wage-growth series.
    """
    if not grouped:
        return {}
    yoy_months = wages.yoy_map
    if not yoy_months:
        return {}
    history_start = max(min(grouped), min(yoy_months))
    counts = monthly_term_counts(grouped)
    lexicons: dict[MonthKey, Lexicon] = {}
    for as_of in targets:
        window = window_for(as_of, history_start, policy)
        if len(window) < 2:
            continue
        if any(wages.yoy(m) is None for m in window):
            continue
        stats = build_term_stats(
            grouped, wages, window,
            min_mean_frequency=policy.min_mean_frequency,
            term_counts=counts,
        )
        lexicons[as_of] = select_lexicon(stats, as_of, max_terms=policy.max_terms)
    return lexicons


def audit_rows(lexicons: Mapping[MonthKey, Lexicon]) -> list[str]:
    """CSV rows `as_of,polarity,rank,term,correlation` for inspection."""
    rows = ["as_of,polarity,rank,term,correlation"]
    for as_of in sorted(lexicons):
        lex = lexicons[as_of]
        for polarity, pairs in (("positive", lex.positive), ("negative", lex.negative)):
            for rank, (term, corr) in enumerate(pairs, start=1):
                rows.append(f"{as_of},{polarity},{rank},{term},{corr!r}")
    return rows


class LexiconBackend:
    """Adapter presenting one month's lexicon as a classifier backend."""

    def __init__(self, lexicon: Lexicon, smoothing: str = "laplace",
                 backend_id: str = "lexicon-baseline"):
        self.lexicon = lexicon
        self.smoothing = smoothing
        self.backend_id = backend_id

    def classify_batch(self, comments: Sequence[str]):
        from .classify import BatchResult

        probs = [
            lexicon_classify(tokenize(c), self.lexicon, self.smoothing)
            for c in comments
        ]
        return BatchResult(probs=probs, failed=[False] * len(probs), wire_calls=0)
