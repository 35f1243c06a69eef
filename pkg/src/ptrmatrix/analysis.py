"""Lemma checkers and run statistics.

``bad_indices`` decides the window condition for a sequence of non-negative
gaps: index I (1-based) is bad when some window starting at I has more than
``factor`` times its fair share of the total. ``milestone_gaps`` produces
such a sequence from a 1-input and a set of undiscarded columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .errors import DegenerateInput, NotAOneInput
from .matrix import Matrix, principal_chain, span_full

FACTOR = 100.0


@dataclass(frozen=True)
class GapSequence:
    xs: tuple

    def __post_init__(self):
        if any(x < 0 for x in self.xs):
            raise ValueError("gaps must be non-negative")

    @property
    def total(self) -> float:
        return float(sum(self.xs))

    def __len__(self):
        return len(self.xs)


def _as_seq(g) -> tuple:
    return g.xs if isinstance(g, GapSequence) else tuple(g)


def bad_indices(g, factor: float = FACTOR) -> set:
    """1-based bad indices, linear time via suffix maxima."""
    xs = np.asarray(_as_seq(g), dtype=np.float64)
    if xs.size == 0:
        raise DegenerateInput("need at least one gap")
    return {int(i) + 1 for i in np.flatnonzero(K.bad_index_mask(xs, float(factor)))}


def bad_indices_brute(g, factor: float = FACTOR) -> set:
    """Every (I, D) window checked directly."""
    xs = _as_seq(g)
    ell = len(xs)
    if ell == 0:
        raise DegenerateInput("need at least one gap")
    total = sum(xs)
    bad = set()
    for i in range(1, ell + 1):
        acc = 0
        for d in range(0, ell - i + 1):
            acc += xs[i - 1 + d]
            if ell * acc > factor * (d + 1) * total:
                bad.add(i)
                break
    return bad


def greedy_intervals(g, factor: float = FACTOR) -> list:
    """Disjoint heavy windows covering all bad indices, built left to right.

    Each step takes the smallest uncovered bad index and the longest heavy
    window starting there. Returns 1-based inclusive (start, end) pairs.
    """
    xs = _as_seq(g)
    ell = len(xs)
    total = sum(xs)
    bad = sorted(bad_indices(xs, factor))
    out = []
    covered_to = 0
    for j in bad:
        if j <= covered_to:
            continue
        acc, best = 0, None
        for d in range(0, ell - j + 1):
            acc += xs[j - 1 + d]
            if ell * acc > factor * (d + 1) * total:
                best = d
        if best is None:
            raise AssertionError(f"index {j} reported bad but has no heavy window")
        out.append((j, j + best))
        covered_to = j + best
    return out


def window_is_heavy(xs: Sequence[float], start: int, end: int, factor: float = FACTOR) -> bool:
    ell, total = len(xs), sum(xs)
    return ell * sum(xs[start - 1:end]) > factor * (end - start + 1) * total


def milestone_gaps(m: Matrix, C: Iterable[int]) -> GapSequence:
    """Chain positions from each undiscarded column up to the next one.

    Columns of ``C`` are taken in the order the principal chain crosses them;
    the gap of the last one runs to the end of the chain, so the gaps sum to s.
    """
    chain = principal_chain(m)
    if chain is None:
        raise NotAOneInput("matrix has no principal chain")
    C = set(int(c) for c in C)
    cols = chain.columns
    if cols[0] not in C:
        raise ValueError("the all-1 column can never be discarded and must be in C")
    if not C <= set(range(m.s)):
        raise ValueError("column outside the matrix")
    positions = [k for k, c in enumerate(cols) if c in C]
    ends = positions[1:] + [m.s]
    xs = tuple(e - p for p, e in zip(positions, ends))
    assert sum(xs) == m.s
    return GapSequence(xs)


def dichotomy(m: Matrix, C: Iterable[int]) -> dict:
    """Exhaustive check of the span dichotomy for a column set.

    Returns the fraction of columns whose span exceeds |C|/100, the fraction
    of ordered distinct pairs that are mutually non-spanning, and whether
    either branch holds.
    """
    C = sorted(set(int(c) for c in C))
    k = len(C)
    spans = {c: span_full(m, c) for c in C}
    big = sum(1 for c in C if len(spans[c]) > k / 100) / k if k else 0.0
    pairs = [(a, b) for a in C for b in C if a != b]
    free = (sum(1 for a, b in pairs if b not in spans[a] and a not in spans[b]) / len(pairs)
            if pairs else 1.0)
    return {"large_span_fraction": big, "non_spanning_fraction": free,
            "holds": big >= 1 / 100 or free >= 24 / 25}


@dataclass(frozen=True)
class ScalingFit:
    points: tuple
    slope: float
    intercept: float
    r2: float


def fit_loglog(points) -> ScalingFit:
    pts = [(float(n), float(q)) for n, q in points]
    if len(pts) < 3:
        raise DegenerateInput("need at least 3 points")
    ns = [p[0] for p in pts]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise DegenerateInput("n must be strictly increasing")
    if any(n <= 0 or q <= 0 for n, q in pts):
        raise DegenerateInput("values must be positive")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(tuple(pts), float(slope), float(intercept), r2)


def aggregate(reports, expected: Optional[Sequence[int]] = None) -> dict:
    """Descriptive statistics of entry queries; success rate against ``expected``."""
    reports = list(reports)
    if not reports:
        raise DegenerateInput("no reports")
    q = np.array([r.stats.entry_queries for r in reports], dtype=np.float64)
    out = {"trials": len(reports), "mean_q": float(q.mean()), "max_q": float(q.max()),
           "min_q": float(q.min()), "p50_q": float(np.quantile(q, 0.5)),
           "p95_q": float(np.quantile(q, 0.95))}
    if expected is not None:
        if len(expected) != len(reports):
            raise ValueError("one expected value per report")
        hits = sum(int(r.answer == e) for r, e in zip(reports, expected))
        out["success_rate"] = hits / len(reports)
    return out


def log2_sqrt_scale(n: int) -> float:
    return math.sqrt(n) * math.log2(n)
