"""Randomized algorithm that never answers 0 on a 1-input, and the zero-error driver.

Columns holding a 0 bit-entry are eliminated in two stages: random sampling
removes columns with many zeros, then span tracing removes whole groups of
columns covered by one sampled column. A 0 answer always carries a
certificate (a zero in every column, two mutually non-spanning columns, or an
all-1 column whose chain is broken).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import RoundLimitExceeded
from .matrix import Certificate, Matrix, ZeroEveryColumn, ZeroNonSpanningPair
from .one_sided import (OneSidedConfig, RunReport, one_sided_on, verify_column)
from .oracle import QueryOracle, QueryStats


@dataclass(frozen=True)
class ZeroErrorConfig:
    spars_multiplier: float = 10.0
    alpha: float = 4.0
    heavy_threshold: Optional[float] = None  # defaults to n ** (1/4)
    rng_seed: int = 0
    sparsify_early_exit: bool = True
    oracle_mode: str = "cached"

    def __post_init__(self):
        if self.spars_multiplier <= 0 or self.alpha <= 0:
            raise ValueError("spars_multiplier and alpha must be positive")
        if self.heavy_threshold is not None and self.heavy_threshold <= 0:
            raise ValueError("heavy_threshold must be positive")

    def samples_per_column(self, n: int) -> int:
        return max(1, math.ceil(self.spars_multiplier * n ** 0.25 * math.log2(n)))

    def repeats(self, n: int) -> int:
        return max(1, math.ceil(self.alpha * math.log2(math.log2(n))))

    def heavy(self, n: int) -> float:
        return n ** 0.25 if self.heavy_threshold is None else self.heavy_threshold


def stage_count(s: int) -> int:
    """Least tau >= 0 with s * (99/100)**tau <= 1, in exact integer arithmetic."""
    tau = 0
    while s * 99 ** tau > 100 ** tau:
        tau += 1
    return tau


class SpanTraceMemo:
    """Resolved pointer successors among 0-cells, shared by one run.

    Each 0-cell's pointer is read at most once per run; later spans walk the
    resolved successors for free.
    """

    def __init__(self, n: int, heavy_threshold: float):
        self.heavy_threshold = heavy_threshold
        self.next = np.full(n, K.MEMO_UNKNOWN, dtype=np.int64)
        self.vstamp = np.zeros(n, dtype=np.int64)
        self.stamp = 0
        self.resolved = 0


@dataclass(frozen=True)
class ColumnScan:
    col: int
    zero_rows: np.ndarray
    all_ones: bool
    heavy: bool


@dataclass(frozen=True)
class SpanResult:
    span: frozenset
    heavy: bool
    all_ones: bool


def _scan(o: QueryOracle, c: int, memo: SpanTraceMemo) -> ColumnScan:
    bits = o.read_column_bits(c)
    zeros = np.flatnonzero(bits == 0)
    return ColumnScan(c, zeros, zeros.size == 0, zeros.size > memo.heavy_threshold)


def _trace(o: QueryOracle, scan: ColumnScan, memo: SpanTraceMemo) -> frozenset:
    s = o.matrix.s
    colmark = np.zeros(s, dtype=np.bool_)
    cols_out = np.zeros(s, dtype=np.int64)
    counts = np.zeros(2, dtype=np.int64)
    colmark[scan.col] = True
    cols_out[0] = scan.col
    counts[0] = 1
    memo.stamp += 1
    for r in scan.zero_rows:
        cur = int(r) * s + scan.col
        while True:
            o.reserve(2)
            status, cur = K.span_walk(*o.state, s, cur, memo.next, memo.vstamp, memo.stamp,
                                      colmark, cols_out, counts)
            if status == 0:
                break
            o.reserve(max(1024, len(o)))
    memo.resolved += int(counts[1])
    return frozenset(int(x) for x in cols_out[:counts[0]])


def span_traced(o: QueryOracle, c: int, memo: SpanTraceMemo) -> SpanResult:
    scan = _scan(o, c, memo)
    if scan.all_ones or scan.heavy:
        return SpanResult(frozenset([c]), scan.heavy, scan.all_ones)
    return SpanResult(_trace(o, scan, memo), False, False)


# --- procedure outcomes ---------------------------------------------------

@dataclass(frozen=True)
class Continue:
    columns: frozenset


@dataclass(frozen=True)
class AbortOne:
    column: int


@dataclass(frozen=True)
class Verified:
    answer: int
    certificate: Optional[Certificate]


@dataclass(frozen=True)
class ZeroPair:
    certificate: ZeroNonSpanningPair


def sparsify(o: QueryOracle, rng: np.random.Generator, C, cfg: ZeroErrorConfig) -> set:
    """Drop every column in which a random row sample shows a 0."""
    m = o.matrix
    s = m.s
    T = cfg.samples_per_column(m.n)
    survivors = set()
    for c in sorted(C):
        drawn, found = 0, False
        chunk = 8
        while drawn < T and not found:
            k = min(chunk, T - drawn)
            idxs = rng.integers(0, s, size=k) * s + c
            if cfg.sparsify_early_exit:
                vals = o.read_bits_until_zero(idxs)
            else:
                vals = o.read_bits(idxs)
            found = bool((vals == 0).any())
            drawn += k
            chunk *= 2
        if not found:
            survivors.add(c)
    return survivors


def procedure_a(o, rng, C, memo: SpanTraceMemo, cfg: ZeroErrorConfig = ZeroErrorConfig()):
    cols = sorted(C)
    c = cols[int(rng.integers(len(cols)))]
    scan = _scan(o, c, memo)
    if scan.all_ones:
        v = verify_column(o, c)
        return Verified(v.answer, v.certificate)
    if scan.heavy:
        return AbortOne(c)
    span = _trace(o, scan, memo)
    return Continue(frozenset(C) - span)


def procedure_b(o, rng, C, memo: SpanTraceMemo, cfg: ZeroErrorConfig = ZeroErrorConfig()):
    cols = sorted(C)
    i, j = rng.choice(len(cols), size=2, replace=False)
    c1, c2 = cols[int(i)], cols[int(j)]
    scan1 = _scan(o, c1, memo)
    if scan1.all_ones:
        v = verify_column(o, c1)
        return Verified(v.answer, v.certificate)
    scan2 = _scan(o, c2, memo)
    if scan2.all_ones:
        v = verify_column(o, c2)
        return Verified(v.answer, v.certificate)
    if scan1.heavy:
        return AbortOne(c1)
    if scan2.heavy:
        return AbortOne(c2)
    span1, span2 = _trace(o, scan1, memo), _trace(o, scan2, memo)
    if c2 not in span1 and c1 not in span2:
        return ZeroPair(ZeroNonSpanningPair(c1, c2, span1, span2))
    return Continue(frozenset(C))


def _every_column_certificate(o: QueryOracle) -> ZeroEveryColumn:
    w = o.zero_witnesses()
    if len(w) != o.matrix.s:
        raise RuntimeError("column set emptied without a witnessed 0 in every column")
    return ZeroEveryColumn(w)


def zero_sided_on(o: QueryOracle, cfg: ZeroErrorConfig, seed: int) -> RunReport:
    m = o.matrix
    s, n = m.s, m.n
    rng = np.random.Generator(np.random.Philox(seed))
    before = o.stats()
    memo = SpanTraceMemo(n, cfg.heavy(n))
    tau, reps = stage_count(s), cfg.repeats(n)

    C = frozenset(sparsify(o, rng, range(s), cfg))
    after_sparsify = len(C)
    calls = {"a": 0, "b": 0}

    def report(answer, cert, outcome, stages):
        details = {"after_sparsify": after_sparsify, "final_columns": len(C),
                   "procedure_a": calls["a"], "procedure_b": calls["b"],
                   "resolved_zero_cells": memo.resolved}
        return RunReport(answer=answer, certificate=cert, stats=o.stats() - before, seed=seed,
                         rounds=stages, algorithm="zero_sided", outcome=outcome, details=details)

    def terminal(res, stages):
        if isinstance(res, AbortOne):
            return report(1, None, "abort_heavy", stages)
        if isinstance(res, Verified):
            return report(res.answer, res.certificate, "verified", stages)
        if isinstance(res, ZeroPair):
            return report(0, res.certificate, "non_spanning_pair", stages)
        return None

    stages = 0
    for _ in range(tau):
        if len(C) <= 1:
            break
        stages += 1
        for _ in range(reps):
            if len(C) <= 1:
                break
            calls["a"] += 1
            res = procedure_a(o, rng, C, memo, cfg)
            done = terminal(res, stages)
            if done:
                return done
            C = res.columns
        if len(C) >= 2:
            calls["b"] += 1
            res = procedure_b(o, rng, C, memo, cfg)
            done = terminal(res, stages)
            if done:
                return done

    if not C:
        return report(0, _every_column_certificate(o), "all_columns_eliminated", stages)
    if len(C) == 1:
        (c,) = C
        v = verify_column(o, c)
        if v.answer == 1 or v.certificate is not None:
            return report(v.answer, v.certificate, "verified", stages)
        return report(0, _every_column_certificate(o), "all_columns_eliminated", stages)
    return report(1, None, "undecided", stages)


def run_zero_sided(m: Matrix, cfg: ZeroErrorConfig = ZeroErrorConfig()) -> RunReport:
    return zero_sided_on(QueryOracle(m, cfg.oracle_mode), cfg, cfg.rng_seed)


@dataclass(frozen=True)
class ZPPConfig:
    one_sided: OneSidedConfig = field(default_factory=OneSidedConfig)
    zero_sided: ZeroErrorConfig = field(default_factory=ZeroErrorConfig)
    rng_seed: int = 0
    max_rounds: int = 1000


def derive_seed(*parts: int) -> int:
    seq = np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def run_zpp(m: Matrix, cfg: ZPPConfig = ZPPConfig()) -> RunReport:
    """Alternate the two one-sided algorithms until one returns a certified answer.

    Both share one oracle, so an entry read in an earlier round is never
    charged again.
    """
    o = QueryOracle(m, cfg.one_sided.oracle_mode)
    phases = []
    for rnd in range(1, cfg.max_rounds + 1):
        for phase, run in ((0, lambda sd: one_sided_on(o, cfg.one_sided, sd)),
                           (1, lambda sd: zero_sided_on(o, cfg.zero_sided, sd))):
            seed = derive_seed(cfg.rng_seed, rnd, phase)
            rep = run(seed)
            phases.append({"round": rnd, "algorithm": rep.algorithm, "answer": rep.answer,
                           "certified": rep.certified, "outcome": rep.outcome,
                           "entry_queries": rep.stats.entry_queries, "seed": seed})
            if rep.certified and (phase == 1 or rep.answer == 1):
                return RunReport(answer=rep.answer, certificate=rep.certificate,
                                 stats=o.stats(), seed=cfg.rng_seed, rounds=rnd,
                                 algorithm="zpp", outcome=rep.outcome, phases=phases)
    raise RoundLimitExceeded(f"no certified answer after {cfg.max_rounds} rounds")
