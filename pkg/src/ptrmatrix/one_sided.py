"""Randomized algorithm that never answers 1 on a 0-input.

It hunts for a 1-certificate: random cells of undiscarded columns are used as
starting points for budget-limited pointer walks (``milestone_trace``) that
discard every column in which they see a 0 bit-entry. Once fewer than
``small_set_threshold`` columns remain they are read in full and the
all-1 column, if any, is checked with ``verify_column``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import _kernels as K
from .errors import AccountingViolation
from .matrix import (CellRef, Certificate, Matrix, OneCert, ZeroBrokenColumn,
                     certificate_to_json)
from .oracle import QueryOracle, QueryStats

ENDINGS = {K.END_HIT_ONE: "hit_one_bit", K.END_NULL: "null_pointer",
           K.END_BUDGET: "budget_exhausted"}


@dataclass(frozen=True)
class OneSidedConfig:
    budget_factor: float = 100.0
    small_set_threshold: int = 100
    loop_multiplier: float = 10.0
    rng_seed: int = 0
    check_accounting: bool = True
    oracle_mode: str = "cached"

    def __post_init__(self):
        if self.budget_factor <= 0 or self.loop_multiplier <= 0 or self.small_set_threshold <= 0:
            raise ValueError("budget_factor, loop_multiplier and small_set_threshold must be positive")

    def iterations(self, n: int) -> int:
        return math.ceil(self.loop_multiplier * math.sqrt(n) * math.log2(n))


@dataclass(frozen=True)
class TraceOutcome:
    discarded: frozenset
    queries_entry: int
    queries_raw: int
    steps: int
    ended_by: str


@dataclass
class RunReport:
    answer: int
    certificate: Optional[Certificate]
    stats: QueryStats
    seed: int
    rounds: int
    algorithm: str = "one_sided"
    outcome: str = ""
    details: dict = field(default_factory=dict)
    phases: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.certificate is not None

    def to_json(self) -> dict:
        out = {"algorithm": self.algorithm, "answer": self.answer,
               "cert": certificate_to_json(self.certificate),
               "entry_queries": self.stats.entry_queries,
               "bit_queries": self.stats.bit_queries,
               "raw_reads": self.stats.raw_reads,
               "seed": self.seed, "rounds": self.rounds, "outcome": self.outcome}
        if self.details:
            out["details"] = self.details
        if self.phases:
            out["phases"] = self.phases
        return out


@dataclass(frozen=True)
class VerifyOutcome:
    """Result of reading one column and, if it is all-1, its pointer chain.

    ``certificate`` is a OneCert for answer 1, a ZeroBrokenColumn for an
    all-1 column without a valid chain, and None when the column holds a 0
    (``zero_witness`` then names that cell).
    """
    answer: int
    certificate: Optional[Certificate] = None
    zero_witness: Optional[CellRef] = None


class ColumnSet:
    """Array-backed set of column indices with O(1) removal and indexing."""

    def __init__(self, s: int, cols: Iterable[int]):
        self.s = s
        self.members = np.zeros(s, dtype=np.int64)
        self.where = np.full(s, -1, dtype=np.int64)
        self.cst = np.zeros(1, dtype=np.int64)
        for c in sorted(set(int(c) for c in cols)):
            self.members[self.cst[0]] = c
            self.where[c] = self.cst[0]
            self.cst[0] += 1

    def __len__(self):
        return int(self.cst[0])

    def __contains__(self, c):
        return 0 <= c < self.s and self.where[c] >= 0

    def __iter__(self):
        return iter(sorted(int(c) for c in self.members[:len(self)]))

    def at(self, k: int) -> int:
        return int(self.members[k])

    def discard(self, c: int) -> None:
        K.pyfunc(K.remove_column)(self.members, self.where, self.cst, int(c))

    def to_set(self) -> set:
        return set(self)


def verify_column(o: QueryOracle, k: int) -> VerifyOutcome:
    m = o.matrix
    s = m.s
    if not 0 <= k < s:
        m.check((0, k))
    col = o.read_column_bits(k)
    zeros = np.flatnonzero(col == 0)
    if zeros.size:
        return VerifyOutcome(0, None, CellRef(int(zeros[0]), k))
    head = None
    for r in range(s):
        if o.read_ptr_index(r * s + k) >= 0:
            head = r * s + k
            break
    if head is None:
        return VerifyOutcome(0, ZeroBrokenColumn(k, "all_null"))
    chain = [head]
    cols = {k}
    cur = head
    for _ in range(s - 1):
        p = o.read_ptr_index(cur)
        if p < 0:
            return VerifyOutcome(0, ZeroBrokenColumn(k, "short_chain"))
        if o.read_bit_index(p) != 0:
            return VerifyOutcome(0, ZeroBrokenColumn(k, "nonzero_bit"))
        if p % s in cols:
            return VerifyOutcome(0, ZeroBrokenColumn(k, "repeated_column"))
        cols.add(p % s)
        chain.append(p)
        cur = p
    if o.read_ptr_index(cur) >= 0:
        return VerifyOutcome(0, ZeroBrokenColumn(k, "missing_terminator"))
    return VerifyOutcome(1, OneCert(k, tuple(m.ref(i) for i in chain)))


def accounting_bound(discarded: int, csize: int, s: int, budget_factor: float) -> float:
    """Most reads a trace that discarded ``discarded`` columns may issue."""
    return discarded * 2.0 * budget_factor * s / csize + 3


def milestone_trace(o: QueryOracle, C, start, cfg: OneSidedConfig = OneSidedConfig()) -> TraceOutcome:
    """Run one budget-limited walk from ``start``; ``C`` (a set) loses the seen columns."""
    m = o.matrix
    s = m.s
    idx = m.index(start)
    if isinstance(C, ColumnSet):
        cs = C
    else:
        cs = ColumnSet(s, C)
    if idx % s not in cs:
        raise ValueError("start cell must lie in an undiscarded column")
    csize = len(cs)
    before = o.stats()
    o.reserve(2 * int(cfg.budget_factor * s) + 8)
    mark = np.zeros(s, dtype=np.bool_)
    out_cols = np.zeros(s, dtype=np.int64)
    end, nd, steps, q = K.milestone_walk(*o.state, s, cs.members, cs.where, cs.cst, idx,
                                         float(cfg.budget_factor), mark, out_cols)
    discarded = frozenset(int(c) for c in out_cols[:nd])
    if end != K.END_HIT_ONE and cfg.check_accounting:
        bound = accounting_bound(nd, csize, s, cfg.budget_factor)
        if q > bound:
            raise AccountingViolation(f"trace issued {q} reads, bound {bound:.1f}")
    if cs is not C:
        C.difference_update(discarded)
    return TraceOutcome(discarded, (o.stats() - before).entry_queries, int(q), int(steps),
                        ENDINGS[int(end)])


def one_sided_on(o: QueryOracle, cfg: OneSidedConfig, seed: int) -> RunReport:
    """Run the algorithm against an existing oracle (shared by the ZPP driver)."""
    m = o.matrix
    s, n = m.s, m.n
    rng = np.random.Generator(np.random.Philox(seed))
    iters = cfg.iterations(n)
    u_col = rng.random(iters)
    u_row = rng.random(iters)
    cs = ColumnSet(s, range(s))
    mark = np.zeros(s, dtype=np.bool_)
    out_cols = np.zeros(s, dtype=np.int64)
    tally = np.zeros(5, dtype=np.int64)
    per_call = 2 * int(cfg.budget_factor * s) + 8
    before = o.stats()
    t = 0
    while True:
        o.reserve(per_call)
        t, state = K.one_sided_loop(*o.state, s, cs.members, cs.where, cs.cst, u_col, u_row,
                                    t, iters, cfg.small_set_threshold,
                                    float(cfg.budget_factor), mark, out_cols, per_call, tally)
        if state != K.LOOP_NEED_CAPACITY:
            break
        o.reserve(max(per_call, len(o)))
    details = {"traces": int(tally[0]), "budget_exhausted": int(tally[1]),
               "null_endings": int(tally[2]), "accounting_violations": int(tally[3]),
               "max_trace_reads": int(tally[4]), "final_columns": len(cs)}
    if cfg.check_accounting and tally[3]:
        raise AccountingViolation(f"{int(tally[3])} milestone traces exceeded their read bound")

    answer, cert, outcome = 0, None, "too_many_columns"
    csize = len(cs)
    if csize == 0:
        outcome = "no_columns"
    elif csize <= cfg.small_set_threshold:
        outcome = "no_all_one_column"
        full = [c for c in cs if o.read_column_bits(c).all()]
        if full:
            v = verify_column(o, full[0])
            answer, outcome = v.answer, "verified"
            cert = v.certificate if v.answer == 1 else None
    return RunReport(answer=answer, certificate=cert, stats=o.stats() - before, seed=seed,
                     rounds=int(t), algorithm="one_sided", outcome=outcome, details=details)


def run_one_sided(m: Matrix, cfg: OneSidedConfig = OneSidedConfig()) -> RunReport:
    return one_sided_on(QueryOracle(m, cfg.oracle_mode), cfg, cfg.rng_seed)


def run_full_read(m: Matrix, seed: int = 0) -> RunReport:
    """Baseline: read every bit-entry and pointer-entry, then decide."""
    from .matrix import evaluate_reference, principal_chain

    o = QueryOracle(m)
    idxs = np.arange(m.n, dtype=np.int64)
    o.read_bits(idxs)
    o.read_ptrs(idxs)
    answer = evaluate_reference(m)
    cert = None
    if answer:
        chain = principal_chain(m)
        cert = OneCert(chain.cells[0].col, chain.cells)
    return RunReport(answer=answer, certificate=cert, stats=o.stats(), seed=seed, rounds=1,
                     algorithm="full_read", outcome="read_all")
