"""Counting, caching read access to a matrix.

Algorithms never touch :class:`Matrix` arrays directly; every bit-entry and
pointer-entry they look at goes through a :class:`QueryOracle`, which charges
it and appends it to a transcript.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import numpy as np

from . import _kernels as K
from .matrix import CellRef, Matrix

MODES = ("cached", "raw")

_read_bit = K.pyfunc(K.read_bit)
_read_ptr = K.pyfunc(K.read_ptr)


@dataclass(frozen=True)
class QueryStats:
    entry_queries: int = 0
    bit_queries: int = 0
    raw_reads: int = 0
    bit_entries: int = 0
    ptr_entries: int = 0

    def __add__(self, other: "QueryStats") -> "QueryStats":
        return QueryStats(*(a + b for a, b in zip(self._tuple(), other._tuple())))

    def __sub__(self, other: "QueryStats") -> "QueryStats":
        return QueryStats(*(a - b for a, b in zip(self._tuple(), other._tuple())))

    def _tuple(self):
        return (self.entry_queries, self.bit_queries, self.raw_reads,
                self.bit_entries, self.ptr_entries)


class Read(NamedTuple):
    kind: str  # "b" or "p"
    cell: CellRef
    value: Optional[object]  # bit value, CellRef, or None for a null pointer


class QueryOracle:
    """The only read path to a matrix during an algorithm run.

    ``cached`` mode logs each entry once (decision-tree convention); ``raw``
    mode also logs repeats. Both modes keep all three counters.
    """

    def __init__(self, m: Matrix, mode: str = "cached", capacity: int = 1024):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.matrix = m
        self.mode = mode
        self._bits = m.flat_bits
        self._nxt = m.nxt
        self._log_all = mode == "raw"
        self._alloc(capacity)

    def _alloc(self, capacity):
        n = self.matrix.n
        self._seen_b = np.zeros(n, dtype=np.bool_)
        self._seen_p = np.zeros(n, dtype=np.bool_)
        self._ctr = np.zeros(4, dtype=np.int64)
        self._tk = np.empty(capacity, dtype=np.int8)
        self._ti = np.empty(capacity, dtype=np.int64)
        self._tv = np.empty(capacity, dtype=np.int64)

    @property
    def state(self) -> tuple:
        """Argument bundle consumed by the kernels."""
        return (self._bits, self._nxt, self._seen_b, self._seen_p, self._ctr,
                self._tk, self._ti, self._tv, self._log_all)

    def reserve(self, k: int) -> None:
        need = int(self._ctr[K.C_TLEN]) + int(k)
        cap = self._tk.shape[0]
        if need <= cap:
            return
        new = max(need, 2 * cap)
        used = int(self._ctr[K.C_TLEN])
        for name in ("_tk", "_ti", "_tv"):
            old = getattr(self, name)
            buf = np.empty(new, dtype=old.dtype)
            buf[:used] = old[:used]
            setattr(self, name, buf)

    # --- reads --------------------------------------------------------

    def read_bit(self, ref) -> int:
        idx = self.matrix.index(ref)
        self.reserve(1)
        return int(_read_bit(*self.state, idx))

    def read_ptr(self, ref) -> Optional[CellRef]:
        idx = self.matrix.index(ref)
        self.reserve(1)
        p = int(_read_ptr(*self.state, idx))
        return None if p < 0 else self.matrix.ref(p)

    def read_bit_index(self, idx: int) -> int:
        self.reserve(1)
        return int(_read_bit(*self.state, idx))

    def read_ptr_index(self, idx: int) -> int:
        self.reserve(1)
        return int(_read_ptr(*self.state, idx))

    def read_bits(self, idxs) -> np.ndarray:
        """Read many bit-entries, in order; same accounting as repeated read_bit."""
        return self._batch(np.asarray(idxs, dtype=np.int64), self._bits, self._seen_b,
                           K.KIND_BIT, K.C_BITS)

    def read_ptrs(self, idxs) -> np.ndarray:
        return self._batch(np.asarray(idxs, dtype=np.int64), self._nxt, self._seen_p,
                           K.KIND_PTR, K.C_PTRS)

    def read_bits_until_zero(self, idxs) -> np.ndarray:
        """Read bit-entries in order, stopping right after the first 0."""
        idxs = np.asarray(idxs, dtype=np.int64)
        zeros = np.flatnonzero(self._bits[idxs] == 0)
        if zeros.size:
            idxs = idxs[:zeros[0] + 1]
        return self.read_bits(idxs)

    def read_column_bits(self, col: int) -> np.ndarray:
        s = self.matrix.s
        return self.read_bits(np.arange(s, dtype=np.int64) * s + col)

    def _batch(self, idxs, source, seen, kind, slot):
        if idxs.size == 0:
            return source[idxs]
        vals = source[idxs]
        _, first = np.unique(idxs, return_index=True)
        first_mask = np.zeros(idxs.size, dtype=np.bool_)
        first_mask[first] = True
        fresh = first_mask & ~seen[idxs]
        seen[idxs[fresh]] = True
        self._ctr[slot] += int(fresh.sum())
        self._ctr[K.C_RAW] += idxs.size
        logged = slice(None) if self._log_all else fresh
        li, lv = idxs[logged], vals[logged]
        self.reserve(li.size)
        p = int(self._ctr[K.C_TLEN])
        self._tk[p:p + li.size] = kind
        self._ti[p:p + li.size] = li
        self._tv[p:p + li.size] = lv
        self._ctr[K.C_TLEN] = p + li.size
        return vals

    # --- bookkeeping --------------------------------------------------

    def stats(self) -> QueryStats:
        nb, npt, raw = (int(x) for x in self._ctr[:3])
        return QueryStats(entry_queries=nb + npt, bit_queries=nb + self.matrix.w * npt,
                          raw_reads=raw, bit_entries=nb, ptr_entries=npt)

    def reset(self) -> None:
        self._alloc(1024)

    def __len__(self):
        return int(self._ctr[K.C_TLEN])

    def transcript_arrays(self):
        """(kind, cell index, value) arrays of the transcript; value -1 is null."""
        t = int(self._ctr[K.C_TLEN])
        return self._tk[:t].copy(), self._ti[:t].copy(), self._tv[:t].copy()

    def transcript(self) -> list:
        m = self.matrix
        out = []
        for k, i, v in zip(*self.transcript_arrays()):
            if k == K.KIND_BIT:
                out.append(Read("b", m.ref(i), int(v)))
            else:
                out.append(Read("p", m.ref(i), None if v < 0 else m.ref(v)))
        return out

    def zero_witnesses(self) -> dict:
        """First transcript cell with bit-entry 0 for every column that has one."""
        kinds, idxs, vals = self.transcript_arrays()
        sel = idxs[(kinds == K.KIND_BIT) & (vals == 0)]
        s = self.matrix.s
        cols, first = np.unique(sel % s, return_index=True)
        return {int(c): CellRef(int(sel[f]) // s, int(c)) for c, f in zip(cols, first)}


def replay(transcript: Iterable[Read], m: Matrix) -> list:
    """Re-read each transcript entry from ``m``; equals the recorded values iff consistent."""
    out = []
    for r in transcript:
        out.append(m.bit(r.cell) if r.kind == "b" else m.ptr(r.cell))
    return out


def transcript_to_jsonl(transcript: Iterable[Read], s: int) -> str:
    """JSON lines; pointer values are linear cell indices, -1 for null."""
    lines = []
    for r in transcript:
        if r.kind == "b":
            v = int(r.value)
        else:
            v = -1 if r.value is None else r.value.row * s + r.value.col
        lines.append(json.dumps({"k": r.kind, "i": r.cell.row, "j": r.cell.col, "v": v}))
    return "".join(line + "\n" for line in lines)


def transcript_from_jsonl(text: str, s: int) -> list:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        cell = CellRef(d["i"], d["j"])
        if d["k"] == "b":
            out.append(Read("b", cell, d["v"]))
        else:
            v = d["v"]
            out.append(Read("p", cell, None if v < 0 else CellRef(v // s, v % s)))
    return out


def oracle_new(m: Matrix, mode: str = "cached") -> QueryOracle:
    return QueryOracle(m, mode)
