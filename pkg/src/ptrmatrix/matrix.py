"""Pointer matrices, their bit encoding, and full-knowledge evaluation.

A matrix of side ``s`` has ``n = s*s`` cells. Each cell stores a bit-entry and
a ``w = ceil(log2 n)``-bit raw pointer. A raw pointer decodes to a null
pointer when it is ``>= n`` or names the cell itself; otherwise it addresses
cell ``(raw // s, raw % s)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np

from . import _kernels as K
from .errors import LengthMismatch, OutOfRange


class CellRef(NamedTuple):
    row: int
    col: int


class Cell(NamedTuple):
    bit: int
    ptr: Optional[CellRef]
    raw_ptr: int


def pointer_width(s: int) -> int:
    return max(1, math.ceil(math.log2(s * s)))


class Matrix:
    """Immutable s-by-s pointer matrix backed by two numpy arrays."""

    __slots__ = ("bits", "raw", "s", "n", "w", "nxt")

    def __init__(self, bits, raw):
        bits = np.array(bits, dtype=np.uint8)
        raw = np.array(raw, dtype=np.int64)
        if bits.ndim != 2 or bits.shape[0] != bits.shape[1]:
            raise ValueError(f"bit array must be square, got shape {bits.shape}")
        if raw.shape != bits.shape:
            raise ValueError("bit and pointer arrays differ in shape")
        s = bits.shape[0]
        if s < 2:
            raise ValueError("side length must be at least 2")
        if np.any(bits > 1):
            raise ValueError("bit-entries must be 0 or 1")
        w = pointer_width(s)
        if np.any(raw < 0) or np.any(raw >= (1 << w)):
            raise ValueError(f"raw pointers must lie in [0, 2**{w})")
        n = s * s
        flat = raw.ravel()
        own = np.arange(n, dtype=np.int64)
        nxt = np.where((flat >= n) | (flat == own), -1, flat)
        for a in (bits, raw, nxt):
            a.setflags(write=False)
        self.bits = bits
        self.raw = raw
        self.s = s
        self.n = n
        self.w = w
        self.nxt = nxt

    @classmethod
    def from_cells(cls, s: int, cells: dict, default_bit: int = 0) -> "Matrix":
        """Build from ``{(row, col): (bit, raw_ptr)}``; missing cells are null."""
        bits = np.full((s, s), default_bit, dtype=np.uint8)
        raw = np.arange(s * s, dtype=np.int64).reshape(s, s)
        for (r, c), (b, p) in cells.items():
            bits[r, c] = b
            raw[r, c] = p
        return cls(bits, raw)

    @property
    def flat_bits(self) -> np.ndarray:
        return self.bits.ravel()

    def check(self, ref) -> CellRef:
        r, c = int(ref[0]), int(ref[1])
        if not (0 <= r < self.s and 0 <= c < self.s):
            raise OutOfRange(f"cell {(r, c)} outside a {self.s}x{self.s} matrix")
        return CellRef(r, c)

    def index(self, ref) -> int:
        r, c = self.check(ref)
        return r * self.s + c

    def ref(self, idx: int) -> CellRef:
        return CellRef(int(idx) // self.s, int(idx) % self.s)

    def cell(self, ref) -> Cell:
        r, c = self.check(ref)
        idx = r * self.s + c
        p = int(self.nxt[idx])
        return Cell(int(self.bits[r, c]), None if p < 0 else self.ref(p), int(self.raw[r, c]))

    def bit(self, ref) -> int:
        r, c = self.check(ref)
        return int(self.bits[r, c])

    def ptr(self, ref) -> Optional[CellRef]:
        p = int(self.nxt[self.index(ref)])
        return None if p < 0 else self.ref(p)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return (self.s == other.s and np.array_equal(self.bits, other.bits)
                and np.array_equal(self.raw, other.raw))

    def __hash__(self):
        return hash((self.s, self.bits.tobytes(), self.raw.tobytes()))

    def __repr__(self):
        return f"Matrix(s={self.s})"


# --- encoding -------------------------------------------------------------

def encode(m: Matrix) -> str:
    """Row-major bitstring: per cell the bit-entry, then w pointer bits MSB first."""
    w = m.w
    shifts = np.arange(w - 1, -1, -1, dtype=np.int64)
    ptr_bits = (m.raw.ravel()[:, None] >> shifts) & 1
    table = np.concatenate([m.bits.ravel()[:, None].astype(np.int64), ptr_bits], axis=1)
    return (table.ravel().astype(np.uint8) + ord("0")).tobytes().decode("ascii")


def decode(bits: str, s: int) -> Matrix:
    if s < 2:
        raise ValueError("side length must be at least 2")
    n, w = s * s, pointer_width(s)
    if len(bits) != n * (1 + w):
        raise LengthMismatch(f"expected {n * (1 + w)} bits for s={s}, got {len(bits)}")
    arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    if np.any(arr > 1):
        raise ValueError("bitstring may contain only '0' and '1'")
    table = arr.reshape(n, 1 + w).astype(np.int64)
    weights = 1 << np.arange(w - 1, -1, -1, dtype=np.int64)
    raw = table[:, 1:] @ weights
    return Matrix(table[:, 0].reshape(s, s), raw.reshape(s, s))


# --- reference evaluation -------------------------------------------------

@dataclass(frozen=True)
class Chain:
    cells: tuple

    def __len__(self):
        return len(self.cells)

    @property
    def columns(self) -> list:
        return [c.col for c in self.cells]


def is_valid_chain(m: Matrix, start) -> Optional[Chain]:
    idx = m.index(start)
    if not K.chain_is_valid(m.flat_bits, m.nxt, m.s, idx):
        return None
    cells = [idx]
    for _ in range(m.s - 1):
        cells.append(int(m.nxt[cells[-1]]))
    return Chain(tuple(m.ref(i) for i in cells))


def first_pointer_row(m: Matrix, col: int) -> Optional[int]:
    ptrs = m.nxt.reshape(m.s, m.s)[:, col]
    hits = np.flatnonzero(ptrs >= 0)
    return int(hits[0]) if hits.size else None


def all_one_columns(m: Matrix) -> list:
    return [int(c) for c in np.flatnonzero(m.bits.all(axis=0))]


def evaluate_reference(m: Matrix) -> int:
    return int(K.evaluate(m.flat_bits, m.nxt, m.s))


def principal_chain(m: Matrix) -> Optional[Chain]:
    cols = all_one_columns(m)
    if len(cols) != 1:
        return None
    row = first_pointer_row(m, cols[0])
    if row is None:
        return None
    return is_valid_chain(m, (row, cols[0]))


def span_full(m: Matrix, c: int) -> frozenset:
    if not 0 <= c < m.s:
        raise OutOfRange(f"column {c} outside [0, {m.s})")
    out = np.zeros(m.s, dtype=np.bool_)
    K.span_mask(m.flat_bits, m.nxt, m.s, int(c), out)
    return frozenset(int(x) for x in np.flatnonzero(out))


# --- certificates ---------------------------------------------------------

@dataclass(frozen=True)
class OneCert:
    column: int
    chain: tuple

    kind = "one"


@dataclass(frozen=True)
class ZeroEveryColumn:
    witnesses: dict = field(hash=False)

    kind = "zero_every_column"


@dataclass(frozen=True)
class ZeroNonSpanningPair:
    col_a: int
    col_b: int
    span_a: frozenset
    span_b: frozenset

    kind = "zero_pair"


@dataclass(frozen=True)
class ZeroBrokenColumn:
    column: int
    reason: str

    kind = "zero_broken_column"


Certificate = Union[OneCert, ZeroEveryColumn, ZeroNonSpanningPair, ZeroBrokenColumn]

BROKEN_REASONS = ("all_null", "short_chain", "repeated_column", "nonzero_bit", "missing_terminator")


def certificate_value(cert: Certificate) -> int:
    return 1 if isinstance(cert, OneCert) else 0


def _column_has_zero(m: Matrix, col: int) -> bool:
    return bool((m.bits[:, col] == 0).any())


def verify_certificate(m: Matrix, cert: Certificate) -> bool:
    """Check a witness against full knowledge of ``m``.

    Raises OutOfRange when the certificate names cells or columns outside m.
    """
    def col_ok(c):
        if not 0 <= c < m.s:
            raise OutOfRange(f"column {c} outside [0, {m.s})")
        return int(c)

    if isinstance(cert, OneCert):
        col = col_ok(cert.column)
        chain = [m.check(r) for r in cert.chain]
        if not chain or chain[0].col != col or not m.bits[:, col].all():
            return False
        head = chain[0].row
        if any(m.nxt[r * m.s + col] >= 0 for r in range(head)):
            return False
        found = is_valid_chain(m, chain[0])
        return found is not None and list(found.cells) == chain

    if isinstance(cert, ZeroEveryColumn):
        if set(cert.witnesses) != set(range(m.s)):
            for c in cert.witnesses:
                col_ok(c)
            return False
        for c, ref in cert.witnesses.items():
            r = m.check(ref)
            if r.col != c or m.bits[r.row, r.col] != 0:
                return False
        return True

    if isinstance(cert, ZeroNonSpanningPair):
        a, b = col_ok(cert.col_a), col_ok(cert.col_b)
        if a == b or not (_column_has_zero(m, a) and _column_has_zero(m, b)):
            return False
        sa, sb = span_full(m, a), span_full(m, b)
        if frozenset(cert.span_a) != sa or frozenset(cert.span_b) != sb:
            return False
        return b not in sa and a not in sb

    if isinstance(cert, ZeroBrokenColumn):
        col = col_ok(cert.column)
        if not m.bits[:, col].all():
            return False
        row = first_pointer_row(m, col)
        return row is None or is_valid_chain(m, (row, col)) is None

    raise TypeError(f"not a certificate: {cert!r}")


def certificate_to_json(cert: Optional[Certificate]):
    if cert is None:
        return None
    if isinstance(cert, OneCert):
        return {"kind": cert.kind, "column": cert.column,
                "chain": [[r.row, r.col] for r in cert.chain]}
    if isinstance(cert, ZeroEveryColumn):
        return {"kind": cert.kind,
                "witnesses": {str(c): [r.row, r.col] for c, r in sorted(cert.witnesses.items())}}
    if isinstance(cert, ZeroNonSpanningPair):
        return {"kind": cert.kind, "col_a": cert.col_a, "col_b": cert.col_b,
                "span_a": sorted(cert.span_a), "span_b": sorted(cert.span_b)}
    return {"kind": cert.kind, "column": cert.column, "reason": cert.reason}


def certificate_from_json(obj) -> Optional[Certificate]:
    if obj is None:
        return None
    kind = obj["kind"]
    if kind == OneCert.kind:
        return OneCert(obj["column"], tuple(CellRef(*x) for x in obj["chain"]))
    if kind == ZeroEveryColumn.kind:
        return ZeroEveryColumn({int(c): CellRef(*x) for c, x in obj["witnesses"].items()})
    if kind == ZeroNonSpanningPair.kind:
        return ZeroNonSpanningPair(obj["col_a"], obj["col_b"],
                                   frozenset(obj["span_a"]), frozenset(obj["span_b"]))
    if kind == ZeroBrokenColumn.kind:
        return ZeroBrokenColumn(obj["column"], obj["reason"])
    raise ValueError(f"unknown certificate kind {kind!r}")


# --- files ----------------------------------------------------------------

def to_json(m: Matrix) -> dict:
    return {"s": m.s, "cells": [[{"b": int(m.bits[r, c]), "p": int(m.raw[r, c])}
                                 for c in range(m.s)] for r in range(m.s)]}


def from_json(obj: dict) -> Matrix:
    s = int(obj["s"])
    rows = obj["cells"]
    if len(rows) != s or any(len(row) != s for row in rows):
        raise ValueError(f"cells must be {s}x{s}")
    bits = [[cell["b"] for cell in row] for row in rows]
    raw = [[cell["p"] for cell in row] for row in rows]
    return Matrix(bits, raw)


def dumps(m: Matrix, fmt: str = "bits") -> str:
    if fmt == "bits":
        return f"s={m.s}\n{encode(m)}\n"
    if fmt == "json":
        return json.dumps(to_json(m), separators=(",", ":")) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def loads(text: str) -> Matrix:
    text = text.strip()
    if text.startswith("{"):
        return from_json(json.loads(text))
    header, _, body = text.partition("\n")
    if not header.startswith("s="):
        raise ValueError("bitstring file must start with an 's=<int>' header")
    return decode("".join(body.split()), int(header[2:]))


def save(m: Matrix, path, fmt: str = "bits") -> None:
    Path(path).write_text(dumps(m, fmt))


def load(path) -> Matrix:
    return loads(Path(path).read_text())
