"""Seeded instance families with a known function value.

1-inputs carry one valid chain through a random column order; ``one_decoy``
adds cycles of 0-cells in the first few chain columns, which a walk can only
leave by running out of budget. 0-input families match the three kinds of
0-certificate: zeros everywhere, mutually non-spanning columns, and a single
all-1 column whose chain is broken.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .matrix import Matrix, evaluate_reference, pointer_width

ONE_FAMILIES = ("one_clean", "one_decoy")
ZERO_FAMILIES = ("zero_dense", "zero_sparse_nonspanning", "zero_broken_column")
FAMILIES = ONE_FAMILIES + ZERO_FAMILIES + ("random",)

DEFAULTS = {
    "one_clean": {"zero_density": 0.5},
    "one_decoy": {"zero_density": 0.0, "decoy_count": None, "decoy_length": 4},
    "zero_dense": {"zero_density": 0.5, "p_null_ptr": 0.5},
    "zero_sparse_nonspanning": {"clique_size": 4, "p_null_ptr": 0.25},
    "zero_broken_column": {"zero_density": 0.5, "violation": None},
    "random": {"p_zero_bit": 0.5, "p_null_ptr": 0.5},
}

VIOLATIONS = ("short_chain", "repeated_column", "nonzero_bit", "missing_terminator")


@dataclass(frozen=True)
class GenSpec:
    s: int
    family: str
    params: dict = field(default_factory=dict, hash=False)
    rng_seed: int = 0

    def __post_init__(self):
        if self.s < 2:
            raise ValueError("side length must be at least 2")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        unknown = set(self.params) - set(DEFAULTS[self.family])
        if unknown:
            raise ValueError(f"unknown parameters for {self.family}: {sorted(unknown)}")
        for k in ("zero_density", "p_zero_bit", "p_null_ptr"):
            v = self.option(k)
            if v is not None and not 0 <= v <= 1:
                raise ValueError(f"{k} must lie in [0, 1]")
        if self.family == "zero_dense" and self.option("zero_density") <= 0:
            raise ValueError("zero_dense needs zero_density in (0, 1]")

    def option(self, key):
        return self.params.get(key, DEFAULTS[self.family].get(key))

    @property
    def expected_value(self):
        if self.family in ONE_FAMILIES:
            return 1
        if self.family in ZERO_FAMILIES:
            return 0
        return None

    def to_json(self) -> dict:
        return {"s": self.s, "family": self.family, "params": dict(self.params),
                "rng_seed": self.rng_seed}

    @classmethod
    def from_json(cls, obj) -> "GenSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["s"]), obj["family"], dict(obj.get("params", {})),
                   int(obj.get("rng_seed", 0)))


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _null_raw(s: int) -> np.ndarray:
    return np.arange(s * s, dtype=np.int64).reshape(s, s)


def _random_targets(rng, s, shape):
    """Uniform pointers to cells other than the source (own index excluded)."""
    n = s * s
    own = np.arange(n, dtype=np.int64).reshape(s, s)
    t = rng.integers(0, n - 1, size=shape)
    return np.where(t >= own, t + 1, t)


def _lay_chain(rng, s, bits, raw, special, head_row, order, rows):
    """Write a chain head -> (rows[k], order[k]) ...; bits 0 along it, last pointer null."""
    cells = [(head_row, special)] + list(zip(rows, order))
    for (r, c) in cells[1:]:
        bits[r, c] = 0
    for (r, c), (r2, c2) in zip(cells, cells[1:]):
        raw[r, c] = r2 * s + c2
    r, c = cells[-1]
    raw[r, c] = r * s + c
    return cells


def _no_second_all_one(rng, bits, special, protected=()):
    """Flip one random unprotected bit to 0 in every all-1 column but ``special``."""
    s = bits.shape[0]
    for c in np.flatnonzero(bits.all(axis=0)):
        if c == special:
            continue
        rows = [r for r in range(s) if (r, c) not in protected]
        bits[rows[int(rng.integers(len(rows)))], c] = 0


def gen_one_input(spec: GenSpec) -> Matrix:
    if spec.family not in ONE_FAMILIES:
        raise ValueError(f"{spec.family} is not a 1-input family")
    s, rng = spec.s, _rng(spec.rng_seed)
    density = spec.option("zero_density")
    bits = (rng.random((s, s)) >= density).astype(np.uint8)
    raw = _null_raw(s)
    special = int(rng.integers(s))
    head = int(rng.integers(s))
    bits[:, special] = 1
    order = rng.permutation(np.delete(np.arange(s), special))
    rows = rng.integers(0, s, size=s - 1)
    cells = _lay_chain(rng, s, bits, raw, special, head, order, rows)
    # every other cell of the special column stays null, so the head is its first pointer
    if spec.family == "one_decoy":
        _add_decoys(rng, spec, bits, raw, cells)
    m = Matrix(bits, raw)
    assert evaluate_reference(m) == 1, "generator produced a 0-input"
    return m


def _add_decoys(rng, spec, bits, raw, cells):
    s = spec.s
    length = max(2, int(spec.option("decoy_length")))
    count = spec.option("decoy_count")
    count = s if count is None else int(count)
    if count <= 0 or s < 3:
        return
    width = min(s - 1, max(2, math.ceil(count * length / (s - 1))))
    region = [c for (_, c) in cells[1:1 + width]]
    used = {(r, c) for (r, c) in cells}
    free = [(r, c) for c in region for r in range(s) if (r, c) not in used]
    rng.shuffle(free)
    count = min(count, len(free) // length)
    for k in range(count):
        ring = free[k * length:(k + 1) * length]
        for (r, c), (r2, c2) in zip(ring, ring[1:] + ring[:1]):
            bits[r, c] = 0
            raw[r, c] = r2 * s + c2


def gen_zero_input(spec: GenSpec) -> Matrix:
    s, rng = spec.s, _rng(spec.rng_seed)
    if spec.family == "zero_dense":
        k = math.ceil(spec.option("zero_density") * s)
        bits = np.ones((s, s), dtype=np.uint8)
        for c in range(s):
            bits[rng.permutation(s)[:k], c] = 0
        raw = np.where(rng.random((s, s)) < spec.option("p_null_ptr"), _null_raw(s),
                       _random_targets(rng, s, (s, s)))
    elif spec.family == "zero_sparse_nonspanning":
        bits, raw = _sparse_cliques(rng, spec)
    elif spec.family == "zero_broken_column":
        bits, raw = _broken_column(rng, spec)
    else:
        raise ValueError(f"{spec.family} is not a 0-input family")
    m = Matrix(bits, raw)
    assert evaluate_reference(m) == 0, "generator produced a 1-input"
    return m


def _sparse_cliques(rng, spec):
    s = spec.s
    zeros_per_col = max(1, int(math.sqrt(s) / 2))
    size = max(1, min(int(spec.option("clique_size")), s // 2))
    bits = np.ones((s, s), dtype=np.uint8)
    zero_rows = [rng.permutation(s)[:zeros_per_col] for _ in range(s)]
    for c in range(s):
        bits[zero_rows[c], c] = 0
    # 1-cells point anywhere; 0-cells stay inside their column's clique
    raw = _random_targets(rng, s, (s, s))
    perm = rng.permutation(s)
    groups = [perm[i:i + size] for i in range(0, s, size)]
    p_null = spec.option("p_null_ptr")
    for g in groups:
        for c in g:
            for r in zero_rows[c]:
                others = [x for x in g if x != c]
                if not others or rng.random() < p_null:
                    raw[r, c] = r * s + c
                else:
                    c2 = int(others[rng.integers(len(others))])
                    r2 = int(zero_rows[c2][rng.integers(zeros_per_col)])
                    raw[r, c] = r2 * s + c2
    return bits, raw


def _broken_column(rng, spec):
    s = spec.s
    density = spec.option("zero_density")
    violation = spec.option("violation") or VIOLATIONS[int(rng.integers(len(VIOLATIONS)))]
    if violation not in VIOLATIONS:
        raise ValueError(f"violation must be one of {VIOLATIONS}")
    if violation == "repeated_column" and s < 3:
        violation = "short_chain"
    bits = (rng.random((s, s)) >= density).astype(np.uint8)
    raw = _null_raw(s)
    special = int(rng.integers(s))
    head = int(rng.integers(s))
    bits[:, special] = 1
    order = list(rng.permutation(np.delete(np.arange(s), special)))
    rows = list(rng.integers(0, s, size=s - 1))
    if violation == "repeated_column":
        # revisit an earlier column at a different row; the overwritten column goes missing
        k = int(rng.integers(1, s - 1))
        j = int(rng.integers(k))
        order[k] = order[j]
        rows[k] = (rows[j] + 1 + int(rng.integers(s - 1))) % s
    cells = _lay_chain(rng, s, bits, raw, special, head, order, rows)
    if violation == "short_chain":
        # cut after the head when possible; at s=2 only the head itself can be cut
        k = int(rng.integers(1, s - 1)) if s > 2 else 0
        r, c = cells[k]
        raw[r, c] = r * s + c
    elif violation == "nonzero_bit":
        k = int(rng.integers(1, s))
        r, c = cells[k]
        bits[r, c] = 1
    elif violation == "missing_terminator":
        r, c = cells[-1]
        raw[r, c] = int(_random_targets(rng, s, (s, s))[r, c])
    _no_second_all_one(rng, bits, special, protected=set(cells))
    return bits, raw


def gen_random(s: int, p_zero_bit: float = 0.5, p_null_ptr: float = 0.5, seed: int = 0) -> Matrix:
    """I.i.d. cells; null pointers use both encodings (self, and >= n when available)."""
    if not (0 <= p_zero_bit <= 1 and 0 <= p_null_ptr <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = _rng(seed)
    n, w = s * s, pointer_width(s)
    bits = (rng.random((s, s)) >= p_zero_bit).astype(np.uint8)
    null = _null_raw(s)
    if (1 << w) > n:
        high = rng.integers(n, 1 << w, size=(s, s))
        null = np.where(rng.random((s, s)) < 0.5, null, high)
    raw = np.where(rng.random((s, s)) < p_null_ptr, null, _random_targets(rng, s, (s, s)))
    return Matrix(bits, raw)


def generate(spec: GenSpec) -> Matrix:
    if spec.family in ONE_FAMILIES:
        return gen_one_input(spec)
    if spec.family in ZERO_FAMILIES:
        return gen_zero_input(spec)
    return gen_random(spec.s, spec.option("p_zero_bit"), spec.option("p_null_ptr"),
                      spec.rng_seed)
