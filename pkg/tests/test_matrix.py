import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import all_zero, make_m2
from ptrmatrix import matrix as mx
from ptrmatrix.errors import LengthMismatch, OutOfRange
from ptrmatrix.generators import gen_random
from ptrmatrix.matrix import (CellRef, Matrix, OneCert, ZeroBrokenColumn, ZeroEveryColumn,
                              ZeroNonSpanningPair, decode, encode, evaluate_reference,
                              is_valid_chain, span_full, verify_certificate)


def test_encode_m2(m2):
    assert encode(m2) == "101001110011"


def test_decode_m2(m2):
    assert decode("101001110011", 2) == m2


def test_decode_wrong_length():
    with pytest.raises(LengthMismatch):
        decode("1" * 11, 2)


def test_all_zero_self_pointers_decode_null():
    m = all_zero(2)
    text = encode(m)
    assert [text[i] for i in (0, 3, 6, 9)] == ["0"] * 4
    back = decode(text, 2)
    assert all(back.ptr((r, c)) is None for r in range(2) for c in range(2))


def test_last_cell_self_pointer_is_null():
    m = Matrix([[0, 0], [0, 0]], [[0, 1], [2, 3]])
    assert m.ptr((1, 1)) is None
    assert m.cell((1, 1)) == mx.Cell(0, None, 3)


def test_high_raw_pointer_is_null():
    # s=3: n=9, w=4, so raw values 9..15 encode null
    bits = np.zeros((3, 3), dtype=np.uint8)
    raw = np.arange(9).reshape(3, 3)
    raw[0, 0] = 15
    raw[0, 1] = 4
    m = Matrix(bits, raw)
    assert m.ptr((0, 0)) is None
    assert m.ptr((0, 1)) == CellRef(1, 1)


@pytest.mark.parametrize("s", [2, 4, 10])
def test_roundtrip_random(s):
    for seed in range(1000 if s == 2 else 200):
        m = gen_random(s, 0.5, 0.3, seed)
        assert decode(encode(m), s) == m


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 32))
def test_file_formats_roundtrip(s, seed):
    m = gen_random(s, 0.4, 0.4, seed)
    for fmt in ("bits", "json"):
        assert mx.loads(mx.dumps(m, fmt)) == m


def test_evaluate_examples(m2):
    assert evaluate_reference(m2) == 1
    assert evaluate_reference(all_zero(3)) == 0
    two_full = Matrix([[1, 1], [1, 1]], [[1, 1], [2, 3]])
    assert evaluate_reference(two_full) == 0


def test_is_valid_chain_examples(m2):
    ch = is_valid_chain(m2, (0, 0))
    assert ch is not None and list(ch.cells) == [CellRef(0, 0), CellRef(0, 1)]
    assert is_valid_chain(m2, (0, 1)) is None


def test_chain_revisiting_a_column_is_invalid():
    # s=3: head (0,0) -> (0,1) -> (1,1) -> null; column 2 never reached, column 1 twice
    cells = {(0, 0): (1, 1), (1, 0): (1, 3), (2, 0): (1, 6),
             (0, 1): (0, 4), (1, 1): (0, 4)}
    m = Matrix.from_cells(3, cells)
    assert is_valid_chain(m, (0, 0)) is None
    assert evaluate_reference(m) == 0


def test_span_examples(m2):
    assert span_full(m2, 1) == {1}
    assert span_full(m2, 0) == {0}
    # s=3 cycle: (0,0) -> (0,2) -> (0,0)
    m = Matrix.from_cells(3, {(0, 0): (0, 2), (0, 2): (0, 0)}, default_bit=1)
    assert span_full(m, 0) == {0, 2}
    assert span_full(m, 1) == {1}


def _span_by_paths(m, c):
    """Enumerate simple paths of 0-cells from each 0-cell of column c."""
    s = m.s
    out = {c}
    for r in range(s):
        if m.bit((r, c)) != 0:
            continue
        stack = [((r, c), frozenset([(r, c)]))]
        while stack:
            cell, path = stack.pop()
            out.add(cell[1])
            p = m.ptr(cell)
            if p is None or m.bit(p) != 0 or tuple(p) in path:
                continue
            stack.append((tuple(p), path | {tuple(p)}))
    return out


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2 ** 32), st.floats(0.2, 0.9))
def test_span_matches_path_enumeration(s, seed, pz):
    m = gen_random(s, pz, 0.3, seed)
    for c in range(s):
        assert span_full(m, c) == _span_by_paths(m, c)


def test_verify_certificate_examples(m2):
    assert verify_certificate(m2, OneCert(0, (CellRef(0, 0), CellRef(0, 1))))
    z = all_zero(2)
    assert verify_certificate(z, ZeroEveryColumn({0: CellRef(0, 0), 1: CellRef(0, 1)}))
    assert not verify_certificate(m2, OneCert(1, (CellRef(0, 1), CellRef(0, 0))))


def test_verify_certificate_out_of_range(m2):
    with pytest.raises(OutOfRange):
        verify_certificate(m2, OneCert(0, (CellRef(0, 0), CellRef(5, 1))))
    with pytest.raises(OutOfRange):
        verify_certificate(m2, ZeroBrokenColumn(7, "all_null"))


def test_one_cert_rejects_pointer_above_head():
    # column 0 all-1, row 0 points elsewhere first, so the chain from row 1 is not the one F uses
    m = Matrix([[1, 0], [1, 0]], [[3, 1], [1, 3]])
    assert not verify_certificate(m, OneCert(0, (CellRef(1, 0), CellRef(0, 1))))


def test_pair_and_broken_certificates():
    z = all_zero(2)
    assert verify_certificate(z, ZeroNonSpanningPair(0, 1, frozenset({0}), frozenset({1})))
    assert not verify_certificate(z, ZeroNonSpanningPair(0, 0, frozenset({0}), frozenset({0})))
    full = Matrix([[1, 0], [1, 0]], [[0, 1], [2, 3]])
    assert verify_certificate(full, ZeroBrokenColumn(0, "all_null"))
    assert not verify_certificate(make_m2(), ZeroBrokenColumn(0, "all_null"))


def test_certificate_json_roundtrip(m2):
    certs = [OneCert(0, (CellRef(0, 0), CellRef(0, 1))),
             ZeroEveryColumn({0: CellRef(1, 0), 1: CellRef(0, 1)}),
             ZeroNonSpanningPair(0, 1, frozenset({0}), frozenset({1})),
             ZeroBrokenColumn(1, "short_chain"), None]
    for c in certs:
        assert mx.certificate_from_json(mx.certificate_to_json(c)) == c


def test_one_cert_implies_one_exhaustive_s2():
    # every OneCert that verifies sits on a 1-input
    for code in range(1 << 12):
        m = decode(format(code, "012b"), 2)
        for col in range(2):
            for row in range(2):
                ch = is_valid_chain(m, (row, col))
                if ch is None:
                    continue
                if verify_certificate(m, OneCert(col, ch.cells)):
                    assert evaluate_reference(m) == 1


@pytest.mark.parametrize("s", [4, 10])
def test_one_cert_implies_one_random(s):
    from ptrmatrix.generators import GenSpec, generate
    for seed in range(200):
        fam = ("one_clean", "zero_broken_column", "random")[seed % 3]
        m = generate(GenSpec(s, fam, {}, seed))
        for col in mx.all_one_columns(m):
            for row in range(s):
                ch = is_valid_chain(m, (row, col))
                if ch is not None and verify_certificate(m, OneCert(col, ch.cells)):
                    assert evaluate_reference(m) == 1


def test_one_input_has_unique_all_one_column():
    from ptrmatrix.generators import GenSpec, generate
    for seed in range(100):
        m = generate(GenSpec(8, "random", {"p_zero_bit": 0.1, "p_null_ptr": 0.2}, seed))
        if evaluate_reference(m):
            assert len(mx.all_one_columns(m)) == 1


def test_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        Matrix([[1]], [[0]])
    with pytest.raises(ValueError):
        Matrix([[1, 0], [1, 0]], [[16, 0], [0, 0]])
    with pytest.raises(ValueError):
        Matrix([[2, 0], [1, 0]], [[0, 0], [0, 0]])
