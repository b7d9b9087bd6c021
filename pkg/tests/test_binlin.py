import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gf2_matmul, naive_matvec, selection_diag
from tpstcodes.binlin import (
    BitMatrix,
    BitVector,
    bits_to_hex,
    build_selection_matrix,
    hex_to_bits,
    hstack,
    mat_vec_mul,
    sample_structured_matrix,
    vstack,
)


def bitvecs(n):
    return st.lists(st.integers(0, 1), min_size=n, max_size=n).map(BitVector)


def test_identity_matvec():
    rng = np.random.default_rng(1)
    for n in (1, 5, 64, 65, 130):
        v = BitVector(rng.integers(0, 2, n))
        assert mat_vec_mul(v, BitMatrix.identity(n)) == v


def test_swap_matvec():
    swap = BitMatrix([[0, 1], [1, 0]])
    assert mat_vec_mul(BitVector([1, 0]), swap) == BitVector([0, 1])


def test_matvec_matches_naive_oracle():
    rng = np.random.default_rng(2)
    for _ in range(20):
        v = rng.integers(0, 2, 64)
        m = rng.integers(0, 2, (64, 64))
        got = mat_vec_mul(BitVector(v), BitMatrix(m)).to_bits()
        assert np.array_equal(got, naive_matvec(v, m))


def test_matvec_dimension_mismatch_reports_sizes():
    with pytest.raises(ValueError, match="vector length 3 vs matrix 4x2"):
        mat_vec_mul(BitVector([1, 0, 1]), BitMatrix.zeros(4, 2))


def test_matmul_matches_dense():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 2, (7, 70))
    b = rng.integers(0, 2, (70, 129))
    assert np.array_equal((BitMatrix(a) @ BitMatrix(b)).to_bits(), gf2_matmul(a, b))
    with pytest.raises(ValueError):
        BitMatrix(a) @ BitMatrix(a)


def test_xor_involution_and_weight():
    v = BitVector([1, 0, 1, 1, 0])
    assert (v + v).weight() == 0
    assert v.weight() == 3
    assert len(BitVector()) == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 90).flatmap(lambda n: st.tuples(bitvecs(n), bitvecs(n), st.integers(0, 2**32 - 1))))
def test_xor_linearity(case):
    a, b, seed = case
    n = len(a)
    m = BitMatrix(np.random.default_rng(seed).integers(0, 2, (n, 33)))
    assert mat_vec_mul(a + b, m) == mat_vec_mul(a, m) + mat_vec_mul(b, m)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_associativity(r, c, d, seed):
    rng = np.random.default_rng(seed)
    v = BitVector(rng.integers(0, 2, r))
    m = BitMatrix(rng.integers(0, 2, (r, c)))
    nn = BitMatrix(rng.integers(0, 2, (c, d)))
    assert mat_vec_mul(mat_vec_mul(v, m), nn) == mat_vec_mul(v, m @ nn)


def test_transpose_and_stacking():
    rng = np.random.default_rng(4)
    a = rng.integers(0, 2, (5, 67))
    assert np.array_equal(BitMatrix(a).T.to_bits(), a.T)
    b = rng.integers(0, 2, (5, 3))
    assert np.array_equal(hstack(BitMatrix(a), BitMatrix(b)).to_bits(), np.hstack([a, b]))
    assert np.array_equal(vstack(BitMatrix(a), BitMatrix(a)).to_bits(), np.vstack([a, a]))


def test_rank_and_nullspace():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = rng.integers(0, 2, (12, 20))
        a[5] = a[0] ^ a[1]
        m = BitMatrix(a)
        h = m.nullspace()
        assert h.rows == 20 - m.rank()
        assert (m @ h.T).is_zero()
        assert h.rank() == h.rows
    assert BitMatrix.identity(9).rank() == 9
    assert BitMatrix.identity(4).nullspace().rows == 0


def test_selection_examples():
    assert build_selection_matrix(64, 1.0).diag.weight() == 64
    assert build_selection_matrix(64, 0.0).diag.weight() == 0
    assert build_selection_matrix(4, 0.5).diag.to_bits().tolist() == [0, 1, 0, 1]
    assert build_selection_matrix(4, 0.5).as_matrix() == BitMatrix(np.diag([0, 1, 0, 1]))


def test_selection_rejects_bad_alpha():
    for bad in (-0.01, 1.3):
        with pytest.raises(ValueError, match="alpha"):
            build_selection_matrix(8, bad)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4096), st.integers(0, 100))
def test_selection_count_is_floor(n, pct):
    alpha = pct / 100
    s = build_selection_matrix(n, alpha)
    assert s.diag.weight() == (n * pct) // 100
    assert np.array_equal(s.diag.to_bits(), selection_diag(n, alpha))


def test_permutation_properties():
    a = sample_structured_matrix(8, "permutation", 7)
    assert a == sample_structured_matrix(8, "permutation", 7)
    for seed in range(5):
        p = sample_structured_matrix(33, "permutation", seed).to_bits()
        assert (p.sum(0) == 1).all() and (p.sum(1) == 1).all()
        pm = BitMatrix(p)
        assert pm @ pm.T == BitMatrix.identity(33)


def test_dense_random_density():
    d = sample_structured_matrix(64, "dense-random", 11).to_bits()
    assert 0.4 <= d.mean() <= 0.6
    assert sample_structured_matrix(64, "dense-random", 11) == BitMatrix(d)
    with pytest.raises(ValueError):
        sample_structured_matrix(4, "sparse", 0)


def test_hex_row_format():
    bits = np.array([1, 0, 1, 1, 0, 1], np.uint8)
    assert bits_to_hex(bits) == "b4"
    assert np.array_equal(hex_to_bits("b4", 6), bits)
    m = BitMatrix(np.random.default_rng(6).integers(0, 2, (9, 13)))
    assert BitMatrix.from_hex_rows(m.to_hex_rows(), 13) == m
    with pytest.raises(ValueError):
        hex_to_bits("b", 6)
    with pytest.raises(ValueError):
        hex_to_bits("zz", 6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=0, max_size=200))
def test_hex_round_trip(bits):
    v = BitVector(bits)
    assert BitVector.from_hex(v.to_hex(), len(v)) == v
    assert list(v) == bits
