"""Kronecker factorization: SVD core, decomposition optimality, filtered inputs."""

import numpy as np
import pytest

from kronsaf.errors import DimensionError
from kronsaf.nkp import (
    KronFactors,
    filtered_input_left,
    filtered_input_right,
    jacobi_svd,
    kron_synthesize,
    misalignment,
    nkp_decompose,
    random_lowrank_ir,
)


def _gram_eigen_singular_values(a):
    """Independent oracle: singular values from the eigenvalues of A^T A."""
    evals = np.linalg.eigvalsh(a.T @ a)
    return np.sqrt(np.clip(evals, 0.0, None))[::-1]


def test_jacobi_svd_reconstructs():
    rng = np.random.default_rng(0)
    for shape in [(3, 3), (6, 4), (4, 6), (12, 8), (1, 5), (5, 1)]:
        a = rng.standard_normal(shape)
        res = jacobi_svd(a)
        assert np.allclose(res.reconstruct(), a, atol=1e-10)
        assert np.all(np.diff(res.values) <= 1e-12)  # descending
        k = min(shape)
        assert np.allclose(res.u.T @ res.u, np.eye(k), atol=1e-10)
        assert np.allclose(res.vt @ res.vt.T, np.eye(k), atol=1e-10)


def test_jacobi_svd_values_match_gram_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.standard_normal((rng.integers(2, 9), rng.integers(2, 9)))
        res = jacobi_svd(a)
        assert np.allclose(res.values, _gram_eigen_singular_values(a)[: res.values.size],
                           atol=1e-8)


def test_jacobi_svd_rank_deficient():
    a = np.outer([1.0, 2.0, 3.0], [4.0, 5.0])
    res = jacobi_svd(a)
    assert res.values[0] == pytest.approx(np.linalg.norm([1, 2, 3]) * np.linalg.norm([4, 5]),
                                          rel=1e-12)
    assert res.values[1] == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(res.reconstruct(), a, atol=1e-10)


def test_synthesize_matches_dense_kronecker_sum():
    # sum_q kron(short_q, long_q) flattened column-major equals the synthesized taps
    rng = np.random.default_rng(2)
    seg_len, n_seg, rank = 5, 3, 2
    factors = KronFactors(rng.standard_normal((rank, seg_len)),
                          rng.standard_normal((rank, n_seg)))
    dense = sum(np.kron(factors.short[q], factors.long[q]) for q in range(rank))
    assert np.allclose(kron_synthesize(factors), dense, atol=1e-14)


def test_decompose_identity_omega():
    # 2x2 identity reshaped: both singular values 1, rank-1 tail is 1/sqrt(2)
    m = np.eye(2).ravel(order="F")
    _, omega = nkp_decompose(m, 2, 2, 1)
    assert omega == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-12)


def test_decompose_omega_matches_gram_oracle():
    rng = np.random.default_rng(3)
    seg_len, n_seg = 6, 4
    m = rng.standard_normal(seg_len * n_seg)
    mat = m.reshape((seg_len, n_seg), order="F")
    svals = _gram_eigen_singular_values(mat)
    fro = np.linalg.norm(m)
    for rank in range(1, n_seg + 1):
        _, omega = nkp_decompose(m, seg_len, n_seg, rank)
        expected = np.sqrt(np.sum(svals[rank:] ** 2)) / fro
        assert omega == pytest.approx(expected, abs=1e-8)


def test_decompose_full_rank_is_exact():
    rng = np.random.default_rng(4)
    m = rng.standard_normal(24)
    factors, omega = nkp_decompose(m, 6, 4, 4)
    assert omega == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(kron_synthesize(factors), m, atol=1e-10)


def test_decompose_beats_random_candidates():
    # Eckart-Young: no random rank-Q candidate does better in Frobenius error
    rng = np.random.default_rng(5)
    seg_len, n_seg = 8, 5
    m = rng.standard_normal(seg_len * n_seg)
    fro = np.linalg.norm(m)
    for rank in (1, 2, 3):
        _, omega = nkp_decompose(m, seg_len, n_seg, rank)
        for _ in range(200):
            cand = KronFactors(rng.standard_normal((rank, seg_len)),
                               rng.standard_normal((rank, n_seg)))
            err = np.linalg.norm(kron_synthesize(cand) - m) / fro
            assert err >= omega - 1e-12


def test_filtered_input_left_example():
    # x=[1,2,3,4] as X=[[1,3],[2,4]], m2=[1,1] -> X @ m2 = [4,6]
    out = filtered_input_left(np.array([1.0, 2.0, 3.0, 4.0]),
                              np.array([[1.0, 1.0]]), 2, 2)
    assert np.allclose(out, [4.0, 6.0], atol=0)


def test_filtered_input_right_example():
    # m1=[1,0] -> X^T @ m1 = [1,3]
    out = filtered_input_right(np.array([1.0, 2.0, 3.0, 4.0]),
                               np.array([[1.0, 0.0]]), 2, 2)
    assert np.allclose(out, [1.0, 3.0], atol=0)


def test_filtered_inputs_match_dense_kron_operators():
    rng = np.random.default_rng(6)
    seg_len, n_seg, rank = 4, 3, 2
    x = rng.standard_normal(seg_len * n_seg)
    long_stack = rng.standard_normal((rank, seg_len))
    short_stack = rng.standard_normal((rank, n_seg))
    left = filtered_input_left(x, short_stack, seg_len, n_seg)
    right = filtered_input_right(x, long_stack, seg_len, n_seg)
    eye_l = np.eye(seg_len)
    eye_s = np.eye(n_seg)
    for q in range(rank):
        dense_left = np.kron(short_stack[q][:, None], eye_l).T @ x
        dense_right = np.kron(eye_s, long_stack[q][:, None]).T @ x
        assert np.allclose(left[q * seg_len : (q + 1) * seg_len], dense_left, atol=1e-12)
        assert np.allclose(right[q * n_seg : (q + 1) * n_seg], dense_right, atol=1e-12)


def test_bilinear_identity():
    # long^T . left(x, short) == short^T . right(x, long) == synth^T . x for Q=1
    rng = np.random.default_rng(7)
    seg_len, n_seg = 5, 4
    x = rng.standard_normal(seg_len * n_seg)
    long_stack = rng.standard_normal((1, seg_len))
    short_stack = rng.standard_normal((1, n_seg))
    a = float(long_stack[0] @ filtered_input_left(x, short_stack, seg_len, n_seg))
    b = float(short_stack[0] @ filtered_input_right(x, long_stack, seg_len, n_seg))
    c = float(kron_synthesize(KronFactors(long_stack, short_stack)) @ x)
    assert a == pytest.approx(c, abs=1e-10)
    assert b == pytest.approx(c, abs=1e-10)


def test_misalignment_basic():
    ref = np.array([3.0, 4.0])
    assert misalignment(ref, ref) == pytest.approx(0.0, abs=0)
    assert misalignment(ref, np.zeros(2)) == pytest.approx(1.0, abs=0)


def test_dimension_validation():
    with pytest.raises(DimensionError):
        nkp_decompose(np.ones(10), 3, 4, 1)  # 3*4 != 10
    with pytest.raises(DimensionError):
        filtered_input_left(np.ones(6), np.ones((1, 2)), 2, 2)


def test_random_lowrank_ir_properties():
    m = random_lowrank_ir(8, 8, 2, seed=11, weights=(1.0, 0.25))
    assert m.shape == (64,)
    assert np.linalg.norm(m) == pytest.approx(1.0, abs=1e-12)
    # exactly rank 2: the rank-2 truncation reproduces it
    _, omega2 = nkp_decompose(m, 8, 8, 2)
    assert omega2 == pytest.approx(0.0, abs=1e-10)
    # dominant first component per the requested weights
    _, omega1 = nkp_decompose(m, 8, 8, 1)
    assert omega1 == pytest.approx(0.25 / np.sqrt(1.0 + 0.25**2), rel=1e-6)
    assert np.array_equal(m, random_lowrank_ir(8, 8, 2, seed=11, weights=(1.0, 0.25)))
