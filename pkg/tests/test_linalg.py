"""Norms and symmetric eigendecomposition against brute-force oracles."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

import oracles
from factorcov.linalg import (
    banded_matrix,
    eigen_reconstruct,
    frobenius_norm,
    max_norm,
    operator_norm,
    reflect_upper,
    sym_eigen,
)


def random_symmetric(p, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return reflect_upper(rng.standard_normal((p, p)) * scale)


class TestNorms:
    def test_max_norm_zero_matrix(self):
        assert max_norm(np.zeros((3, 3))) == 0.0

    def test_max_norm_definition_readoff(self):
        assert max_norm(np.array([[1.0, -3.0], [-3.0, 2.0]])) == 3.0

    def test_max_norm_matches_double_loop(self):
        a = random_symmetric(20, seed=1)
        assert max_norm(a) == oracles.max_norm_loop(a)

    def test_max_norm_rejects_empty(self):
        with pytest.raises(ValueError):
            max_norm(np.zeros((0, 0)))

    def test_frobenius_zero(self):
        assert frobenius_norm(np.zeros((4, 4))) == 0.0

    def test_frobenius_identity(self):
        assert frobenius_norm(np.eye(4)) == 2.0

    def test_frobenius_matches_double_loop(self):
        a = np.random.default_rng(2).standard_normal((10, 10))
        assert_allclose(frobenius_norm(a), oracles.frobenius_loop(a), rtol=1e-13)

    def test_frobenius_rejects_non_finite(self):
        a = np.eye(3)
        a[0, 1] = np.nan
        with pytest.raises(ValueError):
            frobenius_norm(a)

    def test_operator_norm_identity(self):
        assert_allclose(operator_norm(np.eye(5)), 1.0, atol=1e-12)

    def test_operator_norm_diagonal(self):
        assert_allclose(operator_norm(np.diag([3.0, 1.0, 0.5])), 3.0, atol=1e-12)

    def test_operator_norm_matches_power_iteration(self):
        a = random_symmetric(15, seed=3)
        assert_allclose(operator_norm(a), oracles.power_iteration_norm(a), rtol=1e-8)

    def test_norm_inequalities(self):
        for seed in range(5):
            a = random_symmetric(12, seed=seed)
            p = a.shape[0]
            op, fro, mx = operator_norm(a), frobenius_norm(a), max_norm(a)
            assert op <= fro + 1e-10
            assert fro <= np.sqrt(p) * op + 1e-10
            assert mx <= op + 1e-10


class TestSymEigen:
    def test_diagonal_matrix(self):
        decomp = sym_eigen(np.diag([5.0, 2.0, 1.0]))
        assert_allclose(decomp.values, [5.0, 2.0, 1.0], atol=1e-12)
        # signed permutation of the identity
        assert_allclose(np.abs(decomp.vectors), np.eye(3), atol=1e-12)

    def test_two_by_two_hand_case(self):
        # characteristic polynomial of [[2,1],[1,2]]: roots 3 and 1
        decomp = sym_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert_allclose(decomp.values, [3.0, 1.0], atol=1e-12)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        assert_allclose(decomp.vectors[:, 0], [inv_sqrt2, inv_sqrt2], atol=1e-12)
        # sign convention: largest-|entry| coordinate positive, ties -> first
        assert_allclose(np.abs(decomp.vectors[:, 1]), [inv_sqrt2, inv_sqrt2], atol=1e-12)
        assert decomp.vectors[np.argmax(np.abs(decomp.vectors[:, 1])), 1] > 0

    def test_reconstruction_30x30(self):
        a = random_symmetric(30, seed=4)
        decomp = sym_eigen(a)
        assert max_norm(eigen_reconstruct(decomp) - a) < 1e-8

    def test_values_sorted_descending(self):
        decomp = sym_eigen(random_symmetric(17, seed=5))
        assert np.all(np.diff(decomp.values) <= 0)

    def test_orthonormal_vectors(self):
        decomp = sym_eigen(random_symmetric(25, seed=6))
        gram = decomp.vectors.T @ decomp.vectors
        assert np.max(np.abs(gram - np.eye(25))) < 1e-10

    def test_eigenvalue_sum_equals_trace(self):
        a = random_symmetric(20, seed=7, scale=3.0)
        decomp = sym_eigen(a)
        assert_allclose(np.sum(decomp.values), np.trace(a), rtol=1e-10)

    def test_reconstruction_at_large_scale(self):
        a = random_symmetric(20, seed=8, scale=1e3)
        decomp = sym_eigen(a)
        assert max_norm(eigen_reconstruct(decomp) - a) < 1e-8 * max(1.0, max_norm(a))

    def test_deterministic_output(self):
        a = random_symmetric(12, seed=9)
        d1 = sym_eigen(a)
        d2 = sym_eigen(a.copy())
        assert np.array_equal(d1.values, d2.values)
        assert np.array_equal(d1.vectors, d2.vectors)

    def test_sign_convention(self):
        decomp = sym_eigen(random_symmetric(10, seed=10))
        for col in decomp.vectors.T:
            assert col[np.argmax(np.abs(col))] > 0

    def test_rejects_asymmetric(self):
        a = np.arange(9.0).reshape(3, 3)
        with pytest.raises(ValueError):
            sym_eigen(a)

    def test_rejects_non_finite(self):
        a = np.eye(3)
        a[1, 1] = np.inf
        with pytest.raises(ValueError):
            sym_eigen(a)


class TestHelpers:
    def test_reflect_upper_exact_symmetry(self):
        a = np.random.default_rng(11).standard_normal((8, 8))
        s = reflect_upper(a)
        assert np.array_equal(s, s.T)
        assert np.array_equal(np.triu(s), np.triu(a))

    def test_banded_matrix_bandwidth_zero_is_identity(self):
        assert np.array_equal(banded_matrix(4, 0, 0.9), np.eye(4))

    def test_banded_matrix_hand_case(self):
        expected = np.array([[1.0, 0.4, 0.0], [0.4, 1.0, 0.4], [0.0, 0.4, 1.0]])
        assert_allclose(banded_matrix(3, 1, 0.4), expected, atol=1e-15)
