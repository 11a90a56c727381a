import numpy as np
import pytest

from lrpca import (ConvergenceFailure, InvalidDimensions, InvalidInput,
                   InvalidRank, SingularGram, gram_solve, matrix_norm,
                   truncated_svd)
from oracles import jacobi_rank_r, jacobi_svd


class TestMatrixNorm:
    def test_fro_345(self):
        assert matrix_norm([[3.0, -4.0]], "fro") == pytest.approx(5.0)

    def test_inf_is_max_magnitude(self):
        assert matrix_norm([[3.0, -4.0]], "inf") == 4.0

    def test_two_inf_is_max_row_l2(self):
        assert matrix_norm([[3.0, 4.0], [0.0, 1.0]], "two_inf") == pytest.approx(5.0)

    def test_one_inf_is_max_row_l1(self):
        assert matrix_norm([[3.0, -4.0], [1.0, 1.0]], "one_inf") == pytest.approx(7.0)

    def test_spectral_matches_lapack(self, rng):
        for _ in range(20):
            M = rng.standard_normal((17, 11))
            ref = np.linalg.norm(M, 2)
            assert matrix_norm(M, "spectral") == pytest.approx(ref, rel=1e-8)

    def test_spectral_zero_matrix(self):
        assert matrix_norm(np.zeros((4, 3)), "spectral") == 0.0

    def test_spectral_ones_vector_annihilated(self):
        # The all-ones start vector is in the null space; restart must kick in.
        M = np.array([[1.0, -1.0], [1.0, -1.0]])
        assert matrix_norm(M, "spectral") == pytest.approx(2.0)

    def test_fro_spectral_sandwich(self, rng):
        for _ in range(20):
            M = rng.standard_normal((12, 9))
            spec = matrix_norm(M, "spectral")
            fro = matrix_norm(M, "fro")
            assert spec <= fro * (1 + 1e-12)
            assert fro <= np.sqrt(9) * spec * (1 + 1e-9)

    def test_empty_matrix_rejected(self):
        with pytest.raises(InvalidDimensions):
            matrix_norm(np.zeros((0, 3)), "fro")

    def test_nan_rejected(self):
        with pytest.raises(InvalidInput):
            matrix_norm([[np.nan, 1.0]], "fro")

    def test_unknown_kind(self):
        with pytest.raises(InvalidInput):
            matrix_norm([[1.0]], "nuclear")


class TestTruncatedSVD:
    def test_exact_rank_one(self, rng):
        u = rng.standard_normal(8)
        v = rng.standard_normal(6)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        f = truncated_svd(5.0 * np.outer(u, v), 1)
        assert f.sigma == pytest.approx([5.0])

    def test_diagonal_input(self):
        f = truncated_svd(np.diag([3.0, 2.0, 1.0]), 2)
        assert f.sigma == pytest.approx([3.0, 2.0])

    def test_orthonormal_factors(self, rng):
        M = rng.standard_normal((40, 25))
        f = truncated_svd(M, 4, seed=3)
        assert np.linalg.norm(f.U.T @ f.U - np.eye(4)) <= 1e-10
        assert np.linalg.norm(f.V.T @ f.V - np.eye(4)) <= 1e-10
        assert all(a >= b >= 0 for a, b in zip(f.sigma, f.sigma[1:]))

    def test_random_30x30_matches_jacobi_oracle(self):
        M = np.random.default_rng(7).standard_normal((30, 30))
        f = truncated_svd(M, 3, seed=7)
        ref = jacobi_rank_r(M, 3)
        rel = np.linalg.norm(f.product() - ref) / np.linalg.norm(ref)
        assert rel <= 1e-9

    def test_full_rank_reconstructs(self, rng):
        M = rng.standard_normal((15, 10))
        f = truncated_svd(M, 10)
        assert np.linalg.norm(f.product() - M) <= 1e-9 * np.linalg.norm(M)

    def test_deterministic_given_seed(self, rng):
        M = rng.standard_normal((50, 50))
        f1 = truncated_svd(M, 3, seed=11)
        f2 = truncated_svd(M, 3, seed=11)
        assert np.array_equal(f1.U, f2.U)
        assert np.array_equal(f1.sigma, f2.sigma)
        assert np.array_equal(f1.V, f2.V)

    def test_rank_too_large(self):
        with pytest.raises(InvalidRank):
            truncated_svd(np.eye(4), 5)

    def test_zero_matrix(self):
        f = truncated_svd(np.zeros((6, 5)), 2)
        assert f.sigma == pytest.approx([0.0, 0.0])
        assert np.linalg.norm(f.U.T @ f.U - np.eye(2)) <= 1e-14

    def test_cap_raises(self, rng):
        M = rng.standard_normal((40, 40))
        with pytest.raises(ConvergenceFailure):
            truncated_svd(M, 2, cap=1)


class TestJacobiOracleSelfCheck:
    def test_reconstructs_and_is_orthonormal(self, rng):
        M = rng.standard_normal((12, 9))
        U, s, V = jacobi_svd(M)
        assert np.linalg.norm((U * s) @ V.T - M) <= 1e-12 * np.linalg.norm(M)
        assert np.linalg.norm(V.T @ V - np.eye(9)) <= 1e-12
        ref = np.linalg.svd(M, compute_uv=False)
        assert s == pytest.approx(ref, rel=1e-12)


class TestGramSolve:
    def test_diagonal_inverse(self):
        W = gram_solve(np.eye(2), np.diag([2.0, 4.0]))
        assert W == pytest.approx(np.diag([0.5, 0.25]))

    def test_identity_gram(self, rng):
        V = rng.standard_normal((7, 3))
        assert gram_solve(V, np.eye(3)) == pytest.approx(V)

    def test_zero_gram_singular(self):
        with pytest.raises(SingularGram):
            gram_solve(np.ones((4, 2)), np.zeros((2, 2)))

    def test_indefinite_gram_rejected(self):
        with pytest.raises(SingularGram):
            gram_solve(np.ones((3, 2)), np.diag([1.0, -1.0]))

    def test_residual_bound(self, rng):
        for _ in range(10):
            A = rng.standard_normal((20, 5))
            G = A.T @ A + 0.1 * np.eye(5)
            V = rng.standard_normal((30, 5))
            W = gram_solve(V, G)
            assert np.linalg.norm(W @ G - V) <= 1e-10 * np.linalg.norm(V)

    def test_round_trip_property(self, rng):
        V = rng.standard_normal((9, 4))
        B = rng.standard_normal((11, 4))
        G = B.T @ B + np.eye(4)
        W = gram_solve(V, G)
        assert np.linalg.norm(W @ G - V) <= 1e-10 * np.linalg.norm(V)
