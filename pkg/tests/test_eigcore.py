"""Tests for the fixed-parameter eigensolvers."""

import numpy as np
import pytest
import scipy.sparse as sp

from core.config import SolverConfig
from core.eigcore import (
    b_normalize,
    fix_sign,
    full_spectrum,
    min_eigenvalue,
    relative_residual,
    smallest_eigpairs,
)
from core.errors import ConfigurationError, SolverError

from .conftest import random_spd


def sparse_pencil(rng, n):
    """Sparse SPD pencil: shifted 1-D Laplacian plus random diagonal, diagonally dominant B."""
    A = sp.diags([-np.ones(n - 1), 2.5 + rng.uniform(0, 1, n), -np.ones(n - 1)], [-1, 0, 1], format="csc")
    B = sp.diags([0.1 * np.ones(n - 1), 1.0 + rng.uniform(0, 0.5, n), 0.1 * np.ones(n - 1)], [-1, 0, 1],
                 format="csc")
    return A, B


class TestHelpers:
    def test_fix_sign(self):
        np.testing.assert_array_equal(fix_sign(np.array([0.1, -0.9, 0.2])), [-0.1, 0.9, -0.2])
        np.testing.assert_array_equal(fix_sign(np.array([0.5, -0.5])), [0.5, -0.5])

    def test_b_normalize(self, rng):
        B = random_spd(rng, 5)
        x = b_normalize(rng.standard_normal(5), B)
        assert x @ B @ x == pytest.approx(1.0)

    def test_b_normalize_scales_to_unit_b_norm(self):
        x = b_normalize(np.array([0.0, 1.0]), np.diag([1.0, 4.0]))
        np.testing.assert_allclose(x, [0.0, 0.5])

    def test_b_normalize_rejects_indefinite(self):
        with pytest.raises(SolverError):
            b_normalize(np.array([1.0, 0.0]), np.diag([-1.0, 1.0]))


class TestDense:
    def test_diagonal_pencil(self):
        A = np.diag([3.0, 1.0, 2.0])
        ritz = smallest_eigpairs(A, np.eye(3), 2, mode="dense")
        np.testing.assert_allclose(ritz.values, [1.0, 2.0])
        np.testing.assert_allclose(ritz.vectors[:, 0], [0.0, 1.0, 0.0], atol=1e-14)
        assert ritz.gap == pytest.approx(1.0)
        assert ritz.converged.all()

    def test_b_orthonormal_and_sign_fixed(self, rng):
        A, B = random_spd(rng, 20), random_spd(rng, 20)
        ritz = smallest_eigpairs(A, B, 3)
        np.testing.assert_allclose(ritz.vectors.T @ B @ ritz.vectors, np.eye(3), atol=1e-12)
        for k in range(3):
            x = ritz.vectors[:, k]
            assert x[np.argmax(np.abs(x))] > 0
            assert relative_residual(A, B, ritz.values[k], x) <= 1e-10

    def test_m_out_of_range(self):
        with pytest.raises(ConfigurationError):
            smallest_eigpairs(np.eye(3), np.eye(3), 4)

    def test_b_not_spd(self):
        with pytest.raises(ConfigurationError):
            smallest_eigpairs(np.eye(2), np.diag([1.0, -1.0]), 1, mode="dense")

    def test_single_pair_gap_is_infinite(self):
        assert smallest_eigpairs(np.eye(2), np.eye(2), 1).gap == float("inf")


class TestShiftInvert:
    def test_matches_dense_on_random_pencils(self, rng):
        for trial in range(20):
            n = int(rng.integers(30, 201))
            A, B = sparse_pencil(rng, n)
            dense = smallest_eigpairs(A, B, 2, mode="dense")
            krylov = smallest_eigpairs(A, B, 2, mode="shift-invert", config=SolverConfig(seed=trial))
            assert abs(krylov.values[0] - dense.values[0]) <= 1e-9 * abs(dense.values[0])
            assert krylov.method == "shift-invert"
            assert krylov.krylov_basis is not None

    def test_ritz_values_bound_true_eigenvalues_from_above(self, rng):
        for trial in range(10):
            A, B = sparse_pencil(rng, 150)
            exact, _ = full_spectrum(A, B)
            ritz = smallest_eigpairs(A, B, 3, mode="shift-invert", config=SolverConfig(seed=trial))
            assert np.all(ritz.values >= exact[:3] - 1e-10 * np.abs(exact[:3]))

    def test_krylov_basis_is_orthonormal(self, rng):
        A, B = sparse_pencil(rng, 80)
        ritz = smallest_eigpairs(A, B, 1, mode="shift-invert")
        Q = ritz.krylov_basis
        np.testing.assert_allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-10)
        assert Q.shape[1] == SolverConfig().krylov_dimension(1)

    def test_double_eigenvalue(self):
        # lambda = 1 twice; the block Krylov space holds both directions
        n = 60
        diag = np.concatenate([[1.0, 1.0], np.linspace(2.0, 5.0, n - 2)])
        ritz = smallest_eigpairs(sp.diags(diag, format="csc"), sp.identity(n, format="csc"), 2,
                                 mode="shift-invert")
        np.testing.assert_allclose(ritz.values, [1.0, 1.0], atol=1e-10)
        assert ritz.gap <= 1e-10

    def test_deterministic_for_fixed_seed(self, rng):
        A, B = sparse_pencil(rng, 100)
        first = smallest_eigpairs(A, B, 2, mode="shift-invert", config=SolverConfig(seed=4))
        second = smallest_eigpairs(A, B, 2, mode="shift-invert", config=SolverConfig(seed=4))
        assert np.array_equal(first.values, second.values)
        assert np.array_equal(first.vectors, second.vectors)

    def test_singular_shift_retries(self, caplog):
        # sigma = 0 is an eigenvalue of A; the solver retries below the spectrum
        n = 40
        A = sp.diags(np.linspace(0.0, 4.0, n), format="csc")
        with caplog.at_level("WARNING", logger="eigsur"):
            ritz = smallest_eigpairs(A, sp.identity(n, format="csc"), 1, mode="shift-invert")
        assert ritz.values[0] == pytest.approx(0.0, abs=1e-10)
        assert "retrying" in caplog.text

    def test_restart_cap(self, rng):
        A, B = sparse_pencil(rng, 150)
        config = SolverConfig(max_restarts=1, krylov_dim=4, block_size=1, tol_eig=1e-15)
        with pytest.raises(SolverError, match="did not converge"):
            smallest_eigpairs(A, B, 1, mode="shift-invert", config=config)


class TestOracles:
    def test_full_spectrum(self, rng):
        A, B = random_spd(rng, 10), random_spd(rng, 10)
        values, X = full_spectrum(A, B)
        assert np.all(np.diff(values) >= 0)
        np.testing.assert_allclose(X.T @ B @ X, np.eye(10), atol=1e-12)

    def test_full_spectrum_reconstructs_a(self, rng):
        A, B = random_spd(rng, 30), random_spd(rng, 30)
        values, X = full_spectrum(A, B)
        np.testing.assert_allclose(B @ X @ np.diag(values) @ X.T @ B, A, atol=1e-8 * np.abs(A).max())

    def test_full_spectrum_cap(self):
        with pytest.raises(SolverError, match="oracle cap"):
            full_spectrum(np.eye(4), np.eye(4), cap=3)

    def test_min_eigenvalue(self):
        assert min_eigenvalue(sp.diags([3.0, 0.5, 2.0], format="csc")) == pytest.approx(0.5)
