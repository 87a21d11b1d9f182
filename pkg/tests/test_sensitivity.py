"""Tests for eigenvalue and eigenvector derivatives."""

import numpy as np
import pytest

from core.config import SolverConfig
from core.eigcore import full_spectrum, smallest_eigpairs
from core.errors import NonSimpleEigenvalueError, SensitivityError, SingularSystemError
from core.sensitivity import (
    BorderedSystem,
    bordered_residual,
    bordered_rhs,
    check_simple,
    eigenvalue_gradient,
    eigenvalue_hessian,
    eigenvector_derivative_bordered,
    eigenvector_derivative_spectral,
    projected_derivative_guess,
)
from problems import example1, example3

from .conftest import random_pencil


def first_pair(pencil, omega, m=2):
    A, B = pencil.assemble(omega)
    ritz = smallest_eigpairs(A, B, m, mode="dense")
    return A, B, float(ritz.values[0]), ritz.vectors[:, 0], ritz.gap


def scale_of(A, B, lam):
    return np.linalg.norm(A.toarray(), 1) + abs(lam) * np.linalg.norm(B.toarray(), 1)


class TestSimplicity:
    def test_check_simple(self):
        check_simple(1e-3)
        check_simple(None)
        with pytest.raises(NonSimpleEigenvalueError) as info:
            check_simple(1e-9)
        assert info.value.gap == 1e-9

    def test_double_eigenvalue_rejected(self):
        pencil = example3().pencil
        A, B = pencil.assemble((0.0, 0.0))
        x = np.array([1.0, 0.0])
        with pytest.raises(NonSimpleEigenvalueError):
            BorderedSystem(A, B, 1.0, x, gap=0.0)

    def test_singular_bordered_system_without_gap(self):
        # Without a gap hint the double eigenvalue shows up as a singular factorization
        pencil = example3().pencil
        A, B = pencil.assemble((0.0, 0.0))
        with pytest.raises(SingularSystemError):
            BorderedSystem(A, B, 1.0, np.array([1.0, 0.0]))


class TestGradient:
    def test_gradient_matches_finite_difference(self, rng):
        pencil = random_pencil(rng, 15)
        omega = np.array([0.3, -0.2])
        _, _, lam, x, gap = first_pair(pencil, omega)
        grad = eigenvalue_gradient(pencil, omega, lam, x, gap=gap)
        h = 1e-6
        for j in range(2):
            step = np.zeros(2)
            step[j] = h
            fd = (first_pair(pencil, omega + step)[2] - first_pair(pencil, omega - step)[2]) / (2 * h)
            assert grad[j] == pytest.approx(fd, rel=1e-6, abs=1e-8)

    def test_example3_gradient(self):
        pencil = example3().pencil
        _, _, lam, x, gap = first_pair(pencil, (0.3, 0.4))
        grad = eigenvalue_gradient(pencil, (0.3, 0.4), lam, x, gap=gap)
        # lambda_1 = 1 - sqrt(w1^2 + w2^2)
        np.testing.assert_allclose(grad, [-0.6, -0.8], atol=1e-12)


class TestEigenvectorDerivative:
    def test_bordered_matches_spectral(self, rng):
        checked = 0
        for _ in range(20):
            n = int(rng.integers(5, 51))
            pencil = random_pencil(rng, n)
            omega = rng.uniform(-1.0, 1.0, 2)
            A, B = pencil.assemble(omega)
            values, X = full_spectrum(A, B)
            if values[1] - values[0] <= 1e-3:
                continue
            checked += 1
            lam, x = values[0], X[:, 0]
            scale = scale_of(A, B, lam)
            for j in (1, 2):
                dA, dB = pencil.assemble_derivative(omega, j)
                bordered = eigenvector_derivative_bordered(A, B, dA, dB, lam, x, gap=values[1] - values[0])
                spectral = eigenvector_derivative_spectral(values, X, dA, dB)
                norm = max(np.linalg.norm(spectral), 1.0)
                assert np.linalg.norm(bordered.dx - spectral) <= 1e-8 * norm
                for dx, dlam in ((bordered.dx, bordered.dlambda), (spectral, bordered.dlambda)):
                    res = bordered_residual(A, B, dA, dB, lam, x, dx, dlam)
                    assert res <= 1e-8 * scale * norm
        assert checked >= 15

    def test_normalization_row(self, small_pencil):
        omega = (0.1, 0.2)
        A, B, lam, x, gap = first_pair(small_pencil, omega)
        dA, dB = small_pencil.assemble_derivative(omega, 2)
        result = eigenvector_derivative_bordered(A, B, dA, dB, lam, x, gap=gap)
        assert (B @ x) @ result.dx == pytest.approx(-0.5 * x @ (dB @ x), abs=1e-12)
        assert result.dlambda == pytest.approx(x @ (dA @ x) - lam * x @ (dB @ x), rel=1e-10)
        assert result.condition > 1

    @pytest.mark.parametrize("w1, expected", [(0.5, 1.0), (0.05, 10.0), (-0.05, 10.0)])
    def test_example3_closed_form(self, w1, expected):
        spec = example3()
        A, B, lam, x, gap = first_pair(spec.pencil, (w1, 0.0))
        dA, dB = spec.pencil.assemble_derivative((w1, 0.0), 2)
        result = eigenvector_derivative_bordered(A, B, dA, dB, lam, x, gap=gap)
        assert np.linalg.norm(result.dx) == pytest.approx(expected, rel=1e-8)
        np.testing.assert_allclose(result.dx, spec.extras["dx1_dw2"](w1), rtol=1e-8, atol=1e-12)

    def test_solve_all_shares_factorization(self, small_pencil):
        omega = (-0.4, 0.6)
        A, B, lam, x, gap = first_pair(small_pencil, omega)
        system = BorderedSystem(A, B, lam, x, gap=gap)
        results = system.solve_all(small_pencil, omega)
        assert len(results) == 2
        for j, result in enumerate(results, start=1):
            single = eigenvector_derivative_bordered(A, B, *small_pencil.assemble_derivative(omega, j), lam, x)
            np.testing.assert_allclose(result.dx, single.dx, rtol=1e-12, atol=1e-14)
            assert result.condition == pytest.approx(system.condition)


class TestHessian:
    def test_matches_finite_difference_of_gradient(self, rng):
        pencil = random_pencil(rng, 12)
        omega = np.array([0.2, 0.5])

        def gradient_at(point):
            A, B, lam, x, gap = first_pair(pencil, point)
            return eigenvalue_gradient(pencil, point, lam, x, gap=gap)

        A, B, lam, x, gap = first_pair(pencil, omega)
        dx = [r.dx for r in BorderedSystem(A, B, lam, x, gap=gap).solve_all(pencil, omega)]
        H = eigenvalue_hessian(pencil, omega, lam, x, dx)
        h = 1e-4
        fd = np.empty((2, 2))
        for k in range(2):
            step = np.zeros(2)
            step[k] = h
            fd[:, k] = (gradient_at(omega + step) - gradient_at(omega - step)) / (2 * h)
        assert np.max(np.abs(H - fd)) <= 1e-3 * max(np.max(np.abs(fd)), 1.0)
        np.testing.assert_array_equal(H, H.T)

    def test_inaccurate_derivatives_detected(self, small_pencil):
        omega = (0.0, 0.0)
        A, B, lam, x, gap = first_pair(small_pencil, omega)
        bad = [np.zeros(small_pencil.n), np.ones(small_pencil.n)]
        with pytest.raises(SensitivityError):
            eigenvalue_hessian(small_pencil, omega, lam, x, bad)


class TestProjectedGuess:
    def test_beats_zero_vector_with_krylov_basis(self, rng):
        for trial in range(10):
            pencil = random_pencil(rng, 40)
            omega = rng.uniform(-1.0, 1.0, 2)
            A, B = pencil.assemble(omega)
            ritz = smallest_eigpairs(A, B, 1, mode="shift-invert", config=SolverConfig(seed=trial))
            lam, x = float(ritz.values[0]), ritz.vectors[:, 0]
            dA, dB = pencil.assemble_derivative(omega, 1)
            guess = projected_derivative_guess(ritz.krylov_basis, A, B, dA, dB, lam, x)
            zero = np.linalg.norm(bordered_rhs(dA, dB, lam, x))
            assert not guess.rescaled
            assert guess.residual < zero
            assert guess.method == "projected-guess"

    def test_exact_on_full_space(self, rng):
        for _ in range(10):
            pencil = random_pencil(rng, 15)
            omega = rng.uniform(-1.0, 1.0, 2)
            A, B, lam, x, gap = first_pair(pencil, omega)
            dA, dB = pencil.assemble_derivative(omega, 2)
            V, _ = np.linalg.qr(rng.standard_normal((15, 15)))
            guess = projected_derivative_guess(V, A, B, dA, dB, lam, x)
            exact = eigenvector_derivative_bordered(A, B, dA, dB, lam, x, gap=gap)
            norm = max(np.linalg.norm(exact.dx), 1.0)
            assert np.linalg.norm(guess.dx - exact.dx) <= 1e-10 * norm
            assert guess.dlambda == pytest.approx(exact.dlambda, rel=1e-10, abs=1e-12)

    def test_span_of_eigenvector_only(self):
        pencil = example1(10, "givens", seed=1).pencil
        omega = (0.3, 0.2)
        A, B, lam, x, _ = first_pair(pencil, omega)
        dA, dB = pencil.assemble_derivative(omega, 1)
        V = (x / np.linalg.norm(x)).reshape(-1, 1)
        guess = projected_derivative_guess(V, A, B, dA, dB, lam, x)
        # On span{x} the guess carries dlambda and no eigenvector component
        assert guess.dlambda == pytest.approx(-0.3 / np.hypot(0.3, 0.2), rel=1e-10)
        assert x @ guess.dx == pytest.approx(0.0, abs=1e-12)
        assert guess.residual < np.linalg.norm(bordered_rhs(dA, dB, lam, x))

    def test_rescales_guess_that_loses_to_zero_vector(self, caplog):
        # The Galerkin solution on span{e1 + e3} has residual sqrt(2) against 1 for the zero vector
        A, B = np.diag([1.0, 2.0, 3.0]), np.eye(3)
        dA = np.zeros((3, 3))
        dA[0, 2] = dA[2, 0] = 1.0
        x = np.array([1.0, 0.0, 0.0])
        V = np.array([[1.0], [0.0], [1.0]]) / np.sqrt(2.0)
        with caplog.at_level("INFO", logger="eigsur"):
            guess = projected_derivative_guess(V, A, B, dA, np.zeros((3, 3)), 1.0, x)
        assert guess.rescaled
        assert guess.residual == pytest.approx(1.0)
        assert "rescaled" in caplog.text
