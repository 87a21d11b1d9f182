"""Shared fixtures for the eigsur test suite."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to Python path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from core.pencil import AffinePencil  # noqa: E402
from problems import example1, synthetic_affine  # noqa: E402


def random_symmetric(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    M = rng.standard_normal((n, n))
    return scale * 0.5 * (M + M.T) / np.sqrt(n)


def random_spd(rng: np.random.Generator, n: int, shift: float = 1.0) -> np.ndarray:
    M = rng.standard_normal((n, n))
    return M @ M.T / n + shift * np.eye(n)


def random_pencil(rng: np.random.Generator, n: int, **kwargs) -> AffinePencil:
    """
    Dense two-parameter pencil on [-1, 1]^2 with parameter-dependent A and B.

    A = A0 + w1 A1 + sin(w2) A2, B = B0 + w1*w2 B1; both stay positive definite.
    """
    A0 = np.diag(np.linspace(2.0, 12.0, n)) + random_symmetric(rng, n, 0.5)
    B0 = random_spd(rng, n, shift=2.0)
    return AffinePencil.from_matrices(
        2, [[-1.0, 1.0], [-1.0, 1.0]],
        [("1", A0), ("w1", random_symmetric(rng, n, 0.2)), ("sin(w2)", random_symmetric(rng, n, 0.2))],
        [("1", B0), ("w1*w2", random_symmetric(rng, n, 0.1))],
        **kwargs,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_pencil(rng):
    return random_pencil(rng, 12)


@pytest.fixture(scope="session")
def example1_n50():
    return example1(50, "givens", seed=3)


@pytest.fixture(scope="session")
def synthetic_small():
    return synthetic_affine(n=40, m0=3, m1=2, seed=7)
