"""
Built-in test problems.

Each generator returns a ProblemSpec: a validated AffinePencil plus, where
known, closed forms of lambda_1 and lambda_2 for auditing. All generators
are deterministic for fixed arguments.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from core.config import PencilConfig
from core.errors import ConfigurationError
from core.pencil import AffinePencil, load_pencil, save_pencil
from utils.logging import get_logger

logger = get_logger("problems")

ROTATION_MODES = ("identity", "givens")


@dataclass
class ProblemSpec:
    """A named fixture, its generator parameters and its pencil."""

    name: str
    params: Dict[str, Any]
    pencil: AffinePencil
    lambda1: Optional[Callable[[Sequence[float]], float]] = None
    lambda2: Optional[Callable[[Sequence[float]], float]] = None
    extras: Dict[str, Callable] = field(default_factory=dict)


def _tridiag(n: int, lower: float, diag, upper: float) -> sp.csc_matrix:
    main = np.broadcast_to(np.asarray(diag, dtype=np.float64), (n,))
    return sp.diags([np.full(n - 1, lower), main, np.full(n - 1, upper)], [-1, 0, 1], format="csc")


def givens_rotation(n: int, seed: int = 0, sweeps: int = 2) -> np.ndarray:
    """Orthogonal matrix built as a product of seeded random Givens rotations."""
    rng = np.random.default_rng(seed)
    W = np.eye(n)
    for _ in range(sweeps * n):
        i, j = sorted(rng.choice(n, size=2, replace=False))
        angle = rng.uniform(0.0, 2.0 * np.pi)
        c, s = np.cos(angle), np.sin(angle)
        rows = W[[i, j], :].copy()
        W[i, :] = c * rows[0] - s * rows[1]
        W[j, :] = s * rows[0] + c * rows[1]
    return W


def _source(name: str, params: Dict[str, Any]) -> Dict[str, Any]:
    return {"fixture": name, "params": dict(params)}


def example1(n: int = 50, rotation: str = "identity", seed: int = 0,
             config: Optional[PencilConfig] = None) -> ProblemSpec:
    """
    A(omega) = W D(omega) W^T with D = [[1+w1, w2], [w2, 1-w1]] (+) diag(3..n), B = I.

    lambda_1 = 1 - sqrt(w1^2 + w2^2) and lambda_2 = 1 + sqrt(w1^2 + w2^2),
    which coincide at the origin. W is the identity or a fixed seeded
    orthogonal matrix, so the pencil stays affine.

    Args:
        n: Dimension (>= 2)
        rotation: "identity" or "givens"
        seed: Seed of the Givens rotations
    """
    if n < 2:
        raise ConfigurationError(f"example1 needs n >= 2, got {n}")
    if rotation not in ROTATION_MODES:
        raise ConfigurationError(f"Unknown rotation mode '{rotation}', expected one of {ROTATION_MODES}")

    D0 = np.diag(np.concatenate([[1.0, 1.0], np.arange(3, n + 1, dtype=np.float64)]))
    D1 = np.zeros((n, n))
    D1[0, 0], D1[1, 1] = 1.0, -1.0
    D2 = np.zeros((n, n))
    D2[0, 1] = D2[1, 0] = 1.0

    if rotation == "givens":
        W = givens_rotation(n, seed)
        terms = [W @ D @ W.T for D in (D0, D1, D2)]
    else:
        terms = [D0, D1, D2]

    params = {"n": n, "rotation": rotation, "seed": seed}
    pencil = AffinePencil.from_matrices(
        2, [[-0.5, 0.5], [-0.5, 0.5]],
        list(zip(("1", "w1", "w2"), terms)),
        [("1", sp.identity(n, format="csc"))],
        config=config,
        source=_source("example1", params),
    )
    pencil.validate()

    def radius(omega):
        return float(np.hypot(omega[0], omega[1]))

    return ProblemSpec(
        name="example1",
        params=params,
        pencil=pencil,
        lambda1=lambda omega: 1.0 - radius(omega),
        lambda2=lambda omega: 1.0 + radius(omega),
    )


def example3(config: Optional[PencilConfig] = None) -> ProblemSpec:
    """
    The 2 x 2 instance of example1 with W = I.

    On the axis w2 = 0 the eigenvector derivative along w2 is known in
    closed form: extras["dx1_dw2"](w1) returns it, with norm 1/(2|w1|).
    """
    spec = example1(2, "identity", config=config)
    spec.name = "example3"
    spec.params = {}
    spec.pencil.source = _source("example3", {})

    def dx1_dw2(w1: float) -> np.ndarray:
        if w1 == 0:
            raise ConfigurationError("the derivative is unbounded at w1 = 0")
        if w1 > 0:
            # x1 = e2; the derivative points along x2 = e1
            return np.array([-1.0 / (2.0 * w1), 0.0])
        return np.array([0.0, 1.0 / (2.0 * w1)])

    spec.extras["dx1_dw2"] = dx1_dw2
    return spec


# Smooth coefficients bounded by 1 in absolute value on [-1, 1]^2.
_A_COEFFS = ("w1", "w2", "w1*w2", "sin(w1+w2)", "cos(w1)*w2", "w1^2-w2^2", "exp(w1-1)")
_B_COEFFS = ("w2", "w1", "sin(w1)*cos(w2)", "w1*w2")


def _random_symmetric(n: int, rng: np.random.Generator, per_row: int = 3) -> sp.csc_matrix:
    """Sparse symmetric matrix with unit 1-norm."""
    count = per_row * n
    rows = rng.integers(0, n, size=count)
    cols = rng.integers(0, n, size=count)
    values = rng.standard_normal(count)
    R = sp.coo_matrix((values, (rows, cols)), shape=(n, n)).tocsc()
    R = (R + R.T) * 0.5
    scale = abs(R).sum(axis=0).max()
    return (R / scale).tocsc() if scale > 0 else R


def synthetic_affine(n: int = 60, m0: int = 3, m1: int = 2, seed: int = 0,
                     config: Optional[PencilConfig] = None) -> ProblemSpec:
    """
    Random affine pencil with positive definite A(omega) and B(omega) on [-1, 1]^2.

    A = (tridiag(-1, 2, -1) + I) + sum_i theta_i R_i with sparse symmetric R_i,
    sum ||R_i||_1 <= 0.6, and |theta_i| <= 1 on the domain.
    B = (diag(1 + u)) + sum_j theta_j S_j with sum ||S_j||_1 <= 0.5.

    Args:
        n: Dimension
        m0: Number of A terms (>= 1)
        m1: Number of B terms (>= 1)
        seed: Random seed
    """
    if n < 2 or m0 < 1 or m1 < 1:
        raise ConfigurationError(f"synthetic_affine needs n >= 2, m0 >= 1, m1 >= 1; got {n}, {m0}, {m1}")
    if m0 - 1 > len(_A_COEFFS) or m1 - 1 > len(_B_COEFFS):
        raise ConfigurationError(
            f"synthetic_affine supports at most {len(_A_COEFFS) + 1} A terms and {len(_B_COEFFS) + 1} B terms"
        )
    rng = np.random.default_rng(seed)

    terms_a = [("1", _tridiag(n, -1.0, 3.0, -1.0))]
    for i in range(m0 - 1):
        terms_a.append((_A_COEFFS[i], 0.6 / (m0 - 1) * _random_symmetric(n, rng)))

    terms_b = [("1", sp.diags(1.0 + rng.uniform(0.0, 1.0, n), format="csc"))]
    for j in range(m1 - 1):
        terms_b.append((_B_COEFFS[j], 0.5 / (m1 - 1) * _random_symmetric(n, rng)))

    params = {"n": n, "m0": m0, "m1": m1, "seed": seed}
    pencil = AffinePencil.from_matrices(
        2, [[-1.0, 1.0], [-1.0, 1.0]], terms_a, terms_b,
        config=config, source=_source("synthetic", params),
    )
    pencil.validate()
    return ProblemSpec(name="synthetic", params=params, pencil=pencil)


def beam_like(n: int = 120, config: Optional[PencilConfig] = None) -> ProblemSpec:
    """
    Stiffness/mass pair with both sides parameter dependent.

    A(omega) = w2 (K0 + w1^3 K1), B(omega) = M0 + w1 M1 on [0.1, 1] x [100, 1000],
    K0 = tridiag(-1, 2, -1), K1 and M1 SPD, M0 = tridiag(1, 4, 1) / 6.
    """
    if n < 2:
        raise ConfigurationError(f"beam_like needs n >= 2, got {n}")
    K0 = _tridiag(n, -1.0, 2.0, -1.0)
    K1 = _tridiag(n, -0.25, np.linspace(1.0, 2.0, n), -0.25)
    M0 = _tridiag(n, 1.0, 4.0, 1.0) / 6.0
    M1 = sp.diags(np.linspace(0.5, 1.0, n), format="csc")

    params = {"n": n}
    pencil = AffinePencil.from_matrices(
        2, [[0.1, 1.0], [100.0, 1000.0]],
        [("w2", K0), ("w2*w1^3", K1)],
        [("1", M0), ("w1", M1)],
        config=config, source=_source("beam", params),
    )
    pencil.validate()
    return ProblemSpec(name="beam", params=params, pencil=pencil)


FIXTURES: Dict[str, Callable[..., ProblemSpec]] = {
    "example1": example1,
    "example3": example3,
    "synthetic": synthetic_affine,
    "beam": beam_like,
}


def build_fixture(name: str, config: Optional[PencilConfig] = None, **params) -> ProblemSpec:
    """
    Build a registered fixture by name.

    Raises:
        ConfigurationError: For an unknown name or invalid parameters
    """
    if name not in FIXTURES:
        raise ConfigurationError(f"Unknown fixture '{name}', expected one of {sorted(FIXTURES)}")
    try:
        return FIXTURES[name](config=config, **params)
    except TypeError as e:
        raise ConfigurationError(f"Invalid parameters for fixture '{name}': {params}", original_error=e)


def pencil_from_source(source: Dict[str, Any], config: Optional[PencilConfig] = None) -> AffinePencil:
    """Rebuild a full pencil from a surrogate's source record."""
    if "fixture" in source:
        return build_fixture(source["fixture"], config=config, **source.get("params", {})).pencil
    if "pencil" in source:
        return load_pencil(source["pencil"], config=config)
    raise ConfigurationError(f"Source record names neither a fixture nor a pencil file: {source}")


def export_fixture(spec: ProblemSpec, path: Union[str, Path]) -> Path:
    """Write a fixture as a pencil definition file with Matrix Market matrices."""
    path = save_pencil(spec.pencil, path)
    logger.info(f"Exported fixture '{spec.name}' {spec.params} to {path}")
    return path
