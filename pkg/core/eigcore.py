"""
Fixed-parameter solvers for the symmetric-definite problem A x = lambda B x.

Two paths compute the smallest eigenpairs:

- dense: scipy.linalg.eigh on the full matrices (small n)
- shift-invert: restarted block Krylov space of (A - sigma B)^-1 B with full
  reorthogonalization, followed by Rayleigh-Ritz on (A, B). Pair 1 is
  iterated to tolerance; pairs 2..m are by-products of the same space.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from utils.logging import get_logger

from .config import SolverConfig
from .errors import ConfigurationError, SolverError

logger = get_logger("core.eigcore")

Matrix = Union[np.ndarray, sp.spmatrix]


@dataclass
class RitzSet:
    """Approximate eigenpairs at one parameter point, values ascending."""

    values: np.ndarray
    vectors: np.ndarray
    converged: np.ndarray
    residual_norms: np.ndarray
    krylov_basis: Optional[np.ndarray] = None
    method: str = "dense"
    stats: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.values)

    @property
    def gap(self) -> float:
        """lambda_2 - lambda_1 of the computed pairs (inf when only one pair)."""
        if self.m < 2:
            return float("inf")
        return float(self.values[1] - self.values[0])


def _dense(M: Matrix) -> np.ndarray:
    return M.toarray() if sp.issparse(M) else np.asarray(M, dtype=np.float64)


def _norm1(M: Matrix) -> float:
    if sp.issparse(M):
        return float(spla.norm(M, 1))
    return float(np.linalg.norm(M, 1))


def fix_sign(x: np.ndarray) -> np.ndarray:
    """Flip x so that its largest-magnitude entry (first on ties) is positive."""
    idx = int(np.argmax(np.abs(x)))
    return -x if x[idx] < 0 else x


def b_normalize(x: np.ndarray, B: Matrix) -> np.ndarray:
    """
    Scale x to unit B-norm and fix its sign.

    Raises:
        SolverError: If x^T B x is not positive
    """
    x = np.asarray(x, dtype=np.float64)
    bnorm2 = float(x @ (B @ x))
    if not bnorm2 > 0 or not np.isfinite(bnorm2):
        raise SolverError(f"x^T B x = {bnorm2:.3e} is not positive; B is not SPD or x is degenerate")
    return fix_sign(x / np.sqrt(bnorm2))


def residual(A: Matrix, B: Matrix, lam: float, x: np.ndarray) -> Tuple[np.ndarray, float]:
    """Return r = A x - lam B x and its Euclidean norm."""
    r = A @ x - lam * (B @ x)
    r = np.asarray(r).reshape(-1)
    return r, float(np.linalg.norm(r))


def relative_residual(A: Matrix, B: Matrix, lam: float, x: np.ndarray, scale: Optional[float] = None) -> float:
    """||A x - lam B x|| relative to (||A||_1 + |lam| ||B||_1) ||x||."""
    _, norm = residual(A, B, lam, x)
    if scale is None:
        scale = _norm1(A) + abs(lam) * _norm1(B)
    denom = scale * np.linalg.norm(x)
    return norm / denom if denom > 0 else norm


def full_spectrum(A: Matrix, B: Matrix, cap: int = 500) -> Tuple[np.ndarray, np.ndarray]:
    """
    Complete eigendecomposition for oracle checks.

    Args:
        A, B: Symmetric matrices, B positive definite
        cap: Largest dimension accepted

    Returns:
        Tuple (values ascending, X) with X^T B X = I

    Raises:
        SolverError: If n exceeds cap
        ConfigurationError: If B is not positive definite
    """
    n = A.shape[0]
    if n > cap:
        raise SolverError(f"full spectrum requested for n={n} above the oracle cap {cap}")
    try:
        values, X = scipy.linalg.eigh(_dense(A), _dense(B))
    except np.linalg.LinAlgError as e:
        raise ConfigurationError(f"B is not positive definite: {e}", original_error=e)
    for k in range(n):
        X[:, k] = fix_sign(X[:, k])
    return values, X


def _finish(A, B, values, vectors, tol, krylov_basis=None, method="dense", stats=None) -> RitzSet:
    m = len(values)
    vectors = np.column_stack([b_normalize(vectors[:, k], B) for k in range(m)])
    scale_a, scale_b = _norm1(A), _norm1(B)
    norms = np.empty(m)
    converged = np.empty(m, dtype=bool)
    for k in range(m):
        _, norms[k] = residual(A, B, values[k], vectors[:, k])
        scale = (scale_a + abs(values[k]) * scale_b) * np.linalg.norm(vectors[:, k])
        converged[k] = norms[k] <= tol * scale
    return RitzSet(values=np.asarray(values, dtype=np.float64), vectors=vectors, converged=converged,
                   residual_norms=norms, krylov_basis=krylov_basis, method=method, stats=stats or {})


def _dense_eigpairs(A: Matrix, B: Matrix, m: int, config: SolverConfig) -> RitzSet:
    try:
        values, X = scipy.linalg.eigh(_dense(A), _dense(B), subset_by_index=[0, m - 1])
    except np.linalg.LinAlgError as e:
        raise ConfigurationError(f"B is not positive definite: {e}", original_error=e)
    return _finish(A, B, values, X, config.tol_eig, method="dense")


class ShiftInvertOperator:
    """Applies (A - sigma B)^-1 B through one sparse LU factorization."""

    def __init__(self, A: Matrix, B: Matrix, sigma: float):
        self.B = sp.csc_matrix(B)
        self.sigma = sigma
        shifted = sp.csc_matrix(A) - sigma * self.B
        try:
            self.lu = spla.splu(shifted.tocsc())
        except RuntimeError as e:
            raise SolverError(f"A - sigma B is singular for sigma={sigma}", original_error=e)
        pivots = np.abs(self.lu.U.diagonal())
        if pivots.min() <= np.finfo(float).eps * max(pivots.max(), 1.0) * shifted.shape[0]:
            raise SolverError(f"A - sigma B is numerically singular for sigma={sigma}")

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.lu.solve(np.asarray(self.B @ X))


def _factor(A: Matrix, B: Matrix, sigma: float) -> ShiftInvertOperator:
    try:
        return ShiftInvertOperator(A, B, sigma)
    except SolverError as e:
        retry = -_norm1(A)
        logger.warning(f"{e}; retrying with sigma={retry:.6g}")
        return ShiftInvertOperator(A, B, retry)


def _orthonormal_extend(Q: np.ndarray, cols: int, block: np.ndarray, deflation_tol: float = 1e-12) -> int:
    """Append the columns of block to Q[:, :cols] with two MGS passes; returns the new column count."""
    for v in block.T:
        if cols >= Q.shape[1]:
            break
        w = np.array(v, dtype=np.float64)
        norm0 = np.linalg.norm(w)
        if norm0 == 0:
            continue
        for _ in range(2):
            for k in range(cols):
                w -= (Q[:, k] @ w) * Q[:, k]
        norm = np.linalg.norm(w)
        if norm <= deflation_tol * norm0:
            continue
        Q[:, cols] = w / norm
        cols += 1
    return cols


def _krylov_basis(
    apply: ShiftInvertOperator,
    start: np.ndarray,
    dim: int,
    rng: np.random.Generator
) -> np.ndarray:
    n = start.shape[0]
    Q = np.zeros((n, dim))
    cols = _orthonormal_extend(Q, 0, start)
    first = 0
    while cols < dim:
        if cols == first:
            # Krylov space became invariant; continue from fresh random directions.
            new_cols = _orthonormal_extend(Q, cols, rng.standard_normal((n, start.shape[1])))
        else:
            new_cols = _orthonormal_extend(Q, cols, apply(Q[:, first:cols]))
        first, cols = cols, new_cols
    return Q


def _shift_invert_eigpairs(A: Matrix, B: Matrix, m: int, config: SolverConfig) -> RitzSet:
    n = A.shape[0]
    dim = min(config.krylov_dimension(m), n)
    block = min(config.block_size, dim)
    rng = np.random.default_rng(config.seed)
    operator = _factor(A, B, config.sigma)
    A_csc, B_csc = sp.csc_matrix(A), sp.csc_matrix(B)
    scale_b = _norm1(B)
    scale_a = _norm1(A)

    start = rng.standard_normal((n, block))
    for restart in range(1, config.max_restarts + 1):
        Q = _krylov_basis(operator, start, dim, rng)
        Ap = Q.T @ (A_csc @ Q)
        Bp = Q.T @ (B_csc @ Q)
        Ap = 0.5 * (Ap + Ap.T)
        Bp = 0.5 * (Bp + Bp.T)
        try:
            theta, Y = scipy.linalg.eigh(Ap, Bp)
        except np.linalg.LinAlgError as e:
            raise ConfigurationError(f"B is not positive definite on the Krylov space: {e}", original_error=e)
        X = Q @ Y[:, :m]
        _, r1 = residual(A_csc, B_csc, theta[0], X[:, 0])
        scale = (scale_a + abs(theta[0]) * scale_b) * np.linalg.norm(X[:, 0])
        if r1 <= config.tol_eig * scale:
            stats = {"restarts": restart, "sigma": operator.sigma, "krylov_dim": dim}
            logger.debug(f"Shift-invert converged after {restart} restart(s), lambda_1={theta[0]:.12g}")
            return _finish(A_csc, B_csc, theta[:m], X, config.tol_eig, krylov_basis=Q,
                           method="shift-invert", stats=stats)
        start = Q @ Y[:, :block]

    raise SolverError(
        f"shift-invert Krylov did not converge the first pair after {config.max_restarts} restarts "
        f"(relative residual {r1 / scale:.3e})"
    )


def smallest_eigpairs(
    A: Matrix,
    B: Matrix,
    m: int = 1,
    mode: Optional[str] = None,
    config: Optional[SolverConfig] = None
) -> RitzSet:
    """
    Smallest m eigenpairs of A x = lambda B x.

    Args:
        A, B: Symmetric matrices, B positive definite
        m: Number of pairs
        mode: "dense", "shift-invert" or "auto" (dense when n <= dense_threshold)
        config: Solver settings

    Returns:
        RitzSet with B-normalized, sign-fixed vectors

    Raises:
        ConfigurationError: If B is not positive definite
        SolverError: If the first pair does not converge
    """
    config = config or SolverConfig()
    n = A.shape[0]
    if not 1 <= m <= n:
        raise ConfigurationError(f"m must lie in 1..{n}, got {m}")
    mode = mode or config.mode
    if mode == "auto":
        mode = "dense" if n <= config.dense_threshold else "shift-invert"

    if mode == "dense":
        ritz = _dense_eigpairs(A, B, m, config)
    elif mode == "shift-invert":
        ritz = _shift_invert_eigpairs(A, B, m, config)
    else:
        raise ConfigurationError(f"Unknown solver mode '{mode}'")

    if not ritz.converged[0]:
        raise SolverError(f"first eigenpair not converged (residual {ritz.residual_norms[0]:.3e})")
    for k in range(1, ritz.m):
        if not ritz.converged[k]:
            logger.warning(f"Ritz pair {k + 1} is approximate (residual {ritz.residual_norms[k]:.3e})")
    return ritz


def min_eigenvalue(B: Matrix, config: Optional[SolverConfig] = None) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    identity = sp.identity(B.shape[0], format="csc")
    return float(smallest_eigpairs(B, identity, 1, config=config).values[0])
