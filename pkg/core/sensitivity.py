"""
Eigenvalue and eigenvector derivatives with respect to the parameters.

The primary path solves the bordered system

    [ lam B - A   B x ] [ dx   ]   [ (dA - lam dB) x ]
    [ x^T B       0   ] [ dlam ] = [ -1/2 x^T dB x   ]

which stays nonsingular for a simple eigenvalue. The spectral expansion
over a full eigendecomposition is kept as an oracle for small problems.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from utils.logging import get_logger

from .eigcore import smallest_eigpairs
from .errors import NonSimpleEigenvalueError, SensitivityError, SingularSystemError

logger = get_logger("core.sensitivity")

Matrix = Union[np.ndarray, sp.spmatrix]

SIMPLICITY_THRESHOLD = 1e-8
HESSIAN_ASYMMETRY_TOL = 1e-6


@dataclass
class DerivativeResult:
    """Derivative of one eigenpair with respect to one parameter."""

    dx: np.ndarray
    dlambda: float
    gap: float
    method: str
    condition: Optional[float] = None
    residual: Optional[float] = None
    rescaled: bool = False


def check_simple(gap: Optional[float], threshold: float = SIMPLICITY_THRESHOLD):
    """Raise when the eigenvalue gap is at or below the simplicity threshold."""
    if gap is not None and not gap > threshold:
        raise NonSimpleEigenvalueError("Eigenvalue is not simple", gap=gap)


def eigenvalue_gradient(
    pencil,
    omega: Sequence[float],
    lam: float,
    x: np.ndarray,
    gap: Optional[float] = None,
    threshold: float = SIMPLICITY_THRESHOLD
) -> np.ndarray:
    """
    Gradient of a simple eigenvalue: x^T (dA_j - lam dB_j) x for j = 1..d.

    Args:
        pencil: AffinePencil (full or reduced)
        omega: Parameter point
        lam: Eigenvalue
        x: B-normalized eigenvector
        gap: Distance to the nearest other eigenvalue, checked when given

    Raises:
        NonSimpleEigenvalueError: If gap <= threshold
    """
    check_simple(gap, threshold)
    grad = np.empty(pencil.d)
    for j in range(1, pencil.d + 1):
        dA, dB = pencil.assemble_derivative(omega, j)
        grad[j - 1] = x @ (dA @ x) - lam * (x @ (dB @ x))
    return grad


def bordered_matrix(A: Matrix, B: Matrix, lam: float, x: np.ndarray) -> sp.csc_matrix:
    """The (n+1) x (n+1) bordered matrix [[lam B - A, B x], [x^T B, 0]]."""
    Bx = np.asarray(B @ x).reshape(-1, 1)
    top = sp.hstack([sp.csc_matrix(lam * B - A), sp.csc_matrix(Bx)])
    bottom = sp.hstack([sp.csc_matrix(Bx.T), sp.csc_matrix((1, 1))])
    return sp.vstack([top, bottom]).tocsc()


def bordered_rhs(dA: Matrix, dB: Matrix, lam: float, x: np.ndarray) -> np.ndarray:
    top = np.asarray(dA @ x - lam * (dB @ x)).reshape(-1)
    return np.append(top, -0.5 * (x @ (dB @ x)))


def bordered_residual(
    A: Matrix,
    B: Matrix,
    dA: Matrix,
    dB: Matrix,
    lam: float,
    x: np.ndarray,
    dx: np.ndarray,
    dlambda: float
) -> float:
    """Euclidean residual norm of (dx, dlambda) in the full bordered system."""
    Bx = np.asarray(B @ x).reshape(-1)
    top = lam * (B @ dx) - A @ dx + Bx * dlambda - (dA @ x - lam * (dB @ x))
    bottom = Bx @ dx + 0.5 * (x @ (dB @ x))
    return float(np.sqrt(np.linalg.norm(np.asarray(top).reshape(-1)) ** 2 + bottom ** 2))


class BorderedSystem:
    """
    One LU factorization of the bordered matrix, reused for every parameter.

    Args:
        A, B: Matrices at the parameter point
        lam: Simple eigenvalue
        x: B-normalized eigenvector
        gap: Distance to the nearest other eigenvalue (checked when given)
    """

    def __init__(
        self,
        A: Matrix,
        B: Matrix,
        lam: float,
        x: np.ndarray,
        gap: Optional[float] = None,
        threshold: float = SIMPLICITY_THRESHOLD
    ):
        check_simple(gap, threshold)
        self.lam = float(lam)
        self.x = x
        self.gap = float(gap) if gap is not None else float("nan")
        self.n = A.shape[0]
        self.matrix = bordered_matrix(A, B, lam, x)
        try:
            self.lu = spla.splu(self.matrix)
        except RuntimeError as e:
            raise SingularSystemError("Bordered matrix is singular (multiple eigenvalue?)", original_error=e)
        pivots = np.abs(self.lu.U.diagonal())
        if pivots.min() <= np.finfo(float).eps * pivots.max() * (self.n + 1):
            raise SingularSystemError(
                f"Bordered matrix is singular to working precision (min pivot {pivots.min():.3e})"
            )
        self._condition: Optional[float] = None

    @property
    def condition(self) -> float:
        """1-norm condition estimate of the bordered matrix."""
        if self._condition is None:
            shape = self.matrix.shape
            inverse = spla.LinearOperator(
                shape,
                matvec=lambda v: self.lu.solve(np.asarray(v, dtype=np.float64).reshape(-1)),
                rmatvec=lambda v: self.lu.solve(np.asarray(v, dtype=np.float64).reshape(-1), trans="T"),
                dtype=np.float64,
            )
            self._condition = float(spla.onenormest(self.matrix) * spla.onenormest(inverse))
        return self._condition

    def solve(self, dA: Matrix, dB: Matrix) -> DerivativeResult:
        rhs = bordered_rhs(dA, dB, self.lam, self.x)
        solution = self.lu.solve(rhs)
        if not np.all(np.isfinite(solution)):
            raise SingularSystemError("Bordered solve produced non-finite values")
        return DerivativeResult(dx=solution[:-1], dlambda=float(solution[-1]), gap=self.gap, method="bordered")

    def solve_all(self, pencil, omega: Sequence[float]) -> List[DerivativeResult]:
        """Derivatives for j = 1..d sharing this factorization."""
        condition = self.condition
        results = []
        for j in range(1, pencil.d + 1):
            result = self.solve(*pencil.assemble_derivative(omega, j))
            result.condition = condition
            results.append(result)
        return results


def eigenvector_derivative_bordered(
    A: Matrix,
    B: Matrix,
    dA: Matrix,
    dB: Matrix,
    lam: float,
    x: np.ndarray,
    gap: Optional[float] = None
) -> DerivativeResult:
    """
    Eigenvector and eigenvalue derivative for one parameter via the bordered system.

    Raises:
        NonSimpleEigenvalueError: If gap is given and not above the threshold
        SingularSystemError: If the bordered matrix is singular
    """
    system = BorderedSystem(A, B, lam, x, gap=gap)
    result = system.solve(dA, dB)
    result.condition = system.condition
    return result


def eigenvector_derivative_spectral(
    values: np.ndarray,
    X: np.ndarray,
    dA: Matrix,
    dB: Matrix,
    index: int = 0,
    tol: float = 1e-12
) -> np.ndarray:
    """
    Eigenvector derivative from a full B-orthonormal eigendecomposition.

    Args:
        values: All eigenvalues, ascending
        X: Eigenvectors with X^T B X = I
        dA, dB: Parameter derivatives of A and B
        index: Which eigenpair (0-based)

    Returns:
        dx = -1/2 (x_i^T dB x_i) x_i + sum_{k != i} x_k^T (dA - lam_i dB) x_i / (lam_i - lam_k) x_k
    """
    lam = values[index]
    xi = X[:, index]
    others = np.delete(np.arange(len(values)), index)
    if len(others):
        gap = float(np.min(np.abs(values[others] - lam)))
        if gap <= tol:
            raise NonSimpleEigenvalueError("Spectral derivative needs a simple eigenvalue", gap=gap)
    g = np.asarray(dA @ xi - lam * (dB @ xi)).reshape(-1)
    coeffs = X.T @ g
    denom = lam - values
    denom[index] = 1.0
    coeffs = coeffs / denom
    coeffs[index] = -0.5 * (xi @ (dB @ xi))
    return X @ coeffs


def eigenvalue_hessian(
    pencil,
    omega: Sequence[float],
    lam: float,
    x: np.ndarray,
    dx_all: Sequence[np.ndarray],
    gradient: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Second derivatives of a simple eigenvalue.

    H[j, k] = 2 x^T (dA_j - lam dB_j) dx_k
              + x^T (d2A_jk - dlam_k dB_j - lam d2B_jk) x

    Raises:
        SensitivityError: If H is asymmetric beyond 1e-6 relative, which means
            the dx inputs are inaccurate
    """
    d = pencil.d
    if len(dx_all) != d:
        raise SensitivityError(f"expected {d} derivative vectors, got {len(dx_all)}")
    if gradient is None:
        gradient = eigenvalue_gradient(pencil, omega, lam, x)
    first = [pencil.assemble_derivative(omega, j) for j in range(1, d + 1)]

    H = np.empty((d, d))
    for j in range(d):
        dA_j, dB_j = first[j]
        gx = np.asarray(dA_j @ x - lam * (dB_j @ x)).reshape(-1)
        dBx = x @ (dB_j @ x)
        for k in range(d):
            d2A, d2B = pencil.assemble_second_derivative(omega, j + 1, k + 1)
            curvature = x @ (d2A @ x) - lam * (x @ (d2B @ x)) - gradient[k] * dBx
            H[j, k] = 2.0 * (gx @ dx_all[k]) + curvature

    asymmetry = float(np.max(np.abs(H - H.T)))
    if asymmetry > HESSIAN_ASYMMETRY_TOL * (1.0 + float(np.max(np.abs(H)))):
        raise SensitivityError(f"Hessian asymmetry {asymmetry:.3e} exceeds tolerance; derivative inputs are inaccurate")
    return 0.5 * (H + H.T)


def projected_derivative_guess(
    V: np.ndarray,
    A: Matrix,
    B: Matrix,
    dA: Matrix,
    dB: Matrix,
    lam: float,
    x: np.ndarray
) -> DerivativeResult:
    """
    Initial guess for the bordered system from a Galerkin projection onto span(V).

    The projected (K+1) system is solved densely and lifted with V. When the
    lifted guess does not beat the zero vector in the full bordered residual,
    it is scaled by the residual-minimizing factor along its own direction
    and the result is flagged as rescaled.

    Args:
        V: n x K orthonormal basis, typically the solver's Krylov basis
        A, B, dA, dB: Matrices at the parameter point
        lam, x: Eigenpair whose derivative is sought

    Returns:
        DerivativeResult with method "projected-guess" and the full residual

    Raises:
        SingularSystemError: If the projected system is singular
    """
    V = np.asarray(V, dtype=np.float64)
    K = V.shape[1]
    Bx = np.asarray(B @ x).reshape(-1)
    AV = np.asarray(A @ V)
    BV = np.asarray(B @ V)

    projected = np.zeros((K + 1, K + 1))
    projected[:K, :K] = lam * (V.T @ BV) - V.T @ AV
    projected[:K, K] = V.T @ Bx
    projected[K, :K] = Bx @ V
    rhs_full = bordered_rhs(dA, dB, lam, x)
    rhs = np.append(V.T @ rhs_full[:-1], rhs_full[-1])

    try:
        lu, piv = scipy.linalg.lu_factor(projected, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise SingularSystemError("Projected bordered system could not be factored", original_error=e)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(float).eps * max(pivots.max(), 1.0) * (K + 1):
        raise SingularSystemError(f"Projected bordered system is singular (min pivot {pivots.min():.3e})")
    coef = scipy.linalg.lu_solve((lu, piv), rhs)

    dx = V @ coef[:K]
    dlambda = float(coef[K])
    guess_residual = bordered_residual(A, B, dA, dB, lam, x, dx, dlambda)
    zero_residual = float(np.linalg.norm(rhs_full))

    rescaled = False
    if guess_residual >= zero_residual and zero_residual > 0:
        # M z for the current guess z, then the 1-D least-squares factor.
        Mz = np.append(lam * (B @ dx) - A @ dx + Bx * dlambda, Bx @ dx)
        denom = float(Mz @ Mz)
        if denom > 0:
            alpha = float(Mz @ rhs_full) / denom
            dx, dlambda = alpha * dx, alpha * dlambda
            guess_residual = bordered_residual(A, B, dA, dB, lam, x, dx, dlambda)
            rescaled = True
            logger.info(f"Projected guess did not beat the zero vector; rescaled by {alpha:.6g}")

    return DerivativeResult(dx=dx, dlambda=dlambda, gap=float("nan"), method="projected-guess",
                            residual=guess_residual, rescaled=rescaled)


def reduced_sensitivities(model, omega: Sequence[float]) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Value, gradient and Hessian of the reduced minimal eigenvalue.

    The reduced problem is itself an affine pencil in the same coefficients,
    so the full-problem formulas apply unchanged.

    Args:
        model: ReducedModel
        omega: Parameter point

    Returns:
        Tuple (lambda_1^V, gradient, Hessian)
    """
    reduced = model.as_pencil()
    m = min(2, reduced.n)
    A, B = reduced.assemble(omega)
    ritz = smallest_eigpairs(A, B, m, mode="dense")
    lam, y = float(ritz.values[0]), ritz.vectors[:, 0]
    gap = ritz.gap if ritz.m > 1 else None
    gradient = eigenvalue_gradient(reduced, omega, lam, y, gap=gap)
    dy = [r.dx for r in BorderedSystem(A, B, lam, y, gap=gap).solve_all(reduced, omega)]
    hessian = eigenvalue_hessian(reduced, omega, lam, y, dy, gradient=gradient)
    return lam, gradient, hessian


def reduced_eigenvalue_gradient(model, omega: Sequence[float]) -> np.ndarray:
    return reduced_sensitivities(model, omega)[1]


def reduced_eigenvalue_hessian(model, omega: Sequence[float]) -> np.ndarray:
    return reduced_sensitivities(model, omega)[2]
