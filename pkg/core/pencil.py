"""
Affine parametric pencils.

A pencil is A(omega) = sum theta_A_i(omega) A_i and
B(omega) = sum theta_B_i(omega) B_i over a box domain, with symmetric
sparse matrices A_i, B_i and coefficient expressions theta.
"""

import itertools
import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from utils.logging import get_logger

from .config import PencilConfig, SolverConfig
from .errors import ConfigurationError, DomainError, ExprEvaluationError
from .expr import Expr, parse

logger = get_logger("core.pencil")

Matrix = Union[np.ndarray, sp.spmatrix]


def as_symmetric_csc(matrix: Matrix, tol: float = 1e-12, name: str = "matrix") -> sp.csc_matrix:
    """
    Convert to a float64 CSC matrix and enforce symmetry.

    Args:
        matrix: Dense or sparse square matrix
        tol: Allowed max-norm asymmetry relative to the max-norm of the matrix
        name: Label used in error messages

    Returns:
        Symmetrized CSC matrix with sorted indices

    Raises:
        ConfigurationError: If the matrix is not square or not symmetric within tol
    """
    m = sp.csc_matrix(matrix, dtype=np.float64)
    if m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"{name} is not square: shape {m.shape}")
    scale = abs(m).max() if m.nnz else 0.0
    skew = abs(m - m.T).max() if m.nnz else 0.0
    if skew > tol * scale:
        raise ConfigurationError(f"{name} is not symmetric: max|M - M^T| = {skew:.3e}, max|M| = {scale:.3e}")
    sym = ((m + m.T) * 0.5).tocsc()
    sym.sort_indices()
    return sym


def read_matrix(path: Union[str, Path], tol: float = 1e-12) -> sp.csc_matrix:
    """Read a Matrix Market file (symmetric or general) as a symmetric CSC matrix."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Matrix file not found: {path}")
    try:
        data = scipy.io.mmread(str(path))
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"Failed to read matrix file {path}: {e}", original_error=e)
    return as_symmetric_csc(data, tol=tol, name=str(path))


def write_matrix(path: Union[str, Path], matrix: Matrix, comment: str = ""):
    """Write a matrix in Matrix Market format with full double precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if sp.issparse(matrix):
        scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment, precision=17)
    else:
        scipy.io.mmwrite(str(path), np.asarray(matrix, dtype=np.float64), comment=comment, precision=17)


@dataclass(frozen=True, eq=False)
class AffineTerm:
    """One coefficient expression times one fixed symmetric matrix."""

    coeff: Expr
    matrix: sp.csc_matrix


class AffinePencil:
    """
    Symmetric-definite pencil with affine parameter dependence.

    The pencil is immutable after construction; assemble methods are pure
    and may be called from several threads.
    """

    def __init__(
        self,
        d: int,
        domain: Sequence[Sequence[float]],
        terms_a: Sequence[AffineTerm],
        terms_b: Sequence[AffineTerm],
        config: Optional[PencilConfig] = None,
        source: Optional[Dict[str, Any]] = None
    ):
        self.config = config or PencilConfig()
        self.d = int(d)
        self.domain = np.array(domain, dtype=np.float64).reshape(-1, 2)
        self.terms_a = tuple(terms_a)
        self.terms_b = tuple(terms_b)
        self.source = dict(source or {})

        if self.d < 1:
            raise ConfigurationError(f"d must be >= 1, got {self.d}")
        if self.domain.shape[0] != self.d:
            raise ConfigurationError(f"domain has {self.domain.shape[0]} intervals but d={self.d}")
        if np.any(self.domain[:, 0] >= self.domain[:, 1]):
            raise ConfigurationError(f"degenerate domain interval in {self.domain.tolist()}")
        if not self.terms_a or not self.terms_b:
            raise ConfigurationError("pencil needs at least one A term and one B term")

        shapes = {t.matrix.shape for t in self.terms_a + self.terms_b}
        if len(shapes) != 1:
            raise ConfigurationError(f"matrix terms have different shapes: {sorted(shapes)}")
        self.n = shapes.pop()[0]

        for term in self.terms_a + self.terms_b:
            if term.coeff.max_parameter() > self.d:
                raise ConfigurationError(f"coefficient '{term.coeff}' references a parameter beyond d={self.d}")

        self._first: Dict[Tuple[str, int, int], Expr] = {}
        self._second: Dict[Tuple[str, int, int, int], Expr] = {}

    @classmethod
    def from_matrices(
        cls,
        d: int,
        domain: Sequence[Sequence[float]],
        terms_a: Sequence[Tuple[str, Matrix]],
        terms_b: Sequence[Tuple[str, Matrix]],
        config: Optional[PencilConfig] = None,
        source: Optional[Dict[str, Any]] = None
    ) -> "AffinePencil":
        """Build a pencil from (expression text, matrix) pairs."""
        config = config or PencilConfig()

        def build(terms, label):
            return [
                AffineTerm(parse(text, d), as_symmetric_csc(mat, config.symmetry_tol, f"{label}_{i + 1}"))
                for i, (text, mat) in enumerate(terms)
            ]

        return cls(d, domain, build(terms_a, "A"), build(terms_b, "B"), config=config, source=source)

    @property
    def center(self) -> np.ndarray:
        return self.domain.mean(axis=1)

    def corners(self) -> List[np.ndarray]:
        return [np.array(c) for c in itertools.product(*self.domain.tolist())]

    def is_dense(self, solver: Optional[SolverConfig] = None) -> bool:
        """Whether downstream algebra should use dense arrays under the solver's dense_threshold."""
        return self.n <= (solver or SolverConfig()).dense_threshold

    def check_point(self, omega: Sequence[float]) -> np.ndarray:
        """
        Validate a parameter point against the box domain.

        Raises:
            DomainError: If outside the domain and strict_domain is set
        """
        point = np.asarray(omega, dtype=np.float64).reshape(-1)
        if point.shape[0] != self.d:
            raise ConfigurationError(f"parameter point has {point.shape[0]} entries, expected d={self.d}")
        span = self.domain[:, 1] - self.domain[:, 0]
        slack = 1e-12 * span
        outside = (point < self.domain[:, 0] - slack) | (point > self.domain[:, 1] + slack)
        if np.any(outside):
            message = f"parameter point {point.tolist()} outside domain {self.domain.tolist()}"
            if self.config.strict_domain:
                raise DomainError(message)
            logger.warning(f"Extrapolating: {message}")
        return point

    # Coefficients

    def coefficients(self, omega: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        """Values of theta_A and theta_B at omega."""
        point = self.check_point(omega)
        return (
            np.array([t.coeff.evaluate(point) for t in self.terms_a]),
            np.array([t.coeff.evaluate(point) for t in self.terms_b]),
        )

    def _first_expr(self, side: str, i: int, j: int) -> Expr:
        key = (side, i, j)
        if key not in self._first:
            terms = self.terms_a if side == "A" else self.terms_b
            self._first[key] = terms[i].coeff.diff(j)
        return self._first[key]

    def _second_expr(self, side: str, i: int, j: int, k: int) -> Expr:
        # Mixed partials are always differentiated in sorted index order.
        j, k = min(j, k), max(j, k)
        key = (side, i, j, k)
        if key not in self._second:
            self._second[key] = self._first_expr(side, i, j).diff(k)
        return self._second[key]

    def _check_index(self, j: int):
        if not 1 <= j <= self.d:
            raise ConfigurationError(f"parameter index {j} outside 1..{self.d}")

    def derivative_coefficients(self, omega: Sequence[float], j: int) -> Tuple[np.ndarray, np.ndarray]:
        """Values of d theta / d omega_j at omega."""
        self._check_index(j)
        point = self.check_point(omega)
        return (
            np.array([self._first_expr("A", i, j).evaluate(point) for i in range(len(self.terms_a))]),
            np.array([self._first_expr("B", i, j).evaluate(point) for i in range(len(self.terms_b))]),
        )

    def second_derivative_coefficients(
        self, omega: Sequence[float], j: int, k: int
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Values of d^2 theta / d omega_j d omega_k at omega."""
        self._check_index(j)
        self._check_index(k)
        point = self.check_point(omega)
        return (
            np.array([self._second_expr("A", i, j, k).evaluate(point) for i in range(len(self.terms_a))]),
            np.array([self._second_expr("B", i, j, k).evaluate(point) for i in range(len(self.terms_b))]),
        )

    # Assembly

    def combine(self, weights: Sequence[float], side: str) -> sp.csc_matrix:
        """Weighted sum of the A (side='A') or B (side='B') matrix terms."""
        terms = self.terms_a if side == "A" else self.terms_b
        result = sp.csc_matrix((self.n, self.n))
        for weight, term in zip(weights, terms):
            if weight != 0.0:
                result = result + weight * term.matrix
        result = result.tocsc()
        result.sort_indices()
        return result

    def assemble(self, omega: Sequence[float]) -> Tuple[sp.csc_matrix, sp.csc_matrix]:
        """
        Assemble A(omega) and B(omega).

        Args:
            omega: Parameter point in the domain

        Returns:
            Tuple (A, B) of symmetric CSC matrices
        """
        theta_a, theta_b = self.coefficients(omega)
        return self.combine(theta_a, "A"), self.combine(theta_b, "B")

    def assemble_derivative(self, omega: Sequence[float], j: int) -> Tuple[sp.csc_matrix, sp.csc_matrix]:
        """Assemble dA/d omega_j and dB/d omega_j."""
        theta_a, theta_b = self.derivative_coefficients(omega, j)
        return self.combine(theta_a, "A"), self.combine(theta_b, "B")

    def assemble_second_derivative(
        self, omega: Sequence[float], j: int, k: int
    ) -> Tuple[sp.csc_matrix, sp.csc_matrix]:
        """Assemble d^2A/d omega_j d omega_k and d^2B/d omega_j d omega_k."""
        theta_a, theta_b = self.second_derivative_coefficients(omega, j, k)
        return self.combine(theta_a, "A"), self.combine(theta_b, "B")

    # Validation

    def validation_points(self) -> List[np.ndarray]:
        """The 2^d domain corners followed by the center."""
        return self.corners() + [self.center]

    def validate(self):
        """
        Probe the pencil at the corners and center of the domain.

        Checks that all coefficients evaluate finitely and that B(omega)
        is positive definite there. Coefficients using abs are accepted
        but reported, since they are not differentiable.

        Raises:
            ConfigurationError: If a coefficient is not finite or B is not SPD
        """
        for term in self.terms_a + self.terms_b:
            if term.coeff.uses_function("abs"):
                logger.warning(f"Coefficient '{term.coeff}' uses abs; derivatives through it are unavailable")

        for point in self.validation_points():
            try:
                _, B = self.assemble(point)
            except ExprEvaluationError as e:
                raise ConfigurationError(
                    f"Coefficient not finite at {point.tolist()}: {e}", original_error=e
                )
            if not is_positive_definite(B, dense=self.is_dense()):
                raise ConfigurationError(f"B(omega) is not positive definite at {point.tolist()}")

        logger.debug(f"Validated pencil n={self.n}, d={self.d} at {len(self.validation_points())} points")

    def __repr__(self):
        return (
            f"AffinePencil(n={self.n}, d={self.d}, terms_a={len(self.terms_a)}, "
            f"terms_b={len(self.terms_b)}, domain={self.domain.tolist()})"
        )


def is_positive_definite(B: Matrix, dense: bool = True) -> bool:
    """Cholesky probe for small matrices, smallest-eigenvalue probe otherwise."""
    if dense or not sp.issparse(B):
        matrix = B.toarray() if sp.issparse(B) else np.asarray(B)
        try:
            scipy.linalg.cholesky(matrix, lower=True)
        except np.linalg.LinAlgError:
            return False
        return True
    try:
        value = spla.eigsh(B, k=1, which="SA", return_eigenvectors=False, tol=1e-8)[0]
    except spla.ArpackError as e:
        logger.warning(f"ARPACK failed while probing definiteness: {e}")
        return False
    return value > 0


def load_pencil(path: Union[str, Path], config: Optional[PencilConfig] = None) -> AffinePencil:
    """
    Load a pencil definition file.

    The file (JSON or TOML) has the keys d, domain, termsA and termsB;
    each term is {coeff, matrix} with the matrix path relative to the file.

    Raises:
        ConfigurationError: For unreadable files, missing keys or invalid content
    """
    path = Path(path)
    config = config or PencilConfig()
    if not path.exists():
        raise ConfigurationError(f"Pencil file not found: {path}")
    try:
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as f:
                data = tomllib.load(f)
        else:
            with open(path, "r") as f:
                data = json.load(f)
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"Failed to read pencil file {path}: {e}", original_error=e)

    try:
        d = int(data["d"])
        domain = data["domain"]
        terms = {side: data[key] for side, key in (("A", "termsA"), ("B", "termsB"))}
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"Pencil file {path} is missing required key: {e}", original_error=e)

    def load_terms(entries, side):
        loaded = []
        for entry in entries:
            try:
                coeff, matrix_path = entry["coeff"], entry["matrix"]
            except (KeyError, TypeError) as e:
                raise ConfigurationError(f"Invalid {side} term in {path}: {entry}", original_error=e)
            matrix = read_matrix(path.parent / matrix_path, tol=config.symmetry_tol)
            loaded.append(AffineTerm(parse(str(coeff), d), matrix))
        return loaded

    source = dict(data.get("source", {}))
    source.setdefault("pencil", str(path))
    pencil = AffinePencil(d, domain, load_terms(terms["A"], "A"), load_terms(terms["B"], "B"),
                          config=config, source=source)
    pencil.validate()
    logger.info(f"Loaded {pencil} from {path}")
    return pencil


def save_pencil(pencil: AffinePencil, path: Union[str, Path]) -> Path:
    """
    Write a pencil definition file plus one Matrix Market file per term.

    The definition is always JSON; any other suffix is replaced by .json.

    Returns:
        Path of the definition file actually written
    """
    path = Path(path)
    if path.suffix.lower() != ".json":
        json_path = path.with_suffix(".json")
        logger.warning(f"Pencil definitions are written as JSON; saving {path} as {json_path}")
        path = json_path
    path.parent.mkdir(parents=True, exist_ok=True)
    stem = path.stem

    def dump_terms(terms, side):
        entries = []
        for i, term in enumerate(terms, start=1):
            name = f"{stem}_{side.lower()}_{i}.mtx"
            write_matrix(path.parent / name, term.matrix, comment=f"{side}_{i} coefficient {term.coeff}")
            entries.append({"coeff": str(term.coeff), "matrix": name})
        return entries

    data = {
        "d": pencil.d,
        "domain": pencil.domain.tolist(),
        "termsA": dump_terms(pencil.terms_a, "A"),
        "termsB": dump_terms(pencil.terms_b, "B"),
    }
    if pencil.source:
        data["source"] = pencil.source
    with open(path, "w") as f:
        json.dump(data, f, indent=2, default=str)
    logger.info(f"Saved pencil definition to {path}")
    return path
