"""
Reduced subspaces and projected pencils.

Subspace holds a Euclidean-orthonormal basis V with one provenance record
per column. ReducedModel holds the projected terms V^T A_i V, V^T B_i V and
the tall products A_i V, B_i V, from which reduced eigenpairs and residual
norms are computed without touching the full matrices.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from utils.logging import get_logger

from .config import PencilConfig, as_point
from .errors import ConfigurationError
from .expr import Expr
from .pencil import AffinePencil, AffineTerm

logger = get_logger("core.reduction")

KIND_EIGENVECTOR = "eigvec"
KIND_DERIVATIVE = "deriv"


@dataclass(frozen=True)
class Provenance:
    """Where a basis vector came from: eigenvector #index or derivative along w_index at omega."""

    omega: Tuple[float, ...]
    kind: str
    index: int
    iteration: int = 0

    @property
    def label(self) -> str:
        return f"{self.kind} {self.index}"

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["omega"] = list(self.omega)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Provenance":
        return cls(omega=as_point(data["omega"]), kind=data["kind"], index=int(data["index"]),
                   iteration=int(data.get("iteration", 0)))


@dataclass(frozen=True, eq=False)
class Subspace:
    """
    Orthonormal basis with provenance.

    Snapshots are immutable; extend returns a new Subspace whose
    `deflated` field lists the candidates dropped by that extension.
    """

    basis: np.ndarray
    provenance: Tuple[Provenance, ...] = ()
    deflation_tol: float = 1e-10
    deflated: Tuple[Provenance, ...] = field(default=())

    @classmethod
    def empty(cls, n: int, deflation_tol: float = 1e-10) -> "Subspace":
        return cls(basis=np.zeros((n, 0)), deflation_tol=deflation_tol)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    def orthogonality_error(self) -> float:
        """max |V^T V - I|."""
        if self.dimension == 0:
            return 0.0
        return float(np.max(np.abs(self.basis.T @ self.basis - np.eye(self.dimension))))

    def extend(self, vectors: Sequence[np.ndarray], provenance: Sequence[Provenance]) -> "Subspace":
        """
        Append vectors by modified Gram-Schmidt with one reorthogonalization pass.

        A candidate whose orthogonal component has norm <= deflation_tol times
        its original norm is dropped and reported in the result's `deflated`.

        Args:
            vectors: Candidate vectors of length n
            provenance: One record per candidate

        Returns:
            New Subspace containing the old columns followed by the accepted ones
        """
        if len(vectors) != len(provenance):
            raise ConfigurationError(f"{len(vectors)} vectors but {len(provenance)} provenance records")
        columns = [self.basis[:, k] for k in range(self.dimension)]
        records = list(self.provenance)
        deflated = []
        for vector, record in zip(vectors, provenance):
            w = np.array(vector, dtype=np.float64).reshape(-1)
            if w.shape[0] != self.n:
                raise ConfigurationError(f"vector of length {w.shape[0]} does not match n={self.n}")
            original = np.linalg.norm(w)
            if original > 0:
                for _ in range(2):
                    for q in columns:
                        w -= (q @ w) * q
            norm = np.linalg.norm(w)
            if original == 0 or norm <= self.deflation_tol * original:
                deflated.append(record)
                continue
            columns.append(w / norm)
            records.append(record)

        basis = np.column_stack(columns) if columns else np.zeros((self.n, 0))
        if deflated:
            logger.debug(f"Deflated {len(deflated)} candidate(s): {[r.label for r in deflated]}")
        return Subspace(basis=basis, provenance=tuple(records), deflation_tol=self.deflation_tol,
                        deflated=tuple(deflated))


def _symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


class ReducedModel:
    """
    Projected affine pencil on a subspace.

    Args:
        subspace: Basis V and its provenance
        coeffs_a, coeffs_b: Coefficient expressions shared with the full pencil
        domain: Parameter box
        reduced_a, reduced_b: V^T A_i V and V^T B_i V
        tall_a, tall_b: A_i V and B_i V
        config: Domain strictness for evaluation
    """

    def __init__(
        self,
        subspace: Subspace,
        coeffs_a: Sequence[Expr],
        coeffs_b: Sequence[Expr],
        domain: np.ndarray,
        reduced_a: Sequence[np.ndarray],
        reduced_b: Sequence[np.ndarray],
        tall_a: Sequence[np.ndarray],
        tall_b: Sequence[np.ndarray],
        config: Optional[PencilConfig] = None
    ):
        self.subspace = subspace
        self.coeffs_a = tuple(coeffs_a)
        self.coeffs_b = tuple(coeffs_b)
        self.domain = np.asarray(domain, dtype=np.float64)
        self.reduced_a = [np.asarray(R) for R in reduced_a]
        self.reduced_b = [np.asarray(R) for R in reduced_b]
        self.tall_a = [np.asarray(T) for T in tall_a]
        self.tall_b = [np.asarray(T) for T in tall_b]
        self.config = config or PencilConfig()
        self._pencil: Optional[AffinePencil] = None

        M = subspace.dimension
        for R in self.reduced_a + self.reduced_b:
            if R.shape != (M, M):
                raise ConfigurationError(f"reduced term of shape {R.shape} does not match M={M}")
        for T in self.tall_a + self.tall_b:
            if T.shape != (subspace.n, M):
                raise ConfigurationError(f"tall term of shape {T.shape} does not match ({subspace.n}, {M})")

    @property
    def dimension(self) -> int:
        return self.subspace.dimension

    @property
    def n(self) -> int:
        return self.subspace.n

    @property
    def d(self) -> int:
        return self.domain.shape[0]

    @property
    def basis(self) -> np.ndarray:
        return self.subspace.basis

    def as_pencil(self) -> AffinePencil:
        """The reduced problem as an M x M affine pencil with the same coefficients."""
        if self._pencil is None:
            if self.dimension == 0:
                raise ConfigurationError("reduced model is empty")
            self._pencil = AffinePencil(
                self.d,
                self.domain,
                [AffineTerm(c, sp.csc_matrix(R)) for c, R in zip(self.coeffs_a, self.reduced_a)],
                [AffineTerm(c, sp.csc_matrix(R)) for c, R in zip(self.coeffs_b, self.reduced_b)],
                config=self.config,
            )
        return self._pencil

    def coefficients(self, omega: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        return self.as_pencil().coefficients(omega)

    def reduced_matrices(self, omega: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        theta_a, theta_b = self.coefficients(omega)
        return (
            sum(t * R for t, R in zip(theta_a, self.reduced_a)),
            sum(t * R for t, R in zip(theta_b, self.reduced_b)),
        )

    def reduced_min_eigpairs(
        self, omega: Sequence[float], m: int = 1, lift: bool = True
    ) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
        """
        Smallest eigenpairs of the reduced problem at omega.

        Args:
            omega: Parameter point
            m: Number of pairs (capped at the reduced dimension)
            lift: Also return V times the coefficient vectors

        Returns:
            Tuple (values ascending, coefficient vectors M x m, lifted vectors n x m or None);
            lifted vectors are B(omega)-normalized

        Raises:
            ConfigurationError: If the reduced B is not positive definite
        """
        Ar, Br = self.reduced_matrices(omega)
        m = min(m, self.dimension)
        try:
            values, Y = scipy.linalg.eigh(Ar, Br, subset_by_index=[0, m - 1])
        except np.linalg.LinAlgError as e:
            raise ConfigurationError(
                f"reduced B is not positive definite at {list(omega)}: {e}", original_error=e
            )
        lifted = self.basis @ Y
        for k in range(m):
            idx = int(np.argmax(np.abs(lifted[:, k])))
            if lifted[idx, k] < 0:
                Y[:, k] = -Y[:, k]
                lifted[:, k] = -lifted[:, k]
        return values, Y, (lifted if lift else None)

    def fast_residual_norm(self, omega: Sequence[float], lam: float, y: np.ndarray) -> float:
        """||A(omega) V y - lam B(omega) V y|| from the tall products."""
        theta_a, theta_b = self.coefficients(omega)
        r = sum(t * (T @ y) for t, T in zip(theta_a, self.tall_a))
        r = r - lam * sum(t * (T @ y) for t, T in zip(theta_b, self.tall_b))
        return float(np.linalg.norm(r))

    @classmethod
    def project(
        cls,
        pencil: AffinePencil,
        subspace: Subspace,
        previous: Optional["ReducedModel"] = None
    ) -> "ReducedModel":
        """
        Project a pencil onto a subspace.

        When `previous` was projected onto a prefix of the same basis, only
        the blocks of the appended columns are computed.
        """
        V = subspace.basis
        M = subspace.dimension
        start = 0
        if previous is not None and previous.dimension <= M and previous.n == subspace.n:
            prefix = previous.dimension
            if np.array_equal(previous.basis, V[:, :prefix]):
                start = prefix

        def project_terms(terms, old_reduced, old_tall):
            reduced, tall = [], []
            V_new = V[:, start:]
            for i, term in enumerate(terms):
                T_new = np.asarray(term.matrix @ V_new)
                if start == 0:
                    T = T_new
                    R = _symmetrize(V.T @ T)
                else:
                    T = np.hstack([old_tall[i], T_new])
                    cross = V[:, :start].T @ T_new
                    R = np.empty((M, M))
                    R[:start, :start] = old_reduced[i]
                    R[:start, start:] = cross
                    R[start:, :start] = cross.T
                    R[start:, start:] = _symmetrize(V_new.T @ T_new)
                reduced.append(R)
                tall.append(T)
            return reduced, tall

        old = previous if start > 0 else None
        reduced_a, tall_a = project_terms(pencil.terms_a, old and old.reduced_a, old and old.tall_a)
        reduced_b, tall_b = project_terms(pencil.terms_b, old and old.reduced_b, old and old.tall_b)
        if start > 0:
            logger.debug(f"Incremental projection: {M - start} new column(s), M={M}")

        return cls(
            subspace,
            [t.coeff for t in pencil.terms_a],
            [t.coeff for t in pencil.terms_b],
            pencil.domain,
            reduced_a, reduced_b, tall_a, tall_b,
            config=pencil.config,
        )

    def __repr__(self):
        return f"ReducedModel(n={self.n}, M={self.dimension}, d={self.d})"


def extend(subspace: Subspace, vectors: Sequence[np.ndarray], provenance: Sequence[Provenance]) -> Subspace:
    return subspace.extend(vectors, provenance)


def project(pencil: AffinePencil, subspace: Subspace, previous: Optional[ReducedModel] = None) -> ReducedModel:
    return ReducedModel.project(pencil, subspace, previous)
