"""Core numerical components for eigsur."""

from .bounds import BoundContext, BoundEstimate, bauer_fike, kato_temple, reference_bmin, select_bound
from .config import BoundConfig, GreedyConfig, PencilConfig, SolverConfig
from .eigcore import RitzSet, b_normalize, full_spectrum, residual, smallest_eigpairs
from .errors import EigsurError
from .expr import Expr, diff, evaluate, parse
from .pencil import AffinePencil, AffineTerm, load_pencil, save_pencil
from .reduction import Provenance, ReducedModel, Subspace
from .sensitivity import (
    BorderedSystem,
    DerivativeResult,
    eigenvalue_gradient,
    eigenvalue_hessian,
    eigenvector_derivative_bordered,
    eigenvector_derivative_spectral,
    projected_derivative_guess,
)

__all__ = [
    "AffinePencil",
    "AffineTerm",
    "BorderedSystem",
    "BoundConfig",
    "BoundContext",
    "BoundEstimate",
    "DerivativeResult",
    "EigsurError",
    "Expr",
    "GreedyConfig",
    "PencilConfig",
    "Provenance",
    "ReducedModel",
    "RitzSet",
    "SolverConfig",
    "Subspace",
    "b_normalize",
    "bauer_fike",
    "diff",
    "eigenvalue_gradient",
    "eigenvalue_hessian",
    "eigenvector_derivative_bordered",
    "eigenvector_derivative_spectral",
    "evaluate",
    "full_spectrum",
    "kato_temple",
    "load_pencil",
    "parse",
    "projected_derivative_guess",
    "reference_bmin",
    "residual",
    "save_pencil",
    "select_bound",
    "smallest_eigpairs",
]
