"""
Configuration objects for eigsur.

Plain dataclasses with defaults; each validates itself on construction and
raises ConfigurationError for values that cannot work.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

from .errors import ConfigurationError

BOUND_POLICIES = ("auto", "bauer-fike", "kato-temple")
SOLVER_MODES = ("auto", "dense", "shift-invert")


@dataclass
class SolverConfig:
    """Settings for the fixed-parameter eigensolvers."""

    tol_eig: float = 1e-10
    max_restarts: int = 300
    krylov_dim: Optional[int] = None
    block_size: int = 2
    sigma: float = 0.0
    dense_threshold: int = 256
    oracle_cap: int = 500
    mode: str = "auto"
    seed: int = 0

    def __post_init__(self):
        if self.tol_eig <= 0:
            raise ConfigurationError(f"tol_eig must be positive, got {self.tol_eig}")
        if self.max_restarts < 1:
            raise ConfigurationError(f"max_restarts must be >= 1, got {self.max_restarts}")
        if self.krylov_dim is not None and self.krylov_dim < 2:
            raise ConfigurationError(f"krylov_dim must be >= 2, got {self.krylov_dim}")
        if self.block_size < 1:
            raise ConfigurationError(f"block_size must be >= 1, got {self.block_size}")
        if self.mode not in SOLVER_MODES:
            raise ConfigurationError(f"Unknown solver mode '{self.mode}', expected one of {SOLVER_MODES}")

    def krylov_dimension(self, m: int) -> int:
        """Krylov subspace dimension used for m requested pairs."""
        if self.krylov_dim is not None:
            return max(self.krylov_dim, m + 1)
        return max(20, m + 15)


@dataclass
class PencilConfig:
    """Settings for loading, validating and assembling affine pencils."""

    strict_domain: bool = True
    symmetry_tol: float = 1e-12

    def __post_init__(self):
        if self.symmetry_tol < 0:
            raise ConfigurationError("symmetry_tol must be nonnegative")


@dataclass
class BoundConfig:
    """Settings for the a posteriori error bounds."""

    policy: str = "auto"
    safety_factor: float = 1.0
    delta_floor: float = 1e-12
    omega_ref: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.policy not in BOUND_POLICIES:
            raise ConfigurationError(f"Unknown bound policy '{self.policy}', expected one of {BOUND_POLICIES}")
        if not 0 < self.safety_factor <= 1:
            raise ConfigurationError(f"safety_factor must lie in (0, 1], got {self.safety_factor}")
        if self.delta_floor < 0:
            raise ConfigurationError("delta_floor must be nonnegative")
        if self.omega_ref is not None:
            self.omega_ref = tuple(float(w) for w in self.omega_ref)


@dataclass
class GreedyConfig:
    """
    Inputs of the greedy subspace construction.

    Args:
        m: eigenvectors added per sample point
        use_derivatives: also add the eigenvector partial derivatives
        tol: target bound on |lambda_1^V - lambda_1| over the training grid
        n_max: iteration cap
        init_grid: points per dimension of the initial grid
        train_grid: points per dimension of the training grid
    """

    m: int = 1
    use_derivatives: bool = False
    tol: float = 1e-5
    n_max: int = 100
    init_grid: Tuple[int, ...] = (3, 3)
    train_grid: Tuple[int, ...] = (25, 25)
    simplicity_threshold: float = 1e-8
    deflation_tol: float = 1e-10
    saturation_skip: bool = True
    threads: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)
    bounds: BoundConfig = field(default_factory=BoundConfig)

    def __post_init__(self):
        self.init_grid = tuple(int(k) for k in self.init_grid)
        self.train_grid = tuple(int(k) for k in self.train_grid)
        if isinstance(self.solver, dict):
            self.solver = SolverConfig(**self.solver)
        if isinstance(self.bounds, dict):
            self.bounds = BoundConfig(**self.bounds)

        if self.m < 1:
            raise ConfigurationError(f"m must be >= 1, got {self.m}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if self.n_max < 0:
            raise ConfigurationError(f"n_max must be >= 0, got {self.n_max}")
        if self.threads < 1:
            raise ConfigurationError(f"threads must be >= 1, got {self.threads}")
        if len(self.init_grid) != len(self.train_grid):
            raise ConfigurationError(
                f"init_grid {self.init_grid} and train_grid {self.train_grid} differ in dimension"
            )
        if any(k < 2 for k in self.init_grid + self.train_grid):
            raise ConfigurationError("every grid dimension needs at least 2 points")
        if any(t <= i for i, t in zip(self.init_grid, self.train_grid)):
            raise ConfigurationError(
                f"train_grid {self.train_grid} must be strictly finer than init_grid {self.init_grid}"
            )

    def check_dimension(self, d: int):
        """Ensure the grids match a pencil with d parameters."""
        if len(self.init_grid) != d:
            raise ConfigurationError(f"grids have {len(self.init_grid)} dimensions but the pencil has d={d}")

    def variant_name(self) -> str:
        """Short label of the enrichment variant, e.g. '2 eigv + deriv'."""
        label = f"{self.m} eigv"
        return label + " + deriv" if self.use_derivatives else label

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if math.isinf(data["tol"]):
            data["tol"] = "inf"
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GreedyConfig":
        data = dict(data)
        if data.get("tol") == "inf":
            data["tol"] = math.inf
        return cls(**data)


def parse_counts(text: str) -> Tuple[int, ...]:
    """Parse a comma separated list of grid counts like '3,3'."""
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise ConfigurationError(f"Invalid grid specification '{text}'", original_error=e)


def parse_point(text: str) -> Tuple[float, ...]:
    """Parse a comma separated parameter point like '0.3,0.4'."""
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise ConfigurationError(f"Invalid parameter point '{text}'", original_error=e)


def as_point(omega: Sequence[float]) -> Tuple[float, ...]:
    return tuple(float(w) for w in omega)
