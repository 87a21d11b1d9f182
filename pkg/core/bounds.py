"""
A posteriori error bounds for an approximate minimal eigenpair.

Both bounds use a single reference value bmin = lambda_min(B(omega_ref)),
computed once per pencil and reused over the whole domain:

- Bauer-Fike:  ||r|| / sqrt(bmin)
- Kato-Temple: ||r||^2 / (bmin * delta), with delta the gap to the second eigenvalue

When delta comes from the reduced problem the Kato-Temple value is an
estimate, since its interval hypothesis cannot be checked.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

from utils.logging import get_logger

from .config import BoundConfig, SolverConfig, as_point
from .eigcore import min_eigenvalue
from .errors import ConfigurationError

logger = get_logger("core.bounds")

BAUER_FIKE = "bauer-fike"
KATO_TEMPLE = "kato-temple"


@dataclass(frozen=True)
class BoundContext:
    """Reference data shared by every bound evaluation of one pencil."""

    bmin_ref: float
    omega_ref: Tuple[float, ...]
    policy: str = "auto"
    safety_factor: float = 1.0
    delta_floor: float = 1e-12

    def __post_init__(self):
        if not self.bmin_ref > 0:
            raise ConfigurationError(f"bmin_ref must be positive, got {self.bmin_ref}")
        if not 0 < self.safety_factor <= 1:
            raise ConfigurationError(f"safety_factor must lie in (0, 1], got {self.safety_factor}")

    @property
    def bmin(self) -> float:
        """Reference value after the safety factor."""
        return self.bmin_ref * self.safety_factor

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bminRef": self.bmin_ref,
            "omegaRef": list(self.omega_ref),
            "policy": self.policy,
            "safetyFactor": self.safety_factor,
            "deltaFloor": self.delta_floor,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BoundContext":
        return cls(
            bmin_ref=float(data["bminRef"]),
            omega_ref=as_point(data["omegaRef"]),
            policy=data.get("policy", "auto"),
            safety_factor=float(data.get("safetyFactor", 1.0)),
            delta_floor=float(data.get("deltaFloor", 1e-12)),
        )

    @classmethod
    def for_pencil(
        cls,
        pencil,
        config: Optional[BoundConfig] = None,
        solver: Optional[SolverConfig] = None
    ) -> "BoundContext":
        """Compute bmin at omega_ref (domain center by default) and bundle the bound settings."""
        config = config or BoundConfig()
        omega_ref = config.omega_ref if config.omega_ref is not None else tuple(pencil.center)
        bmin = reference_bmin(pencil, omega_ref, solver)
        return cls(bmin_ref=bmin, omega_ref=as_point(omega_ref), policy=config.policy,
                   safety_factor=config.safety_factor, delta_floor=config.delta_floor)


@dataclass(frozen=True)
class BoundEstimate:
    """A bound value, which formula produced it, and whether Kato-Temple fell back."""

    value: float
    method: str
    fallback: bool = False


def reference_bmin(pencil, omega_ref: Optional[Sequence[float]] = None,
                   solver: Optional[SolverConfig] = None) -> float:
    """
    Smallest eigenvalue of B at one reference parameter.

    Raises:
        ConfigurationError: If B(omega_ref) is not positive definite
    """
    omega_ref = pencil.center if omega_ref is None else omega_ref
    _, B = pencil.assemble(omega_ref)
    value = min_eigenvalue(B, solver or SolverConfig())
    if not value > 0:
        raise ConfigurationError(f"B is not positive definite at {list(omega_ref)} (lambda_min={value:.3e})")
    logger.debug(f"Reference lambda_min(B) = {value:.6g} at {list(omega_ref)}")
    return value


def bauer_fike(res_norm: float, ctx: BoundContext) -> float:
    """Bauer-Fike bound ||r|| / sqrt(bmin)."""
    return res_norm / math.sqrt(ctx.bmin)


def kato_temple(res_norm: float, delta: float, ctx: BoundContext) -> float:
    """
    Kato-Temple bound ||r||^2 / (bmin * delta).

    Raises:
        ConfigurationError: If delta is not a positive finite number
    """
    if delta is None or not math.isfinite(delta) or delta <= 0:
        raise ConfigurationError(f"Kato-Temple needs a positive finite gap, got {delta}")
    return res_norm ** 2 / (ctx.bmin * delta)


def select_bound(m: int, res_norm: float, gap_estimate: Optional[float], ctx: BoundContext) -> BoundEstimate:
    """
    Pick the bound for an approximate minimal eigenpair.

    With policy "auto", m > 1 uses Kato-Temple with the reduced gap
    lambda_2^V - lambda_1^V, and m = 1 uses Bauer-Fike. The policies
    "bauer-fike" and "kato-temple" force one formula.

    Kato-Temple falls back to Bauer-Fike (flagged) when the gap is missing,
    not finite or at most ctx.delta_floor.
    """
    if m < 1:
        raise ConfigurationError(f"m must be >= 1, got {m}")
    use_kato_temple = ctx.policy == KATO_TEMPLE or (ctx.policy == "auto" and m > 1)
    if not use_kato_temple:
        return BoundEstimate(bauer_fike(res_norm, ctx), BAUER_FIKE)
    delta = gap_estimate
    if delta is None or not math.isfinite(delta) or delta <= ctx.delta_floor:
        return BoundEstimate(bauer_fike(res_norm, ctx), BAUER_FIKE, fallback=True)
    return BoundEstimate(kato_temple(res_norm, delta, ctx), KATO_TEMPLE)
