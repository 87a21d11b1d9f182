"""
Certified surrogate for lambda_1(omega): evaluation and persistence.

A surrogate directory contains manifest.json, basis.mtx and one Matrix
Market file per reduced and tall term, so evaluation never needs the full
matrices.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import scipy.io

from core.bounds import BoundContext, BoundEstimate, select_bound
from core.config import PencilConfig
from core.errors import ConfigurationError
from core.expr import parse
from core.pencil import write_matrix
from core.reduction import Provenance, ReducedModel, Subspace
from utils.logging import get_logger

logger = get_logger("greedy.surrogate")

FORMAT_VERSION = 1
MANIFEST = "manifest.json"


@dataclass
class SurrogateValue:
    """Surrogate output at one parameter point."""

    omega: np.ndarray
    lambda1: float
    bound: float
    gap: float
    method: str
    fallback: bool = False


def reduced_pair_count(m: int, policy: str) -> int:
    """Reduced eigenvalues needed for the bound: 2 when a gap is used."""
    return 2 if (m > 1 or policy == "kato-temple") else 1


def estimate_bound(model: ReducedModel, context: BoundContext, m: int, omega: Sequence[float]) -> SurrogateValue:
    """
    Reduced solve, fast residual and selected bound at omega.

    The gap estimate is lambda_2^V - lambda_1^V when the reduced model has
    at least two dimensions; otherwise it is undefined and Kato-Temple
    falls back to Bauer-Fike.
    """
    k = min(reduced_pair_count(m, context.policy), model.dimension)
    values, Y, _ = model.reduced_min_eigpairs(omega, k, lift=False)
    res_norm = model.fast_residual_norm(omega, values[0], Y[:, 0])
    gap = float(values[1] - values[0]) if k > 1 else float("nan")
    estimate: BoundEstimate = select_bound(m, res_norm, gap if k > 1 else None, context)
    return SurrogateValue(omega=np.asarray(omega, dtype=np.float64), lambda1=float(values[0]),
                          bound=estimate.value, gap=gap, method=estimate.method, fallback=estimate.fallback)


class Surrogate:
    """
    Reduced model plus bound context.

    Args:
        model: Projected pencil on the final basis
        context: Bound reference data
        m: Eigenvectors per sample used while building (selects the bound)
        tol: Target tolerance of the build
        source: How to rebuild the full pencil (fixture name/params or file path)
        samples: Sample log of the build
    """

    def __init__(
        self,
        model: ReducedModel,
        context: BoundContext,
        m: int = 1,
        tol: float = 1e-5,
        source: Optional[Dict[str, Any]] = None,
        samples: Optional[List[Dict[str, Any]]] = None
    ):
        self.model = model
        self.context = context
        self.m = int(m)
        self.tol = float(tol)
        self.source = dict(source or {})
        self.samples = list(samples or [])

    @property
    def dimension(self) -> int:
        return self.model.dimension

    @property
    def d(self) -> int:
        return self.model.d

    def evaluate(self, omega: Sequence[float]) -> SurrogateValue:
        """lambda_1^V(omega), its error bound and the reduced gap estimate."""
        return estimate_bound(self.model, self.context, self.m, omega)

    def evaluate_points(self, points: Sequence[Sequence[float]]) -> pd.DataFrame:
        """Evaluate at several points; one row per point (w1.., lambda, bound, gap)."""
        rows = []
        for omega in points:
            value = self.evaluate(omega)
            row = {f"w{j + 1}": float(w) for j, w in enumerate(value.omega)}
            row.update({"lambda": value.lambda1, "bound": value.bound, "gap": value.gap})
            rows.append(row)
        columns = [f"w{j + 1}" for j in range(self.d)] + ["lambda", "bound", "gap"]
        return pd.DataFrame(rows, columns=columns)

    # Persistence

    def manifest(self) -> Dict[str, Any]:
        model = self.model
        return {
            "formatVersion": FORMAT_VERSION,
            "source": self.source,
            "n": model.n,
            "d": model.d,
            "domain": model.domain.tolist(),
            "coeffsA": [str(c) for c in model.coeffs_a],
            "coeffsB": [str(c) for c in model.coeffs_b],
            "M": model.dimension,
            "tol": "inf" if np.isinf(self.tol) else self.tol,
            "m": self.m,
            "strictDomain": model.config.strict_domain,
            "deflationTol": model.subspace.deflation_tol,
            "boundContext": self.context.to_dict(),
            "provenance": [p.to_dict() for p in model.subspace.provenance],
            "samples": self.samples,
        }

    def save(self, directory: Union[str, Path]) -> Path:
        """Write the surrogate directory; returns its path."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        model = self.model
        write_matrix(directory / "basis.mtx", model.basis, comment="reduced basis V")
        for i, (R, T) in enumerate(zip(model.reduced_a, model.tall_a), start=1):
            write_matrix(directory / f"reduced_a_{i}.mtx", R)
            write_matrix(directory / f"tall_a_{i}.mtx", T)
        for i, (R, T) in enumerate(zip(model.reduced_b, model.tall_b), start=1):
            write_matrix(directory / f"reduced_b_{i}.mtx", R)
            write_matrix(directory / f"tall_b_{i}.mtx", T)
        with open(directory / MANIFEST, "w") as f:
            json.dump(self.manifest(), f, indent=2, default=str)
        logger.info(f"Saved surrogate (M={self.dimension}) to {directory}")
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "Surrogate":
        """
        Read a surrogate directory.

        Raises:
            ConfigurationError: For a missing or corrupted manifest, missing
                matrix files or inconsistent shapes
        """
        directory = Path(directory)
        manifest_path = directory / MANIFEST
        if not manifest_path.exists():
            raise ConfigurationError(f"Surrogate manifest not found: {manifest_path}")
        try:
            with open(manifest_path, "r") as f:
                manifest = json.load(f)
            version = int(manifest["formatVersion"])
            n, d, M = int(manifest["n"]), int(manifest["d"]), int(manifest["M"])
            coeffs_a = [parse(text, d) for text in manifest["coeffsA"]]
            coeffs_b = [parse(text, d) for text in manifest["coeffsB"]]
            domain = np.array(manifest["domain"], dtype=np.float64)
            context = BoundContext.from_dict(manifest["boundContext"])
            provenance = tuple(Provenance.from_dict(p) for p in manifest["provenance"])
            tol = float("inf") if manifest["tol"] == "inf" else float(manifest["tol"])
            m = int(manifest["m"])
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise ConfigurationError(f"Corrupted surrogate manifest {manifest_path}: {e}", original_error=e)
        if version != FORMAT_VERSION:
            raise ConfigurationError(f"Unsupported surrogate format version {version}")

        def read(name: str, shape) -> np.ndarray:
            path = directory / name
            if not path.exists():
                raise ConfigurationError(f"Surrogate file missing: {path}")
            try:
                data = scipy.io.mmread(str(path))
            except (OSError, ValueError) as e:
                raise ConfigurationError(f"Failed to read {path}: {e}", original_error=e)
            data = data.toarray() if hasattr(data, "toarray") else np.asarray(data, dtype=np.float64)
            if data.shape != shape:
                raise ConfigurationError(f"{path} has shape {data.shape}, expected {shape}")
            return data

        basis = read("basis.mtx", (n, M))
        if len(provenance) != M:
            raise ConfigurationError(f"manifest lists {len(provenance)} provenance records for M={M}")
        subspace = Subspace(basis=basis, provenance=provenance,
                            deflation_tol=float(manifest.get("deflationTol", 1e-10)))
        model = ReducedModel(
            subspace, coeffs_a, coeffs_b, domain,
            [read(f"reduced_a_{i}.mtx", (M, M)) for i in range(1, len(coeffs_a) + 1)],
            [read(f"reduced_b_{i}.mtx", (M, M)) for i in range(1, len(coeffs_b) + 1)],
            [read(f"tall_a_{i}.mtx", (n, M)) for i in range(1, len(coeffs_a) + 1)],
            [read(f"tall_b_{i}.mtx", (n, M)) for i in range(1, len(coeffs_b) + 1)],
            config=PencilConfig(strict_domain=bool(manifest.get("strictDomain", True))),
        )
        logger.info(f"Loaded surrogate (M={M}, n={n}) from {directory}")
        return cls(model, context, m=m, tol=tol, source=manifest.get("source"), samples=manifest.get("samples"))


def evaluate_surrogate(surrogate: Surrogate, omega: Sequence[float]) -> SurrogateValue:
    return surrogate.evaluate(omega)
