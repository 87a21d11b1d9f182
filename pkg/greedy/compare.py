"""Side-by-side runs of the four enrichment variants on one pencil."""

import dataclasses
from typing import Dict, Optional, Tuple

import pandas as pd

from core.config import GreedyConfig
from core.pencil import AffinePencil
from utils.logging import get_logger

from .builder import GreedyReport, SurrogateBuilder

logger = get_logger("greedy.compare")

VARIANTS = ((1, False), (2, False), (1, True), (2, True))

ROWS = (
    "dimension V",
    "nbr points",
    "total time",
    "time derivative (per vector)",
    "time eigenv (per vector)",
)


def _per_vector(total: float, count: int) -> float:
    return total / count if count else float("nan")


def variant_metrics(report: GreedyReport) -> Dict[str, float]:
    """The comparison rows for one finished run."""
    return {
        "dimension V": report.basis_dim,
        "nbr points": report.n_points,
        "total time": report.timings["total"],
        "time derivative (per vector)": _per_vector(report.timings["derivatives"], report.stats["derivative_solves"]),
        "time eigenv (per vector)": _per_vector(report.timings["eigensolve"], report.stats["eigenvectors_computed"]),
    }


def compare_variants(
    pencil: AffinePencil,
    base: Optional[GreedyConfig] = None
) -> Tuple[pd.DataFrame, Dict[str, GreedyReport]]:
    """
    Run 1 eigv, 2 eigv, 1 eigv + deriv and 2 eigv + deriv with otherwise equal settings.

    Returns:
        Tuple (table with one column per variant and the ROWS as index,
        reports keyed by variant name)
    """
    base = base or GreedyConfig()
    reports: Dict[str, GreedyReport] = {}
    context = None
    for m, use_derivatives in VARIANTS:
        config = dataclasses.replace(base, m=m, use_derivatives=use_derivatives)
        builder = SurrogateBuilder(pencil, config, context=context, run_id=f"compare-{config.variant_name()}")
        # bmin_ref depends only on the pencil; compute it once.
        context = builder.context
        report = builder.run()
        reports[config.variant_name()] = report
        logger.info(
            f"{config.variant_name()}: M={report.basis_dim}, points={report.n_points}, "
            f"converged={report.converged}"
        )

    table = pd.DataFrame({name: variant_metrics(report) for name, report in reports.items()})
    table = table.reindex(list(ROWS))
    return table, reports
