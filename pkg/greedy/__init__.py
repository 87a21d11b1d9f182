"""Greedy surrogate construction, evaluation, audit and comparison."""

from .audit import audit_surrogate, summarize_audit
from .builder import GreedyReport, GreedyState, SampleRecord, SurrogateBuilder, SweepResult, run
from .compare import compare_variants
from .grid import Grid, domain_grid, make_grid
from .surrogate import Surrogate, SurrogateValue, evaluate_surrogate

__all__ = [
    "Grid",
    "GreedyReport",
    "GreedyState",
    "SampleRecord",
    "Surrogate",
    "SurrogateBuilder",
    "SurrogateValue",
    "SweepResult",
    "audit_surrogate",
    "compare_variants",
    "domain_grid",
    "evaluate_surrogate",
    "make_grid",
    "run",
    "summarize_audit",
]
