"""
Greedy construction of a reduced subspace for lambda_1(omega).

The builder enriches the subspace at the points of an initial grid, then
repeatedly sweeps the training grid for the largest error bound and
enriches at that point, until every training point is certified below the
tolerance or the iteration cap is reached.
"""

import json
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.bounds import BoundContext
from core.config import GreedyConfig, as_point
from core.eigcore import smallest_eigpairs
from core.errors import NonSimpleEigenvalueError, SingularSystemError
from core.pencil import AffinePencil
from core.reduction import KIND_DERIVATIVE, KIND_EIGENVECTOR, Provenance, ReducedModel, Subspace
from core.sensitivity import BorderedSystem
from utils.logging import get_logger

from .grid import Grid, domain_grid
from .surrogate import Surrogate, estimate_bound


@dataclass
class SampleRecord:
    """One enrichment: where, when, what was added and what was deflated."""

    omega: Tuple[float, ...]
    kind: str
    iteration: int
    added: List[str] = field(default_factory=list)
    deflated: List[str] = field(default_factory=list)
    gap: float = float("nan")
    derivatives_skipped: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "omega": list(self.omega),
            "kind": self.kind,
            "iteration": self.iteration,
            "added": self.added,
            "deflated": self.deflated,
            "gap": None if not np.isfinite(self.gap) else self.gap,
            "derivativesSkipped": self.derivatives_skipped,
        }


@dataclass
class Candidates:
    """Vectors computed at one parameter point, before orthonormalization."""

    omega: Tuple[float, ...]
    vectors: List[np.ndarray]
    provenance: List[Provenance]
    gap: float
    derivatives_skipped: bool
    eigensolve_time: float = 0.0
    derivative_time: float = 0.0
    pairs_computed: int = 0


@dataclass
class GreedyState:
    """
    Mutable state of one greedy run.

    bounds holds the stored u(omega) for every training point; it only
    decreases. active marks points still in the training set.
    """

    train: Grid
    bounds: np.ndarray
    active: np.ndarray
    model: ReducedModel
    samples: List[SampleRecord] = field(default_factory=list)
    iteration: int = 0
    max_bound_trace: List[float] = field(default_factory=list)
    selected: List[int] = field(default_factory=list)
    removed_at: Dict[int, int] = field(default_factory=dict)

    @property
    def subspace(self) -> Subspace:
        return self.model.subspace

    @property
    def n_active(self) -> int:
        return int(self.active.sum())


@dataclass
class SweepResult:
    """Outcome of one bound sweep over the active training points."""

    max_index: Optional[int]
    max_bound: float
    evaluated: int
    skipped: int
    pruned: List[int]

    @property
    def max_point(self) -> Optional[int]:
        return self.max_index


@dataclass
class GreedyReport:
    """Summary of a finished run, with the resulting surrogate."""

    converged: bool
    iterations: int
    basis_dim: int
    samples: List[SampleRecord]
    max_bound_trace: List[float]
    selected: List[int]
    timings: Dict[str, float]
    stats: Dict[str, int]
    config: GreedyConfig
    surrogate: Surrogate
    run_id: str = ""

    @property
    def n_points(self) -> int:
        return len(self.samples)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "runId": self.run_id,
            "converged": self.converged,
            "iterations": self.iterations,
            "basisDim": self.basis_dim,
            "samples": [s.to_dict() for s in self.samples],
            "selectedIndices": self.selected,
            "maxBoundTrace": self.max_bound_trace,
            "timings": self.timings,
            "stats": self.stats,
            "config": self.config.to_dict(),
        }

    def save(self, output_dir: Union[str, Path]) -> Path:
        """Write report.json, max_bound_trace.csv and the surrogate directory."""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        with open(output_dir / "report.json", "w") as f:
            json.dump(self.to_dict(), f, indent=2, default=str)
        trace = pd.DataFrame({
            "iteration": list(range(len(self.max_bound_trace))),
            "maxBound": self.max_bound_trace,
        })
        trace.to_csv(output_dir / "max_bound_trace.csv", index=False)
        self.surrogate.save(output_dir / "surrogate")
        return output_dir


class SurrogateBuilder:
    """
    Runs the greedy subspace construction for one pencil.

    Args:
        pencil: Validated affine pencil
        config: Greedy settings
        context: Bound reference data; computed at the domain center when omitted
        run_id: Identifier used in logger names and reports
    """

    def __init__(
        self,
        pencil: AffinePencil,
        config: Optional[GreedyConfig] = None,
        context: Optional[BoundContext] = None,
        run_id: Optional[str] = None
    ):
        self.pencil = pencil
        self.config = config or GreedyConfig()
        self.config.check_dimension(pencil.d)
        self.run_id = run_id or uuid.uuid4().hex[:8]
        self.logger = get_logger(f"build.{self.run_id}")
        self._pool: Optional[ThreadPoolExecutor] = None

        self.stats = {
            "eigensolves": 0,
            "eigenvectors_computed": 0,
            "eigenvectors_added": 0,
            "derivative_solves": 0,
            "derivatives_added": 0,
            "derivatives_skipped": 0,
            "deflations": 0,
            "bound_evaluations": 0,
            "bound_evaluations_skipped": 0,
            "kato_temple_fallbacks": 0,
        }
        self.timings = {
            "reference": 0.0,
            "initialization": 0.0,
            "eigensolve": 0.0,
            "derivatives": 0.0,
            "orthonormalization": 0.0,
            "projection": 0.0,
            "sweep": 0.0,
            "total": 0.0,
        }

        start = time.time()
        self.context = context or BoundContext.for_pencil(pencil, self.config.bounds, self.config.solver)
        self.timings["reference"] = time.time() - start
        self.logger.info(
            f"Builder ready: {pencil}, variant '{self.config.variant_name()}', "
            f"tol={self.config.tol}, bmin_ref={self.context.bmin_ref:.6g}"
        )

    # Enrichment

    def compute_candidates(self, omega: Sequence[float], iteration: int) -> Candidates:
        """
        Eigenvectors (and optionally eigenvector derivatives) at one point.

        Derivatives need a simple lambda_1, so when they are requested the
        solver computes at least two pairs to measure the gap.
        """
        cfg = self.config
        point = as_point(omega)
        A, B = self.pencil.assemble(point)

        n_pairs = max(cfg.m, 2) if cfg.use_derivatives else cfg.m
        n_pairs = min(n_pairs, self.pencil.n)
        start = time.time()
        ritz = smallest_eigpairs(A, B, n_pairs, config=cfg.solver)
        elapsed = time.time() - start

        vectors = [ritz.vectors[:, k] for k in range(min(cfg.m, ritz.m))]
        provenance = [Provenance(point, KIND_EIGENVECTOR, k + 1, iteration) for k in range(len(vectors))]
        derivative_time = 0.0
        skipped = False

        if cfg.use_derivatives:
            start = time.time()
            try:
                system = BorderedSystem(A, B, ritz.values[0], ritz.vectors[:, 0], gap=ritz.gap,
                                        threshold=cfg.simplicity_threshold)
                for j, result in enumerate(system.solve_all(self.pencil, point), start=1):
                    vectors.append(result.dx)
                    provenance.append(Provenance(point, KIND_DERIVATIVE, j, iteration))
                if system.condition > 1e12:
                    self.logger.warning(f"Bordered system at {list(point)} is ill-conditioned ({system.condition:.2e})")
            except (NonSimpleEigenvalueError, SingularSystemError) as e:
                skipped = True
                self.logger.warning(f"Skipping derivatives at {list(point)}: {e}")
            derivative_time = time.time() - start

        return Candidates(point, vectors, provenance, ritz.gap, skipped,
                          eigensolve_time=elapsed, derivative_time=derivative_time, pairs_computed=ritz.m)

    def _absorb(self, subspace: Subspace, candidates: Candidates, kind: str, iteration: int) -> Tuple[Subspace, SampleRecord]:
        self.timings["eigensolve"] += candidates.eigensolve_time
        self.timings["derivatives"] += candidates.derivative_time
        self.stats["eigensolves"] += 1
        self.stats["eigenvectors_computed"] += candidates.pairs_computed
        self.stats["derivative_solves"] += sum(p.kind == KIND_DERIVATIVE for p in candidates.provenance)
        self.stats["derivatives_skipped"] += int(candidates.derivatives_skipped)

        start = time.time()
        extended = subspace.extend(candidates.vectors, candidates.provenance)
        self.timings["orthonormalization"] += time.time() - start

        added = extended.provenance[subspace.dimension:]
        self.stats["eigenvectors_added"] += sum(p.kind == KIND_EIGENVECTOR for p in added)
        self.stats["derivatives_added"] += sum(p.kind == KIND_DERIVATIVE for p in added)
        self.stats["deflations"] += len(extended.deflated)

        record = SampleRecord(
            omega=candidates.omega,
            kind=kind,
            iteration=iteration,
            added=[p.label for p in added],
            deflated=[p.label for p in extended.deflated],
            gap=candidates.gap,
            derivatives_skipped=candidates.derivatives_skipped,
        )
        return extended, record

    def _project(self, subspace: Subspace, previous: Optional[ReducedModel]) -> ReducedModel:
        start = time.time()
        model = ReducedModel.project(self.pencil, subspace, previous)
        self.timings["projection"] += time.time() - start
        return model

    def _map(self, func, items: Sequence) -> List:
        """Apply func over items, on the run's thread pool when threads > 1."""
        if self.config.threads > 1 and len(items) > 1:
            if self._pool is not None:
                return list(self._pool.map(func, items))
            with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                return list(pool.map(func, items))
        return [func(item) for item in items]

    # Algorithm steps

    def initialize(self) -> GreedyState:
        """
        Enrich at every initial-grid point, project, and set u = 1 on the training grid.
        """
        cfg = self.config
        start = time.time()
        init = domain_grid(self.pencil.domain, cfg.init_grid)
        train = domain_grid(self.pencil.domain, cfg.train_grid)

        all_candidates = self._map(lambda omega: self.compute_candidates(omega, 0), list(init.points))
        subspace = Subspace.empty(self.pencil.n, cfg.deflation_tol)
        samples = []
        for candidates in all_candidates:
            subspace, record = self._absorb(subspace, candidates, "init", 0)
            samples.append(record)
        model = self._project(subspace, None)

        state = GreedyState(
            train=train,
            bounds=np.ones(len(train)),
            active=np.ones(len(train), dtype=bool),
            model=model,
            samples=samples,
        )
        self.timings["initialization"] += time.time() - start
        self.logger.info(
            f"Initialized on {len(init)} points: M={model.dimension}, "
            f"deflations={self.stats['deflations']}, training points={len(train)}"
        )
        return state

    def _bound_at(self, state: GreedyState, index: int) -> Tuple[float, bool]:
        value = estimate_bound(state.model, self.context, self.config.m, state.train.points[index])
        return value.bound, value.fallback

    def sweep_bounds(self, state: GreedyState) -> SweepResult:
        """
        Recompute bounds in descending order of the stored bounds.

        Each visited point gets u = min(u_old, u_new) and leaves the training
        set when u < tol. With saturation_skip, a point is not visited once
        its stored bound cannot exceed the running maximum (ties go to the
        lower index), since stored bounds only decrease.

        Returns:
            SweepResult with the argmax training index (None when no active
            point remains)
        """
        cfg = self.config
        start = time.time()
        active = np.flatnonzero(state.active)
        order = sorted(active.tolist(), key=lambda i: (-state.bounds[i], i))

        u_max = -np.inf
        argmax: Optional[int] = None
        visited_max = 0.0
        evaluated = 0
        pruned: List[int] = []
        fallbacks = 0

        def skip(i: int) -> bool:
            stored = state.bounds[i]
            return argmax is not None and (stored < u_max or (stored == u_max and i > argmax))

        batch_size = cfg.threads if cfg.saturation_skip else max(len(order), 1)
        position = 0
        stop = False
        while position < len(order) and not stop:
            if cfg.saturation_skip and skip(order[position]):
                break
            batch = order[position:position + batch_size]
            results = self._map(lambda i: self._bound_at(state, i), batch)
            for i, (u_new, fallback) in zip(batch, results):
                if cfg.saturation_skip and skip(i):
                    stop = True
                    break
                evaluated += 1
                fallbacks += int(fallback)
                u = min(state.bounds[i], u_new)
                state.bounds[i] = u
                visited_max = max(visited_max, u)
                if u < cfg.tol:
                    state.active[i] = False
                    state.removed_at[i] = state.iteration
                    pruned.append(i)
                elif u > u_max or (u == u_max and (argmax is None or i < argmax)):
                    u_max, argmax = u, i
            position += len(batch)

        skipped = len(order) - evaluated
        self.stats["bound_evaluations"] += evaluated
        self.stats["bound_evaluations_skipped"] += skipped
        self.stats["kato_temple_fallbacks"] += fallbacks
        if fallbacks:
            self.logger.warning(f"Kato-Temple fell back to Bauer-Fike at {fallbacks} point(s) (gap below floor)")
        self.timings["sweep"] += time.time() - start

        max_bound = float(u_max) if argmax is not None else float(visited_max)
        self.logger.debug(
            f"Sweep {state.iteration}: evaluated={evaluated}, skipped={skipped}, pruned={len(pruned)}, "
            f"max bound={max_bound:.3e}"
        )
        return SweepResult(max_index=argmax, max_bound=max_bound, evaluated=evaluated, skipped=skipped,
                           pruned=pruned)

    def step(self, state: GreedyState, index: int) -> GreedyState:
        """
        Enrich at training point `index`, reproject, and drop the point from the training set.
        """
        state.iteration += 1
        omega = state.train.points[index]
        candidates = self.compute_candidates(omega, state.iteration)
        subspace, record = self._absorb(state.subspace, candidates, "greedy", state.iteration)
        state.model = self._project(subspace, state.model)
        state.samples.append(record)
        state.selected.append(int(index))
        if state.active[index]:
            state.active[index] = False
            state.removed_at[index] = state.iteration
        self.logger.info(
            f"Iteration {state.iteration}: enriched at {list(record.omega)} "
            f"(+{len(record.added)}, deflated {len(record.deflated)}), M={state.model.dimension}, "
            f"active={state.n_active}"
        )
        return state

    def run(self) -> GreedyReport:
        """
        Initialize, then alternate sweeps and steps until the training set is
        empty or n_max iterations were done. A final sweep decides convergence.
        """
        cfg = self.config
        start = time.time()
        if cfg.threads > 1:
            self._pool = ThreadPoolExecutor(max_workers=cfg.threads, thread_name_prefix=f"build-{self.run_id}")
        try:
            state = self.initialize()
            converged = False
            while True:
                sweep = self.sweep_bounds(state)
                state.max_bound_trace.append(sweep.max_bound)
                if sweep.max_index is None:
                    converged = True
                    break
                if state.iteration >= cfg.n_max:
                    break
                self.step(state, sweep.max_index)
        except Exception as e:
            self.logger.error(f"Greedy run {self.run_id} failed: {e}", exc_info=True)
            raise
        finally:
            if self._pool is not None:
                self._pool.shutdown(wait=True)
                self._pool = None
        self.timings["total"] = time.time() - start

        if converged:
            self.logger.info(
                f"Converged after {state.iteration} iteration(s): M={state.model.dimension}, "
                f"points={len(state.samples)}, total {self.timings['total']:.2f}s"
            )
        else:
            self.logger.warning(
                f"Not converged after n_max={cfg.n_max} iteration(s): {state.n_active} training point(s) "
                f"above tol, max bound {state.max_bound_trace[-1]:.3e}"
            )

        self.state = state
        surrogate = Surrogate(
            state.model, self.context, m=cfg.m, tol=cfg.tol, source=self.pencil.source,
            samples=[s.to_dict() for s in state.samples],
        )
        return GreedyReport(
            converged=converged,
            iterations=state.iteration,
            basis_dim=state.model.dimension,
            samples=state.samples,
            max_bound_trace=state.max_bound_trace,
            selected=state.selected,
            timings=dict(self.timings),
            stats=dict(self.stats),
            config=cfg,
            surrogate=surrogate,
            run_id=self.run_id,
        )


def run(pencil: AffinePencil, config: Optional[GreedyConfig] = None, **kwargs) -> GreedyReport:
    """Build a surrogate with default builder settings."""
    return SurrogateBuilder(pencil, config, **kwargs).run()
