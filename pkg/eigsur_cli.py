"""
Command-line front end for eigsur.

Commands:
    build            greedy construction; writes the surrogate, report.json and CSV traces
    eval             evaluate a saved surrogate at points or on a grid
    audit            compare a saved surrogate with full eigensolves on a grid
    compare          run the four enrichment variants and tabulate them
    fixture export   write a built-in fixture as a pencil definition file

Exit codes: 0 success, 2 not converged or audit failure, 1 any other error.
"""

import argparse
import inspect
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# Add the project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from core.config import BoundConfig, GreedyConfig, PencilConfig, SolverConfig, parse_counts, parse_point
from core.errors import ConfigurationError, EigsurError
from core.pencil import AffinePencil, load_pencil
from greedy.audit import audit_surrogate, summarize_audit
from greedy.builder import SurrogateBuilder
from greedy.compare import compare_variants
from greedy.grid import domain_grid
from greedy.surrogate import Surrogate
from problems import FIXTURES, build_fixture, export_fixture, pencil_from_source
from utils.logging import get_logger, setup_logging

logger = get_logger("cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

BOUND_FLAGS = {"auto": "auto", "bf": "bauer-fike", "kt": "kato-temple"}


def fixture_params(name: str, args: argparse.Namespace) -> Dict[str, Any]:
    """Generator parameters given on the command line that the fixture accepts."""
    if name not in FIXTURES:
        raise ConfigurationError(f"Unknown fixture '{name}', expected one of {sorted(FIXTURES)}")
    accepted = inspect.signature(FIXTURES[name]).parameters
    candidates = {"n": args.n, "seed": args.seed, "rotation": getattr(args, "rotation", None)}
    return {k: v for k, v in candidates.items() if v is not None and k in accepted}


def resolve_pencil(args: argparse.Namespace) -> AffinePencil:
    """The pencil named by --pencil or --fixture."""
    config = PencilConfig(strict_domain=not args.lenient_domain)
    if args.pencil and args.fixture:
        raise ConfigurationError("give either --pencil or --fixture, not both")
    if args.pencil:
        return load_pencil(args.pencil, config=config)
    if args.fixture:
        return build_fixture(args.fixture, config=config, **fixture_params(args.fixture, args)).pencil
    raise ConfigurationError("a pencil is required: use --pencil FILE or --fixture NAME")


def greedy_config(args: argparse.Namespace) -> GreedyConfig:
    """Map command-line flags onto GreedyConfig; absent flags keep the defaults."""
    defaults = GreedyConfig()
    return GreedyConfig(
        m=args.m if args.m is not None else defaults.m,
        use_derivatives=args.derivatives,
        tol=args.tol if args.tol is not None else defaults.tol,
        n_max=args.nmax if args.nmax is not None else defaults.n_max,
        init_grid=parse_counts(args.init_grid) if args.init_grid else defaults.init_grid,
        train_grid=parse_counts(args.train_grid) if args.train_grid else defaults.train_grid,
        saturation_skip=not args.exhaustive,
        threads=args.threads,
        solver=SolverConfig(seed=args.seed if args.seed is not None else 0),
        bounds=BoundConfig(policy=BOUND_FLAGS[args.bound]),
    )


def evaluation_points(args: argparse.Namespace, surrogate: Surrogate) -> List:
    if args.point:
        return [parse_point(text) for text in args.point]
    counts = parse_counts(args.grid) if args.grid else (25,) * surrogate.d
    return list(domain_grid(surrogate.model.domain, counts))


def write_table(table, out: Optional[str]):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out, index=False)
        logger.info(f"Wrote {len(table)} row(s) to {out}")
    else:
        table.to_csv(sys.stdout, index=False)


def cmd_build(args: argparse.Namespace) -> int:
    pencil = resolve_pencil(args)
    config = greedy_config(args)
    report = SurrogateBuilder(pencil, config).run()

    out = Path(args.out)
    report.save(out)
    grid = domain_grid(pencil.domain, config.train_grid)
    report.surrogate.evaluate_points(list(grid)).to_csv(out / "surrogate_grid.csv", index=False)
    logger.info(
        f"Build finished: converged={report.converged}, M={report.basis_dim}, "
        f"points={report.n_points}, results in {out}"
    )
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_eval(args: argparse.Namespace) -> int:
    surrogate = Surrogate.load(args.surrogate)
    table = surrogate.evaluate_points(evaluation_points(args, surrogate))
    write_table(table, args.out)
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    surrogate = Surrogate.load(args.surrogate)
    if args.pencil or args.fixture:
        pencil = resolve_pencil(args)
    else:
        pencil = pencil_from_source(surrogate.source, PencilConfig(strict_domain=not args.lenient_domain))
    if pencil.n != surrogate.model.n or pencil.d != surrogate.d:
        raise ConfigurationError(
            f"pencil (n={pencil.n}, d={pencil.d}) does not match the surrogate "
            f"(n={surrogate.model.n}, d={surrogate.d})"
        )

    table = audit_surrogate(surrogate, pencil, evaluation_points(args, surrogate))
    tol = args.tol if args.tol is not None else surrogate.tol
    summary = summarize_audit(table, tol)

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        table.to_csv(out / "audit.csv", index=False)
        with open(out / "audit_summary.json", "w") as f:
            json.dump(summary, f, indent=2, default=str)
    else:
        table.to_csv(sys.stdout, index=False)

    if not summary["passed"]:
        logger.warning(f"Audit failed: max true error {summary['max_true_error']:.3e} >= tol {tol:.3e}")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    pencil = resolve_pencil(args)
    table, reports = compare_variants(pencil, greedy_config(args))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "compare.csv", index_label="metric")
    for name, report in reports.items():
        with open(out / f"report_{name.replace(' ', '_').replace('+', 'plus')}.json", "w") as f:
            json.dump(report.to_dict(), f, indent=2, default=str)
    logger.info(f"Comparison table:\n{table.to_string()}")
    return EXIT_OK if all(r.converged for r in reports.values()) else EXIT_NOT_CONVERGED


def cmd_fixture_export(args: argparse.Namespace) -> int:
    spec = build_fixture(args.name, **fixture_params(args.name, args))
    export_fixture(spec, args.out)
    return EXIT_OK


def _add_pencil_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--pencil", help="pencil definition file (.json or .toml)")
    parser.add_argument("--fixture", choices=sorted(FIXTURES), help="built-in fixture")
    parser.add_argument("--n", type=int, help="fixture dimension")
    parser.add_argument("--rotation", choices=["identity", "givens"], help="example1 rotation mode")
    parser.add_argument("--seed", type=int, help="fixture and solver seed")
    parser.add_argument("--lenient-domain", action="store_true",
                        help="warn instead of failing on points outside the domain")


def _add_greedy_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--tol", type=float, help="target error tolerance (default 1e-5)")
    parser.add_argument("--m", type=int, help="eigenvectors per sample point")
    parser.add_argument("--derivatives", action="store_true", help="also add eigenvector derivatives")
    parser.add_argument("--init-grid", help="initial grid counts, e.g. 3,3")
    parser.add_argument("--train-grid", help="training grid counts, e.g. 25,25")
    parser.add_argument("--nmax", type=int, help="iteration cap")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for bound sweeps")
    parser.add_argument("--bound", choices=sorted(BOUND_FLAGS), default="auto", help="bound policy")
    parser.add_argument("--exhaustive", action="store_true", help="disable the saturation skip")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eigsur", description="Certified surrogates for lambda_1(omega)")
    parser.add_argument("--log-file", help="also log to this file")
    parser.add_argument("--log-level", help="override EIGSUR_LOG")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="run the greedy construction")
    _add_pencil_flags(build)
    _add_greedy_flags(build)
    build.add_argument("--out", default="eigsur_results", help="output directory")
    build.set_defaults(handler=cmd_build)

    evaluate = sub.add_parser("eval", help="evaluate a saved surrogate")
    evaluate.add_argument("surrogate", help="surrogate directory")
    evaluate.add_argument("--point", action="append", help="parameter point w1,w2,... (repeatable)")
    evaluate.add_argument("--grid", help="grid counts over the domain, e.g. 25,25")
    evaluate.add_argument("--out", help="CSV file (stdout when omitted)")
    evaluate.set_defaults(handler=cmd_eval)

    audit = sub.add_parser("audit", help="verify a saved surrogate with full solves")
    audit.add_argument("surrogate", help="surrogate directory")
    _add_pencil_flags(audit)
    audit.add_argument("--point", action="append", help="parameter point w1,w2,... (repeatable)")
    audit.add_argument("--grid", help="grid counts over the domain, e.g. 25,25")
    audit.add_argument("--tol", type=float, help="tolerance (default: the build tolerance)")
    audit.add_argument("--out", help="output directory for audit.csv and audit_summary.json")
    audit.set_defaults(handler=cmd_audit)

    compare = sub.add_parser("compare", help="compare the four enrichment variants")
    _add_pencil_flags(compare)
    _add_greedy_flags(compare)
    compare.add_argument("--out", default="eigsur_compare", help="output directory")
    compare.set_defaults(handler=cmd_compare)

    fixture = sub.add_parser("fixture", help="built-in fixtures")
    fixture_sub = fixture.add_subparsers(dest="fixture_command", required=True)
    export = fixture_sub.add_parser("export", help="write a fixture as a pencil definition file")
    export.add_argument("name", choices=sorted(FIXTURES))
    export.add_argument("--out", required=True, help="pencil definition file to write (.json)")
    export.add_argument("--n", type=int, help="fixture dimension")
    export.add_argument("--rotation", choices=["identity", "givens"], help="example1 rotation mode")
    export.add_argument("--seed", type=int, help="fixture seed")
    export.set_defaults(handler=cmd_fixture_export)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_file, args.log_level)
    try:
        return args.handler(args)
    except EigsurError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return EXIT_ERROR
    except OSError as e:
        logger.error(f"{args.command} failed on {getattr(e, 'filename', None) or 'file'}: {e}", exc_info=True)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
