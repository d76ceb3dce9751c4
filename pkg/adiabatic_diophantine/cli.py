"""
Command-line front end.

    adiabatic-diophantine solve "x^2 + y^2 - 25" --cutoff 5 --out report.json
    adiabatic-diophantine spectrum "x + y - 2" --cutoff 2 --format csv
    adiabatic-diophantine evolve "x + y - 2" --cutoff 2 --tmax 100
    adiabatic-diophantine oracle "x^2 + y^2 - 3" --bound 4
    adiabatic-diophantine sweep "x^2 - 2" --cutoffs 2 3 4

``solve`` exits with 0 on HAS_SOLUTION or NO_SOLUTION_WITHIN_CUTOFF and
with 2 on INCONCLUSIVE. Errors are printed as ``error: ...`` on standard
error with exit code 1, usage errors included.
"""
import argparse
import csv
import io
import json
import logging
import sys
from typing import Any, Iterable, List, NoReturn, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .diophantine import Polynomial, brute_force_minimum, parse_polynomial
from .evolution import PROFILES, Schedule, evolve
from .fock import (
    FockBasis,
    build_initial_hamiltonian,
    build_problem_hamiltonian,
    interpolate,
    spectral_decomposition,
)
from .measurement import VALID_STATISTICS
from .verification import (
    DecisionKind,
    RunConfig,
    VerificationReport,
    cutoff_sweep,
    doubling_times,
    identify_ground_state,
    prepare_initial_state,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2

FORMATS = ("json", "csv")
SOLVE_COLUMNS = [
    "T",
    "steps",
    "seed",
    "match_method",
    "match_statistic",
    "match_threshold",
    "match_pass",
    "dominant_tuples",
    "dominant_probability",
    "dominant_lower_bound",
    "dominant_energy",
    "is_dominant",
    "final_ground_population",
]
DIAGONAL_COLUMNS = ["index", "tuple", "energy"]
LEVEL_COLUMNS = ["s", "level", "eigenvalue"]
TRAJECTORY_COLUMNS = ["s", "ground_population", "energy_expectation", "norm"]
ORACLE_COLUMNS = ["tuple", "d_squared"]
SWEEP_COLUMNS = [
    "cutoff",
    "dimension",
    "decision",
    "reason",
    "min_value",
    "oracle_min_value",
]


def _format_tuple(values: Iterable[int]) -> str:
    return "(" + ",".join(str(value) for value in values) + ")"


def _parse_alpha(text: Optional[str]) -> Optional[Tuple[complex, ...]]:
    if text is None:
        return None
    try:
        return tuple(complex(part.strip()) for part in text.split(","))
    except ValueError:
        raise ValueError(
            f'Invalid alpha "{text}". Use comma-separated numbers.'
        ) from None


def _read_polynomial(args: argparse.Namespace) -> Polynomial:
    if (args.equation is None) == (args.file is None):
        raise ValueError("Give the equation either as an argument or with --file.")
    if args.file is not None:
        with open(args.file, encoding="utf-8") as handle:
            text = handle.read().strip()
    else:
        text = args.equation
    return parse_polynomial(text)


def _render(
    fmt: str, document: Any, header: Sequence[str], rows: Iterable[Sequence[Any]]
) -> str:
    if fmt == "json":
        return json.dumps(document, indent=2, allow_nan=False) + "\n"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _emit(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    logger.info("wrote %s", path)


def _solve_rows(report: VerificationReport) -> List[List[Any]]:
    rows = []
    for record in report.records:
        tuples = " ".join(
            _format_tuple(report.basis.tuple_of(index))
            for index in record.dominant_indices
        )
        rows.append(
            [
                record.total_time,
                record.steps,
                record.seed,
                record.verdict.method,
                record.verdict.statistic,
                record.verdict.threshold,
                record.verdict.passed,
                tuples,
                record.dominant_probability,
                record.dominant_lower_bound,
                record.dominant_energy,
                record.is_dominant,
                record.final_ground_population,
            ]
        )
    return rows


def _run_config(args: argparse.Namespace, polynomial: Polynomial) -> RunConfig:
    return RunConfig(
        polynomial=polynomial,
        cutoff=args.cutoff,
        alpha=_parse_alpha(args.alpha),
        t_list=doubling_times(args.tmax),
        steps_per_time=args.steps_per_time,
        shots=args.shots,
        seed=args.seed,
        theta=args.theta,
        statistic=args.statistic,
        profile=args.profile,
        max_workers=args.workers,
    )


def cmd_solve(args: argparse.Namespace) -> int:
    """Identify the ground state and write the verification report."""
    polynomial = _read_polynomial(args)
    report = identify_ground_state(_run_config(args, polynomial))
    text = _render(args.format, report.to_dict(), SOLVE_COLUMNS, _solve_rows(report))
    _emit(args.out, text)
    print(f"{polynomial}: {report.decision}", file=sys.stderr)
    if report.decision.kind is DecisionKind.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    """H_P diagonal table, plus the spectrum of H(s) on an s-grid."""
    polynomial = _read_polynomial(args)
    if args.s_points < 2:
        raise ValueError(f"Invalid s-grid size {args.s_points}. It must be >= 2.")
    basis = FockBasis(polynomial.modes, args.cutoff)
    problem = build_problem_hamiltonian(polynomial, basis)
    diagonal = [
        [index, _format_tuple(occupations), polynomial.evaluate_squared(occupations)]
        for index, occupations in enumerate(basis)
    ]

    want_levels = args.format == "json" or args.levels_out is not None
    levels: List[List[Any]] = []
    if want_levels:
        initial = build_initial_hamiltonian(basis, _parse_alpha(args.alpha))
        for s in np.linspace(0.0, 1.0, args.s_points):
            spectrum = spectral_decomposition(interpolate(initial, problem, float(s)))
            levels.extend(
                [float(s), level, float(value)]
                for level, value in enumerate(spectrum.eigenvalues)
            )

    document = {
        "polynomial": polynomial.to_dict(),
        "basis": {
            "modes": basis.modes,
            "cutoff": basis.cutoff,
            "dimension": len(basis),
        },
        "diagonal": [dict(zip(DIAGONAL_COLUMNS, row)) for row in diagonal],
        "levels": [dict(zip(LEVEL_COLUMNS, row)) for row in levels],
    }
    _emit(args.out, _render(args.format, document, DIAGONAL_COLUMNS, diagonal))
    if args.levels_out is not None:
        _emit(args.levels_out, _render("csv", None, LEVEL_COLUMNS, levels))
    return EXIT_OK


def cmd_evolve(args: argparse.Namespace) -> int:
    """Evolve the H_I ground state over T = --tmax and dump the trajectory."""
    polynomial = _read_polynomial(args)
    basis = FockBasis(polynomial.modes, args.cutoff)
    problem = build_problem_hamiltonian(polynomial, basis)
    initial_hamiltonian = build_initial_hamiltonian(basis, _parse_alpha(args.alpha))
    initial = prepare_initial_state(initial_hamiltonian, basis)
    schedule = Schedule.from_rate(args.tmax, args.steps_per_time, args.profile)
    trajectory = evolve(
        initial,
        initial_hamiltonian,
        problem,
        schedule,
        checkpoint_stride=args.stride,
    )
    rows = trajectory.to_rows()
    document = {
        "polynomial": polynomial.to_dict(),
        "T": schedule.total_time,
        "steps": schedule.steps,
        "profile": schedule.profile_name,
        "max_norm_drift": trajectory.max_norm_drift,
        "trajectory": rows,
    }
    table = [[row[column] for column in TRAJECTORY_COLUMNS] for row in rows]
    _emit(args.out, _render(args.format, document, TRAJECTORY_COLUMNS, table))
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    """Brute-force minimum of D^2 over [0, bound]^k."""
    polynomial = _read_polynomial(args)
    bound = args.cutoff if args.bound is None else args.bound
    result = brute_force_minimum(polynomial, bound)
    document = {"polynomial": polynomial.to_dict(), **result.to_dict()}
    rows = [[str(point), result.min_value] for point in result.argmin]
    _emit(args.out, _render(args.format, document, ORACLE_COLUMNS, rows))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Decide the instance at several cutoffs next to the oracle minimum."""
    polynomial = _read_polynomial(args)
    cutoffs = args.cutoffs if args.cutoffs else [args.cutoff]
    sweep = cutoff_sweep(_run_config(args, polynomial), cutoffs)
    rows = [
        [
            row.cutoff,
            row.dimension,
            row.decision.kind.value,
            "" if row.decision.reason is None else row.decision.reason.value,
            "" if row.decision.min_value is None else row.decision.min_value,
            row.oracle_min_value,
        ]
        for row in sweep
    ]
    document = {
        "polynomial": polynomial.to_dict(),
        "rows": [row.to_dict() for row in sweep],
    }
    _emit(args.out, _render(args.format, document, SWEEP_COLUMNS, rows))
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("equation", nargs="?", help='e.g. "x^2 + y^2 - 25"')
    parser.add_argument("--file", help="read the equation from a file")
    parser.add_argument("--cutoff", type=int, default=4, help="max occupation N")
    parser.add_argument("--out", help="output path (default: standard output)")
    parser.add_argument("--format", choices=FORMATS, default="json")


def _add_evolution(parser: argparse.ArgumentParser, tmax: float) -> None:
    parser.add_argument("--tmax", type=float, default=tmax)
    parser.add_argument("--steps-per-time", type=float, default=40.0)
    parser.add_argument("--alpha", help="coherent amplitudes, e.g. 1,1")
    parser.add_argument("--profile", choices=tuple(PROFILES), default="linear")


def _add_run(parser: argparse.ArgumentParser) -> None:
    _add_evolution(parser, tmax=512.0)
    parser.add_argument("--shots", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--theta", type=float, default=0.5)
    parser.add_argument("--statistic", choices=VALID_STATISTICS, default="tv")
    parser.add_argument("--workers", type=int, default=1)


class _ArgumentParser(argparse.ArgumentParser):
    """Exits with EXIT_ERROR on usage errors."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="adiabatic-diophantine",
        description="Adiabatic ground-state search for Diophantine equations.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    solve = subparsers.add_parser("solve", help="decide an equation")
    _add_common(solve)
    _add_run(solve)
    solve.set_defaults(handler=cmd_solve)

    spectrum = subparsers.add_parser("spectrum", help="dump H_P and H(s) levels")
    _add_common(spectrum)
    spectrum.add_argument("--alpha", help="coherent amplitudes, e.g. 1,1")
    spectrum.add_argument("--s-points", type=int, default=101)
    spectrum.add_argument("--levels-out", help="CSV path for the H(s) levels")
    spectrum.set_defaults(handler=cmd_spectrum)

    evolve_parser = subparsers.add_parser("evolve", help="dump one trajectory")
    _add_common(evolve_parser)
    _add_evolution(evolve_parser, tmax=10.0)
    evolve_parser.add_argument("--stride", type=int, help="checkpoint stride")
    evolve_parser.set_defaults(handler=cmd_evolve)

    oracle = subparsers.add_parser("oracle", help="brute-force minimum of D^2")
    _add_common(oracle)
    oracle.add_argument("--bound", type=int, help="defaults to --cutoff")
    oracle.set_defaults(handler=cmd_oracle)

    sweep = subparsers.add_parser("sweep", help="decide over several cutoffs")
    _add_common(sweep)
    _add_run(sweep)
    sweep.add_argument("--cutoffs", type=int, nargs="+")
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except (ValueError, RuntimeError, AssertionError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
