import argparse
import math
import sys
from pathlib import Path
from typing import List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.constants import (
    DEFAULT_HANKEL_NT,
    DEFAULT_HANKEL_TMAX,
    DEFAULT_HANKEL_TOL,
    DEFAULT_INVOLUTION_TOL,
    DEFAULT_MASS_TOL,
    DEFAULT_REFERENCE_TOL,
    DEFAULT_SCALING_TOL,
    DEFAULT_TRACE_TOL,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_TOLERANCE,
    SPECTRUM_UPPER_SLACK,
)
from src.hankel_spectra import io
from src.hankel_spectra.discretize import default_config, discretize, tail_mass
from src.hankel_spectra.errors import DivergentIntegralError, HankelSpectraError
from src.hankel_spectra.lyapunov import (
    DiagonalSystem,
    balanced_realization,
    gramian_quadrature,
    impulse_response,
    lyapunov_residual,
    solve_lyapunov,
)
from src.hankel_spectra.measures import (
    AtomicMeasure,
    DensityMeasure,
    cdf_values,
    classify,
    laplace_transform,
    sharp,
    total_mass,
)
from src.hankel_spectra.model_operator import build
from src.hankel_spectra.reference import reference_spectrum, run_pipeline, write_reference_table
from src.hankel_spectra.spectral_map import DEFAULT_TAUS, check_suite, omega
from src.hankel_spectra.utils import ensure_dir, fan_out
from src.logger import get_logger

logger = get_logger("hankel_spectra_cli")

VERBS = ("map", "sharp-map", "classify", "check", "discretize", "reference", "lyapunov")
SUITES = ("involution", "mass", "trace", "scaling", "duality", "lyapunov", "hankel", "all")
REFERENCES = {"mehler": "mehler_sigma", "rosenblum": "rosenblum_rho"}
IMPULSE_TIMES = (0.5, 1.0, 2.0)


class Command(BaseModel):
    model_config = ConfigDict(extra="forbid")

    verb: Literal["map", "sharp-map", "classify", "check", "discretize", "reference", "lyapunov"]
    input: Path | None = None
    output: Path | None = None
    solver: Literal["accurate", "baseline"] = "accurate"
    nodes: int = Field(default=200, ge=1)
    truncate: float | None = None
    t_lo: float | None = None
    rule: Literal["composite_gauss_legendre", "single_panel"] = "composite_gauss_legendre"
    panels: int | None = None
    suite: Literal["involution", "mass", "trace", "scaling", "duality", "lyapunov", "hankel", "all"] = "all"
    tol: float | None = Field(default=None, gt=0)
    tau: List[float] = Field(default_factory=lambda: list(DEFAULT_TAUS))
    n_t: int = Field(default=DEFAULT_HANKEL_NT, ge=1)
    t_max: float = Field(default=DEFAULT_HANKEL_TMAX, gt=0)
    reference: Literal["mehler", "rosenblum"] | None = None
    table: Path | None = None
    horizon: float = Field(default=40.0, gt=0)
    steps: int = Field(default=4000, ge=1)

    @model_validator(mode="after")
    def validate_verb_arguments(self) -> "Command":
        if self.verb == "reference":
            if self.reference is None:
                raise ValueError("reference needs a name: mehler or rosenblum")
        elif self.input is None:
            raise ValueError(f"{self.verb} needs --input")
        if any(not (math.isfinite(tau) and tau > 0) for tau in self.tau):
            raise ValueError("--tau values must be finite and > 0")
        return self


def _add_discretization_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--nodes", type=int, default=200, help="Quadrature nodes for density inputs (default: 200)")
    parser.add_argument("--truncate", type=float, default=None, help="Upper truncation t_hi for density inputs")
    parser.add_argument(
        "--t-lo",
        dest="t_lo",
        type=float,
        default=None,
        help="Lower truncation t_lo (default: 1e-8; reference pipelines use t_hi*exp(-0.15*nodes))",
    )
    parser.add_argument(
        "--rule",
        choices=["composite_gauss_legendre", "single_panel"],
        default="composite_gauss_legendre",
        help="Quadrature rule (default: composite_gauss_legendre)",
    )
    parser.add_argument("--panels", type=int, default=None, help="Panel count (default: nodes // 10)")


def _add_io_flags(parser: argparse.ArgumentParser, needs_input: bool = True) -> None:
    if needs_input:
        parser.add_argument("--input", type=Path, required=True, help="Measure JSON file")
    parser.add_argument("--output", type=Path, default=None, help="Output file (default: stdout)")


def _add_solver_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--solver",
        choices=["accurate", "baseline"],
        default="accurate",
        help="Eigensolver: accurate (quasi-Cauchy Cholesky + Jacobi) or baseline (default: accurate)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Spectral map of positive Hankel operators: measures in, spectral measures out."
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    for verb, text in (("map", "Write Omega(mu) as lambda,mass CSV"), ("sharp-map", "Write Omega#(mu) as CSV")):
        sub = verbs.add_parser(verb, help=text)
        _add_io_flags(sub)
        _add_solver_flag(sub)
        _add_discretization_flags(sub)

    sub = verbs.add_parser("classify", help="Finite / co-finite / Carleson classification as JSON")
    _add_io_flags(sub)

    sub = verbs.add_parser("check", help="Run an identity suite and exit 1 on tolerance failures")
    sub.add_argument("suite", choices=SUITES)
    _add_io_flags(sub)
    _add_solver_flag(sub)
    _add_discretization_flags(sub)
    sub.add_argument("--tol", type=float, default=None, help="Override the suite's tolerance")
    sub.add_argument("--tau", type=float, nargs="+", default=list(DEFAULT_TAUS), help="Scaling factors")
    sub.add_argument("--n-t", dest="n_t", type=int, default=DEFAULT_HANKEL_NT, help="Hankel grid size")
    sub.add_argument("--t-max", dest="t_max", type=float, default=DEFAULT_HANKEL_TMAX, help="Hankel grid length")

    sub = verbs.add_parser("discretize", help="Write the atomic discretization of a density as JSON")
    _add_io_flags(sub)
    _add_discretization_flags(sub)

    sub = verbs.add_parser("reference", help="Run the Mehler or Rosenblum reproduction pipeline")
    sub.add_argument("reference", choices=sorted(REFERENCES))
    _add_io_flags(sub, needs_input=False)
    _add_solver_flag(sub)
    _add_discretization_flags(sub)
    sub.add_argument("--tol", type=float, default=None, help=f"Kolmogorov tolerance (default: {DEFAULT_REFERENCE_TOL})")
    sub.add_argument("--table", type=Path, default=None, help="Also write (lambda, density, cdf) rows here")
    sub.set_defaults(nodes=400)

    sub = verbs.add_parser("lyapunov", help="Gramian / Lyapunov residual report as JSON")
    _add_io_flags(sub)
    sub.add_argument("--horizon", type=float, default=40.0, help="Simpson horizon T (default: 40)")
    sub.add_argument("--steps", type=int, default=4000, help="Simpson panels (default: 4000)")
    return parser


def parse_args(argv: list[str] | None = None) -> Command:
    args = build_parser().parse_args(argv)
    return Command(**vars(args))


def _load_atomic(cmd: Command) -> AtomicMeasure:
    return _as_atomic(io.read_measure(cmd.input), cmd)


def _as_atomic(measure, cmd: Command) -> AtomicMeasure:
    """Pass atomic measures through; discretize finite densities, reject infinite ones."""
    if isinstance(measure, AtomicMeasure):
        return measure
    try:
        total_mass(measure)
    except DivergentIntegralError as exc:
        raise ValueError(
            f"The {measure.kind} density has infinite mass, so its spectral map is undefined "
            "(Lebesgue measure, for one, gives the Carleman operator with multiplicity-two spectrum)"
        ) from exc
    cfg = _config(measure, cmd)
    tail = tail_mass(measure, cfg)
    logger.info(f"Discretized {measure.kind} with {cfg.n_nodes} nodes on {cfg.truncation}; tail mass {tail:.3e}")
    return discretize(measure, cfg)


def _config(measure: DensityMeasure, cmd: Command):
    overrides = {"rule": cmd.rule}
    if cmd.panels is not None:
        overrides["panels"] = cmd.panels
    return default_config(measure, cmd.nodes, truncate=cmd.truncate, t_lo=cmd.t_lo, **overrides)


def run_map(cmd: Command) -> int:
    measure = io.read_measure(cmd.input)
    if cmd.verb == "sharp-map":
        # a finite sharp image is exactly a co-finite input
        measure = sharp(measure)
    atomic = _as_atomic(measure, cmd)
    sigma = omega(atomic, cmd.solver)
    io.write_atoms(cmd.output, sigma, stream=sys.stdout)
    return EXIT_OK


def run_classify(cmd: Command) -> int:
    flags = classify(io.read_measure(cmd.input))
    io.write_json(cmd.output, flags.model_dump(), stream=sys.stdout)
    return EXIT_OK


def _suite_tolerances(cmd: Command) -> dict:
    tolerances = {
        "involution_tol": DEFAULT_INVOLUTION_TOL,
        "mass_tol": DEFAULT_MASS_TOL,
        "trace_tol": DEFAULT_TRACE_TOL,
        "scaling_tol": DEFAULT_SCALING_TOL,
        "hankel_tol": DEFAULT_HANKEL_TOL,
    }
    if cmd.tol is not None:
        targets = {
            "involution": ["involution_tol"],
            "duality": ["involution_tol"],
            "mass": ["mass_tol"],
            "trace": ["trace_tol"],
            "scaling": ["scaling_tol"],
            "hankel": ["hankel_tol"],
            "lyapunov": ["lyapunov_tol"],
            "all": list(tolerances),
        }[cmd.suite]
        tolerances.update({key: cmd.tol for key in targets})
    return tolerances


def run_check(cmd: Command) -> int:
    measures = [_as_atomic(measure, cmd) for measure in io.read_measures(cmd.input)]
    tolerances = _suite_tolerances(cmd)

    def run_one(measure: AtomicMeasure):
        return check_suite(
            measure,
            suite=cmd.suite,
            method=cmd.solver,
            taus=cmd.tau,
            n_t=max(cmd.n_t, measure.size),
            t_max=cmd.t_max,
            **tolerances,
        )

    outcomes = fan_out(run_one, measures)
    reports = [dict(outcome.model_dump(), passed=outcome.passed) for outcome in outcomes]
    payload = reports[0] if len(reports) == 1 else {"reports": reports}
    io.write_json(cmd.output, payload, stream=sys.stdout)

    failed = [index for index, outcome in enumerate(outcomes) if not outcome.passed]
    for index in failed:
        logger.warning(f"Measure {index}: {'; '.join(outcomes[index].failures)}")
    return EXIT_TOLERANCE if failed else EXIT_OK


def run_discretize(cmd: Command) -> int:
    measure = io.read_measure(cmd.input)
    if not isinstance(measure, DensityMeasure):
        raise ValueError("discretize expects a density measure")
    atomic = discretize(measure, _config(measure, cmd))
    text = io.measure_to_json(atomic) + "\n"
    if cmd.output is None:
        sys.stdout.write(text)
    else:
        ensure_dir(cmd.output.parent)
        cmd.output.write_text(text, encoding="utf-8")
    return EXIT_OK


def run_reference(cmd: Command) -> int:
    name = REFERENCES[cmd.reference]
    options = {"method": cmd.solver, "rule": cmd.rule}
    if cmd.truncate is not None:
        options["truncate"] = cmd.truncate
    if cmd.t_lo is not None:
        options["t_lo"] = cmd.t_lo
    if cmd.panels is not None:
        options["panels"] = cmd.panels
    result = run_pipeline(name, cmd.nodes, **options)

    grid = np.linspace(0.0, math.pi, 1000)
    points = np.union1d(grid, result.spectrum.positions)
    reference_cdf = cdf_values(reference_spectrum(name).as_measure(), points)
    rows = zip(points, cdf_values(result.spectrum, points), reference_cdf)
    io.write_rows(cmd.output, ("lambda", "empirical_cdf", "reference_cdf"), rows, stream=sys.stdout)
    if cmd.table is not None:
        write_reference_table(name, cmd.table)

    tol = DEFAULT_REFERENCE_TOL if cmd.tol is None else cmd.tol
    print(f"kolmogorov={result.distance!r} mass={result.mass!r} max_eigenvalue={result.max_eigenvalue!r}", file=sys.stderr)
    within = result.distance <= tol and result.max_eigenvalue <= math.pi + SPECTRUM_UPPER_SLACK
    return EXIT_OK if within else EXIT_TOLERANCE


def run_lyapunov(cmd: Command) -> int:
    measure = _load_atomic(cmd)
    system = DiagonalSystem.from_measure(measure)
    gramian = solve_lyapunov(system)
    scale = float(np.max(np.abs(np.outer(system.b, system.b))))
    quadrature = gramian_quadrature(system, cmd.horizon, cmd.steps)
    balanced = balanced_realization(system)

    report = {
        "size": system.size,
        "lyapunov_residual": lyapunov_residual(system, gramian) / scale,
        "model_operator_gap": float(np.max(np.abs(gramian - build(measure).matrix))),
        "gramian_quadrature_error": float(np.max(np.abs(quadrature.matrix - gramian))),
        "tail_bound": quadrature.tail_bound,
        "tail_flag": quadrature.tail_flag,
        "impulse_gap": max(
            abs(impulse_response(system, t) - laplace_transform(measure, t)) for t in IMPULSE_TIMES
        ),
        "balanced_residual": balanced.gramian_residual() / scale,
        "hankel_singular_values": balanced.hankel_singular_values.tolist(),
    }
    io.write_json(cmd.output, report, stream=sys.stdout)
    passed = (
        report["lyapunov_residual"] <= 1e-13
        and report["gramian_quadrature_error"] <= 1e-8 * scale
        and not quadrature.tail_flag
    )
    return EXIT_OK if passed else EXIT_TOLERANCE


HANDLERS = {
    "map": run_map,
    "sharp-map": run_map,
    "classify": run_classify,
    "check": run_check,
    "discretize": run_discretize,
    "reference": run_reference,
    "lyapunov": run_lyapunov,
}


def execute(cmd: Command) -> int:
    logger.info(f"Running {cmd.verb}")
    try:
        status = HANDLERS[cmd.verb](cmd)
    except HankelSpectraError as exc:
        logger.error(f"{cmd.verb} failed: {exc}")
        status = EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        logger.error(f"{cmd.verb} rejected its input: {exc}")
        status = EXIT_PARSE
    logger.info(f"{cmd.verb} finished with exit status {status}")
    return status


def main(argv: list[str] | None = None) -> int:
    try:
        cmd = parse_args(argv)
    except ValidationError as exc:
        logger.error(f"Invalid arguments: {exc}")
        return EXIT_PARSE
    return execute(cmd)


if __name__ == "__main__":
    raise SystemExit(main())
