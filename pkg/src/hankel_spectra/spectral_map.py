from __future__ import annotations

import math
from typing import Iterable, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from src.constants import (
    DEFAULT_HANKEL_NT,
    DEFAULT_HANKEL_TMAX,
    DEFAULT_HANKEL_TOL,
    DEFAULT_INVOLUTION_TOL,
    DEFAULT_MASS_TOL,
    DEFAULT_SCALING_TOL,
    DEFAULT_TRACE_TOL,
    HANKEL_RESIDUAL_TOL,
)
from src.hankel_spectra.eigensolve import Method, baseline_eig, decompose, spectral_masses
from src.hankel_spectra.errors import StructuralError
from src.hankel_spectra.measures import (
    Atom,
    AtomicMeasure,
    atom_distance,
    laplace_values,
    scale_mass,
    scale_variable,
    sharp,
    total_mass,
)
from src.hankel_spectra.model_operator import build, frobenius_sq, lyapunov_residual, trace
from src.hankel_spectra.quadrature import gauss_legendre
from src.logger import get_logger

logger = get_logger(__name__)

CheckSuite = Literal["involution", "mass", "trace", "scaling", "duality", "lyapunov", "hankel", "all"]
DEFAULT_TAUS = (0.1, 2.0, 10.0)


class _Report(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def validate_finite(self):
        for name, value in self:
            if isinstance(value, float) and not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        return self


class RoundtripErrors(_Report):
    node_error: float
    weight_error: float


class IdentityReport(_Report):
    mass_error: float
    trace_error: float
    hs_error: float
    lyapunov_residual: float
    roundtrip_node_error: float
    roundtrip_weight_error: float


class ScalingErrors(_Report):
    tau: float
    mass_scaling_error: float
    variable_scaling_error: float


class HankelCrossCheck(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_t: int
    t_max: float
    max_relative_deviation: float
    residual_max: float
    tail_estimate: float
    passed: bool


class CheckOutcome(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    suite: CheckSuite
    size: int
    identity: IdentityReport | None = None
    scaling: list[ScalingErrors] = []
    duality: RoundtripErrors | None = None
    hankel: HankelCrossCheck | None = None
    failures: list[str] = []

    @property
    def passed(self) -> bool:
        return not self.failures


def omega(measure: AtomicMeasure, method: Method = "accurate") -> AtomicMeasure:
    """The spectral measure of the model operator with respect to its cyclic vector."""
    if isinstance(measure, AtomicMeasure) and measure.size == 1:
        image = _point_mass_image(measure.atoms[0])
        if image is not None:
            return image
    decomposition = decompose(build(measure), method)
    return AtomicMeasure.from_arrays(decomposition.eigenvalues[::-1], decomposition.masses[::-1])


def _point_mass_image(atom: Atom) -> AtomicMeasure | None:
    """w delta_x maps to w delta_{w/2x}; None when w/2x leaves the positive floats."""
    lam = atom.w / (2.0 * atom.x)
    if not (math.isfinite(lam) and lam > 0):
        return None
    return AtomicMeasure.model_construct(atoms=(Atom.model_construct(x=lam, w=atom.w),))


def omega_sharp(measure: AtomicMeasure, method: Method = "accurate") -> AtomicMeasure:
    return omega(sharp(measure), method)


def omega_theta(measure: AtomicMeasure, method: Method = "accurate") -> AtomicMeasure:
    """Spectral measure of the same model matrix with respect to theta = u/x.

    It agrees with ``omega_sharp`` because the sharp measure has the same model matrix.
    """
    op = build(measure)
    decomposition = decompose(op, method)
    masses = spectral_masses(op, decomposition, "theta")
    return AtomicMeasure.from_arrays(decomposition.eigenvalues[::-1], masses[::-1])


def rho_from_sigma(sigma: AtomicMeasure, method: Method = "accurate") -> AtomicMeasure:
    """rho = Omega(#(Omega(sigma))) for a measure that is both finite and co-finite."""
    return omega(sharp(omega(sigma, method)), method)


def _relative_errors(expected: AtomicMeasure, actual: AtomicMeasure) -> RoundtripErrors:
    if expected.size != actual.size:
        raise StructuralError(f"Atom counts differ: {expected.size} vs {actual.size}")
    node_error = np.max(np.abs(actual.positions - expected.positions) / expected.positions)
    weight_error = np.max(np.abs(actual.weights - expected.weights) / expected.weights)
    return RoundtripErrors(node_error=float(node_error), weight_error=float(weight_error))


def roundtrip_error(measure: AtomicMeasure, method: Method = "accurate") -> RoundtripErrors:
    return _relative_errors(measure, omega(omega(measure, method), method))


def identity_report(measure: AtomicMeasure, method: Method = "accurate") -> IdentityReport:
    op = build(measure)
    decomposition = decompose(op, method)
    values = decomposition.eigenvalues

    mass = total_mass(measure)
    expected_trace = trace(op)
    expected_hs = frobenius_sq(op)
    roundtrip = roundtrip_error(measure, method)
    return IdentityReport(
        mass_error=abs(math.fsum(decomposition.masses) - mass) / mass,
        trace_error=abs(math.fsum(values) - expected_trace) / expected_trace,
        hs_error=abs(math.fsum(values * values) - expected_hs) / expected_hs,
        lyapunov_residual=lyapunov_residual(op),
        roundtrip_node_error=roundtrip.node_error,
        roundtrip_weight_error=roundtrip.weight_error,
    )


def scaling_errors(measure: AtomicMeasure, tau: float, method: Method = "accurate") -> ScalingErrors:
    """Atomwise deviation from Omega(tau mu) = tau sigma_tau and Omega(mu_tau) = sigma_{1/tau}."""
    sigma = omega(measure, method)
    mass_scaled = _relative_errors(
        scale_mass(scale_variable(sigma, tau), tau), omega(scale_mass(measure, tau), method)
    )
    variable_scaled = _relative_errors(
        scale_variable(sigma, 1.0 / tau), omega(scale_variable(measure, tau), method)
    )
    return ScalingErrors(
        tau=tau,
        mass_scaling_error=max(mass_scaled.node_error, mass_scaled.weight_error),
        variable_scaling_error=max(variable_scaled.node_error, variable_scaled.weight_error),
    )


def duality_error(measure: AtomicMeasure, method: Method = "accurate") -> RoundtripErrors:
    """Deviation of #(Omega(Omega#(mu))) from mu."""
    recovered = sharp(omega(omega_sharp(measure, method), method))
    return _relative_errors(measure, recovered)


def hankel_cross_check(
    measure: AtomicMeasure,
    n_t: int = DEFAULT_HANKEL_NT,
    t_max: float = DEFAULT_HANKEL_TMAX,
    tol: float = DEFAULT_HANKEL_TOL,
) -> HankelCrossCheck:
    """Compare model eigenvalues with the top of a discretized integral Hankel operator.

    H_ij = h(t_i + t_j) sqrt(d_i d_j) on Gauss-Legendre knots of [0, t_max];
    its nonzero spectrum should reproduce the model spectrum.
    """
    size = measure.size
    if n_t < size:
        raise ValueError(f"n_t must be at least the number of atoms ({size}), got {n_t}")
    if not t_max > 0:
        raise ValueError(f"t_max must be > 0, got {t_max}")

    knots, knot_weights = gauss_legendre(0.0, t_max, n_t)
    root = np.sqrt(knot_weights)
    hankel = laplace_values(measure, np.add.outer(knots, knots)) * np.outer(root, root)
    grid_values = baseline_eig(0.5 * (hankel + hankel.T)).values
    model_values = decompose(build(measure)).eigenvalues

    deviation = float(np.max(np.abs(grid_values[:size] - model_values) / model_values))
    residual = float(np.max(np.abs(grid_values[size:]))) if n_t > size else 0.0
    x, w = measure.positions, measure.weights
    tail = float(np.max(w * np.exp(-2.0 * x * t_max) / (2.0 * x)) / model_values[-1])
    passed = deviation <= tol and residual <= HANKEL_RESIDUAL_TOL
    if not passed:
        hint = " Raise t_max: the kernel tail is not resolved." if tail > tol else ""
        logger.warning(
            f"Hankel cross-check failed: deviation {deviation:.3e}, residual {residual:.3e}, "
            f"tail {tail:.3e} at t_max={t_max}.{hint}"
        )
    return HankelCrossCheck(
        n_t=n_t,
        t_max=t_max,
        max_relative_deviation=deviation,
        residual_max=residual,
        tail_estimate=tail,
        passed=passed,
    )


def continuity_sequence(n_values: Iterable[int], method: Method = "accurate") -> list[tuple[int, float]]:
    """Atom distance between Omega(delta_{1+1/n}) and the unit atom at 1/2."""
    limit = AtomicMeasure.from_arrays([0.5], [1.0])
    rows = []
    for n in n_values:
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        image = omega(AtomicMeasure.from_arrays([1.0 + 1.0 / n], [1.0]), method)
        rows.append((n, atom_distance(image, limit)))
    return rows


def check_suite(
    measure: AtomicMeasure,
    suite: CheckSuite = "all",
    method: Method = "accurate",
    involution_tol: float = DEFAULT_INVOLUTION_TOL,
    mass_tol: float = DEFAULT_MASS_TOL,
    trace_tol: float = DEFAULT_TRACE_TOL,
    scaling_tol: float = DEFAULT_SCALING_TOL,
    hankel_tol: float = DEFAULT_HANKEL_TOL,
    lyapunov_tol: float = 1e-12,
    taus: Iterable[float] = DEFAULT_TAUS,
    n_t: int = DEFAULT_HANKEL_NT,
    t_max: float = DEFAULT_HANKEL_TMAX,
) -> CheckOutcome:
    """Run one check suite on ``measure`` and list every tolerance it exceeds."""
    wants = (lambda name: True) if suite == "all" else (lambda name: name == suite)
    failures: list[str] = []
    identity = scaling = duality = hankel = None

    if wants("involution") or wants("mass") or wants("trace") or wants("lyapunov"):
        identity = identity_report(measure, method)
        checks = {
            "involution": [
                ("roundtrip_node_error", identity.roundtrip_node_error, involution_tol),
                ("roundtrip_weight_error", identity.roundtrip_weight_error, involution_tol),
            ],
            "mass": [("mass_error", identity.mass_error, mass_tol)],
            "trace": [
                ("trace_error", identity.trace_error, trace_tol),
                ("hs_error", identity.hs_error, trace_tol),
            ],
            "lyapunov": [
                (
                    "lyapunov_residual",
                    identity.lyapunov_residual,
                    lyapunov_tol * float(np.max(measure.weights)),
                )
            ],
        }
        for name, entries in checks.items():
            if wants(name):
                failures += [f"{label}={value!r} > {limit!r}" for label, value, limit in entries if value > limit]

    if wants("scaling"):
        scaling = [scaling_errors(measure, tau, method) for tau in taus]
        for report in scaling:
            worst = max(report.mass_scaling_error, report.variable_scaling_error)
            if worst > scaling_tol:
                failures.append(f"scaling(tau={report.tau!r})={worst!r} > {scaling_tol!r}")

    if wants("duality"):
        duality = duality_error(measure, method)
        worst = max(duality.node_error, duality.weight_error)
        if worst > involution_tol:
            failures.append(f"duality={worst!r} > {involution_tol!r}")

    if wants("hankel"):
        hankel = hankel_cross_check(measure, n_t=n_t, t_max=t_max, tol=hankel_tol)
        if not hankel.passed:
            failures.append(
                f"hankel deviation={hankel.max_relative_deviation!r} residual={hankel.residual_max!r}"
            )

    return CheckOutcome(
        suite=suite,
        size=measure.size,
        identity=identity,
        scaling=scaling or [],
        duality=duality,
        hankel=hankel,
        failures=failures,
    )
