"""Closed-form spectral densities of the two worked Hankel examples.

``mehler_sigma`` is the spectral measure of the Hankel operator with kernel
1/(t+2) (the image of e^{-2x}dx); ``rosenblum_rho`` is the dual spectral
measure of the kernel e^{-t/2}/t (the image of the indicator of (1/2, inf)).
Both live on [0, pi].
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.constants import (
    DEFAULT_REFERENCE_TOL,
    REFERENCE_GRID_POINTS,
    REFERENCE_LOG_SPAN_PER_NODE,
    REFERENCE_T_LO_FLOOR,
)
from src.hankel_spectra.discretize import DiscretizationConfig, discretize
from src.hankel_spectra.eigensolve import Method
from src.hankel_spectra.measures import (
    AtomicMeasure,
    DensityMeasure,
    cdf_values,
    laplace_transform,
    midpoint_kolmogorov_distance,
    sharp,
    total_mass,
)
from src.hankel_spectra.spectral_map import omega
from src.hankel_spectra.utils import ensure_dir
from src.logger import get_logger

logger = get_logger(__name__)

ReferenceName = Literal["mehler_sigma", "rosenblum_rho"]
REFERENCE_NAMES: tuple[str, ...] = ("mehler_sigma", "rosenblum_rho")
EULER_GAMMA = 0.5772156649015329

# Godfrey's coefficients for g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


class ReferenceSpectrum(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: ReferenceName
    support: tuple[float, float] = (0.0, math.pi)
    total_mass: float

    def density(self, lam):
        return mehler_density(lam) if self.name == "mehler_sigma" else rosenblum_density(lam)

    def as_measure(self) -> DensityMeasure:
        return DensityMeasure(kind=self.name)


REFERENCE_SPECTRA: dict[str, ReferenceSpectrum] = {
    "mehler_sigma": ReferenceSpectrum(name="mehler_sigma", total_mass=0.5),
    "rosenblum_rho": ReferenceSpectrum(name="rosenblum_rho", total_mass=2.0),
}


class PipelineResult(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: ReferenceName
    n_nodes: int
    truncation: tuple[float, float]
    spectrum: AtomicMeasure
    distance: float
    mass: float
    max_eigenvalue: float


def reference_spectrum(name: str) -> ReferenceSpectrum:
    try:
        return REFERENCE_SPECTRA[name]
    except KeyError:
        raise ValueError(f"Unknown reference spectrum: {name}. Expected one of {REFERENCE_NAMES}") from None


def arcsech(y):
    """Inverse hyperbolic secant on (0, 1], as log((1 + sqrt(1 - y^2)) / y)."""
    y = np.asarray(y, dtype=float)
    out = np.log1p(np.sqrt((1.0 - y) * (1.0 + y))) - np.log(y)
    return float(out) if out.ndim == 0 else out


def _on_support(lam) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(lam, dtype=float)
    inside = (values > 0) & (values < math.pi)
    return np.where(inside, values, 1.0), inside


def mehler_density(lam):
    """pi^-2 arcsech(lam / pi) on (0, pi), zero elsewhere."""
    values, inside = _on_support(lam)
    out = np.where(inside, arcsech(values / math.pi) / math.pi**2, 0.0)
    return float(out) if out.ndim == 0 else out


def rosenblum_density(lam):
    """(2 pi^2)^-1 (k/lam) |Gamma(1/4 + ik/2)|^4 with k = arcsech(lam/pi)/pi."""
    values, inside = _on_support(lam)
    k = np.asarray(arcsech(values / math.pi)) / math.pi
    gamma_power = np.exp(4.0 * np.asarray(log_abs_gamma_quarter(k)))
    out = np.where(inside, k / values * gamma_power / (2.0 * math.pi**2), 0.0)
    return float(out) if out.ndim == 0 else out


def _log_abs_sin_pi(z: np.ndarray) -> np.ndarray:
    """log|sin(pi z)| without overflow for large imaginary parts."""
    x, big_y = z.real, 2.0 * math.pi * np.abs(z.imag)
    cosine = np.cos(2.0 * math.pi * x)
    small = np.minimum(big_y, 1.0)
    direct = 0.5 * np.log(0.5 * (np.cosh(small) - cosine))
    decay = np.exp(-np.maximum(big_y, 1.0))
    asymptotic = 0.5 * (big_y - math.log(4.0) + np.log1p(decay * decay - 2.0 * cosine * decay))
    return np.where(big_y < 1.0, direct, asymptotic)


def log_abs_gamma(z):
    """log|Gamma(z)| by the Lanczos approximation, reflected for Re z < 1/2."""
    values = np.asarray(z, dtype=complex)
    reflect = values.real < 0.5
    shifted = np.where(reflect, 1.0 - values, values) - 1.0

    series = np.full(shifted.shape, _LANCZOS_COEFFICIENTS[0], dtype=complex)
    for index, coefficient in enumerate(_LANCZOS_COEFFICIENTS[1:], start=1):
        series = series + coefficient / (shifted + index)
    t = shifted + _LANCZOS_G + 0.5
    core = _HALF_LOG_TWO_PI + ((shifted + 0.5) * np.log(t)).real - t.real + np.log(np.abs(series))

    with np.errstate(divide="ignore", invalid="ignore"):
        reflected = math.log(math.pi) - _log_abs_sin_pi(values) - core
    out = np.where(reflect, reflected, core)
    return float(out) if out.ndim == 0 else out


def log_abs_gamma_quarter(k):
    """log|Gamma(1/4 + ik/2)|."""
    k = np.asarray(k, dtype=float)
    return log_abs_gamma(0.25 + 0.5j * k)


def reference_cdf(name: str, lam: float) -> float:
    spectrum = reference_spectrum(name)
    if lam <= 0:
        return 0.0
    return float(cdf_values(spectrum.as_measure(), np.array([min(lam, math.pi)]))[0])


def compare(sigma: AtomicMeasure, name: str) -> float:
    """Kolmogorov distance to the named reference spectrum, each atom read at mid-jump."""
    return midpoint_kolmogorov_distance(sigma, reference_spectrum(name).as_measure())


def mehler_kernel(t: float) -> float:
    """h_sigma(t) for the Mehler spectral measure, by quadrature."""
    return laplace_transform(reference_spectrum("mehler_sigma").as_measure(), t)


def mehler_kernel_asymptotic(t: float, terms: int = 1) -> float:
    """Large-t behaviour of h_sigma: log(t)/(pi^2 t), optionally with the constant term."""
    if not t > 1:
        raise ValueError(f"The asymptotic form needs t > 1, got {t}")
    if terms not in (1, 2):
        raise ValueError(f"terms must be 1 or 2, got {terms}")
    numerator = math.log(t)
    if terms == 2:
        numerator += math.log(2.0 * math.pi) + EULER_GAMMA
    return numerator / (math.pi**2 * t)


def reference_table(name: str, n_points: int = REFERENCE_GRID_POINTS) -> list[tuple[float, float, float]]:
    """(lambda, density, cdf) rows on a uniform grid of (0, pi]."""
    spectrum = reference_spectrum(name)
    grid = np.linspace(0.0, math.pi, n_points + 1)[1:]
    densities = np.asarray(spectrum.density(grid))
    cdfs = cdf_values(spectrum.as_measure(), grid)
    return [(float(a), float(b), float(c)) for a, b, c in zip(grid, densities, cdfs)]


def write_reference_table(name: str, output_path: str | Path, n_points: int = REFERENCE_GRID_POINTS) -> Path:
    path = Path(output_path)
    ensure_dir(path.parent)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["lambda", "density", "cdf"])
        for row in reference_table(name, n_points):
            writer.writerow([repr(value) for value in row])
    return path


def pipeline_lower_truncation(n_nodes: int, t_hi: float) -> float:
    """t_lo = t_hi * exp(-span * n_nodes), so the panels keep their log-width as n grows."""
    return max(t_hi * math.exp(-REFERENCE_LOG_SPAN_PER_NODE * n_nodes), REFERENCE_T_LO_FLOOR)


def _run_pipeline(
    name: ReferenceName, source: DensityMeasure, cfg: DiscretizationConfig, method: Method
) -> PipelineResult:
    spectrum = omega(discretize(source, cfg), method)
    distance = compare(spectrum, name)
    result = PipelineResult(
        name=name,
        n_nodes=cfg.n_nodes,
        truncation=cfg.truncation,
        spectrum=spectrum,
        distance=distance,
        mass=total_mass(spectrum),
        max_eigenvalue=float(spectrum.positions[-1]),
    )
    logger.info(
        f"{name} pipeline n={cfg.n_nodes}: kolmogorov={distance:.4e}, mass={result.mass!r}, "
        f"max eigenvalue={result.max_eigenvalue!r}"
    )
    if distance > DEFAULT_REFERENCE_TOL:
        logger.warning(f"{name} pipeline distance {distance:.4e} exceeds {DEFAULT_REFERENCE_TOL}")
    return result


def mehler_pipeline(
    n_nodes: int,
    truncate: float = 30.0,
    t_lo: float | None = None,
    method: Method = "accurate",
    **rule,
) -> PipelineResult:
    """Omega of the discretized e^{-2x}dx against the Mehler density."""
    source = DensityMeasure(kind="exp_scale", params={"beta": 2.0})
    if t_lo is None:
        t_lo = pipeline_lower_truncation(n_nodes, truncate)
    cfg = DiscretizationConfig(n_nodes=n_nodes, truncation=(t_lo, truncate), **rule)
    return _run_pipeline("mehler_sigma", source, cfg, method)


def rosenblum_pipeline(
    n_nodes: int,
    truncate: float = 2.0,
    t_lo: float | None = None,
    method: Method = "accurate",
    **rule,
) -> PipelineResult:
    """Omega# of the indicator of (1/2, inf), realized as Omega of its sharp image on (0, 2)."""
    source = sharp(DensityMeasure(kind="indicator", support=(0.5, None)))
    upper = min(truncate, source.support[1])
    if t_lo is None:
        t_lo = pipeline_lower_truncation(n_nodes, upper)
    cfg = DiscretizationConfig(n_nodes=n_nodes, truncation=(t_lo, upper), **rule)
    return _run_pipeline("rosenblum_rho", source, cfg, method)


def run_pipeline(name: str, n_nodes: int, **kwargs) -> PipelineResult:
    spectrum = reference_spectrum(name)
    if spectrum.name == "mehler_sigma":
        return mehler_pipeline(n_nodes, **kwargs)
    return rosenblum_pipeline(n_nodes, **kwargs)
