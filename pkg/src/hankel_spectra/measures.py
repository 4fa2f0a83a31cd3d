from __future__ import annotations

import math
from functools import cached_property
from typing import Annotated, Callable, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.constants import (
    CARLESON_EXPONENTS,
    CARLESON_RISE_RTOL,
    CARLESON_STALL_RATIO,
    CARLESON_TREND_SAMPLES,
    KOLMOGOROV_GRID_POINTS,
)
from src.hankel_spectra.errors import DivergentIntegralError, StructuralError
from src.hankel_spectra.quadrature import cumulative_positive, integrate_positive
from src.logger import get_logger

logger = get_logger(__name__)

DensityKind = Literal["exp_scale", "indicator", "mehler_sigma", "rosenblum_rho", "tabulated"]

_REFERENCE_SUPPORT = (0.0, math.pi)


class Atom(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    x: float
    w: float

    @field_validator("x", "w")
    @classmethod
    def validate_positive(cls, value: float, info) -> float:
        if not math.isfinite(value) or value <= 0:
            raise ValueError(f"Atom {info.field_name} must be finite and > 0, got {value}")
        return value


class AtomicMeasure(BaseModel):
    """Finite sum of point masses, atoms sorted by strictly increasing position."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    type: Literal["atomic"] = "atomic"
    atoms: tuple[Atom, ...]

    @field_validator("atoms")
    @classmethod
    def merge_coincident_atoms(cls, atoms: tuple[Atom, ...]) -> tuple[Atom, ...]:
        if not atoms:
            raise ValueError("An atomic measure needs at least one atom")
        merged: dict[float, float] = {}
        for atom in atoms:
            merged[atom.x] = merged.get(atom.x, 0.0) + atom.w
        if len(merged) == len(atoms) and all(a.x < b.x for a, b in zip(atoms, atoms[1:])):
            return atoms
        return tuple(Atom(x=x, w=merged[x]) for x in sorted(merged))

    @classmethod
    def from_arrays(cls, positions, weights) -> AtomicMeasure:
        x = np.asarray(positions, dtype=float)
        w = np.asarray(weights, dtype=float)
        if x.ndim != 1 or x.shape != w.shape:
            raise ValueError(
                f"positions and weights must be 1-D arrays of equal length, got {x.shape} and {w.shape}"
            )
        return cls(atoms=tuple(Atom(x=float(xi), w=float(wi)) for xi, wi in zip(x, w)))

    @cached_property
    def positions(self) -> np.ndarray:
        out = np.array([atom.x for atom in self.atoms], dtype=float)
        out.setflags(write=False)
        return out

    @cached_property
    def weights(self) -> np.ndarray:
        out = np.array([atom.w for atom in self.atoms], dtype=float)
        out.setflags(write=False)
        return out

    @cached_property
    def cumulative_weights(self) -> np.ndarray:
        weights = [atom.w for atom in self.atoms]
        out = np.array([math.fsum(weights[: k + 1]) for k in range(len(weights))], dtype=float)
        out.setflags(write=False)
        return out

    @property
    def size(self) -> int:
        return len(self.atoms)


class DensityTransform(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    op: Literal["variable", "sharp"]
    tau: float = 1.0

    @field_validator("tau")
    @classmethod
    def validate_tau(cls, value: float) -> float:
        if not math.isfinite(value) or value <= 0:
            raise ValueError(f"tau must be finite and > 0, got {value}")
        return value


class DensityMeasure(BaseModel):
    """Absolutely continuous measure ``scale * w(x) dx`` restricted to ``support``.

    ``w`` is one of the closed-form kinds, pulled back through ``transforms``
    (applied in order; ``variable`` is x -> tau*x with the 1/tau Jacobian,
    ``sharp`` is x -> 1/x). ``support`` is always the support of the final
    measure; ``None`` on input selects the kind's natural support and a
    ``null`` upper bound in JSON means +inf.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, ser_json_inf_nan="null")

    type: Literal["density"] = "density"
    kind: DensityKind
    params: dict[str, float | list[float]] = Field(default_factory=dict)
    support: tuple[float, float]
    scale: float = 1.0
    transforms: tuple[DensityTransform, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def fill_default_support(cls, data):
        if isinstance(data, dict) and data.get("support") is None:
            data = dict(data)
            data["support"] = _natural_support(data.get("kind"), data.get("params") or {})
        return data

    @field_validator("support", mode="before")
    @classmethod
    def parse_open_upper_bound(cls, value):
        if isinstance(value, (list, tuple)) and len(value) == 2:
            lo, hi = value
            return (0.0 if lo is None else lo, math.inf if hi is None else hi)
        return value

    @model_validator(mode="after")
    def validate_density(self) -> DensityMeasure:
        lo, hi = self.support
        if math.isnan(lo) or math.isnan(hi) or lo < 0 or not hi > lo:
            raise ValueError(f"support must satisfy 0 <= lo < hi <= inf, got {self.support}")
        if not math.isfinite(self.scale) or self.scale <= 0:
            raise ValueError(f"scale must be finite and > 0, got {self.scale}")

        if self.kind == "exp_scale":
            beta = self.params.get("beta")
            if not isinstance(beta, (int, float)) or not beta > 0 or not math.isfinite(beta):
                raise ValueError("exp_scale needs a finite positive 'beta' parameter")
        elif self.kind == "tabulated":
            xs = np.asarray(self.params.get("x", []), dtype=float)
            ys = np.asarray(self.params.get("y", []), dtype=float)
            if xs.ndim != 1 or xs.size < 2 or xs.shape != ys.shape:
                raise ValueError("tabulated needs 'x' and 'y' sample lists of equal length >= 2")
            if xs[0] < 0 or np.any(np.diff(xs) <= 0):
                raise ValueError("tabulated 'x' samples must be >= 0 and strictly increasing")
            if np.any(ys < 0) or not np.all(np.isfinite(ys)):
                raise ValueError("tabulated 'y' samples must be finite and >= 0")
        return self


Measure = Annotated[Union[AtomicMeasure, DensityMeasure], Field(discriminator="type")]


class MeasureClass(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, ser_json_inf_nan="null")

    is_finite: bool
    is_cofinite: bool
    is_carleson: bool
    bounded_support: bool
    blaschke_atomic: bool
    is_trace_class: bool
    carleson_estimate: float


def _natural_support(kind, params) -> tuple[float, float]:
    if kind in ("mehler_sigma", "rosenblum_rho"):
        return _REFERENCE_SUPPORT
    if kind == "tabulated":
        xs = params.get("x") or [0.0, 0.0]
        return (float(xs[0]), float(xs[-1]))
    return (0.0, math.inf)


def _base_density(measure: DensityMeasure, y: np.ndarray) -> np.ndarray:
    kind = measure.kind
    if kind == "exp_scale":
        return np.exp(-float(measure.params["beta"]) * y)
    if kind == "indicator":
        return np.ones_like(y)
    if kind == "tabulated":
        return np.interp(y, measure.params["x"], measure.params["y"], left=0.0, right=0.0)

    # Import here to avoid a circular import
    from src.hankel_spectra import reference

    if kind == "mehler_sigma":
        return reference.mehler_density(y)
    return reference.rosenblum_density(y)


def density(measure: DensityMeasure, x):
    """Evaluate the density of ``measure`` at ``x`` (scalar or array)."""
    if not isinstance(measure, DensityMeasure):
        raise ValueError("density() is defined for density measures only")
    points = np.asarray(x, dtype=float)
    lo, hi = measure.support
    inside = (points > 0) & (points >= lo) & (points <= hi)
    y = np.where(inside, points, 1.0)
    factor = measure.scale
    for transform in reversed(measure.transforms):
        if transform.op == "variable":
            y = y / transform.tau
            factor /= transform.tau
        else:
            y = 1.0 / y
    values = np.where(inside, factor * _base_density(measure, y), 0.0)
    return float(values) if values.ndim == 0 else values


def _integrate(measure: DensityMeasure, weight: Callable[[float], float]) -> float:
    lo, hi = measure.support
    return integrate_positive(lambda t: weight(t) * density(measure, t), lo, hi)


def total_mass(measure: Measure) -> float:
    if isinstance(measure, AtomicMeasure):
        return float(measure.cumulative_weights[-1])
    return _integrate(measure, lambda t: 1.0)


def inverse_second_moment(measure: Measure) -> float:
    if isinstance(measure, AtomicMeasure):
        return math.fsum(atom.w / (atom.x * atom.x) for atom in measure.atoms)
    return _integrate(measure, lambda t: 1.0 / t / t)


def inverse_first_moment(measure: Measure) -> float:
    if isinstance(measure, AtomicMeasure):
        return math.fsum(atom.w / atom.x for atom in measure.atoms)
    return _integrate(measure, lambda t: 1.0 / t)


def laplace_transform(measure: Measure, t: float) -> float:
    """h(t) = integral of exp(-t x) against ``measure``."""
    if not t > 0:
        raise ValueError(f"Laplace transform needs t > 0, got {t}")
    if isinstance(measure, AtomicMeasure):
        return math.fsum(atom.w * math.exp(-t * atom.x) for atom in measure.atoms)
    return _integrate(measure, lambda s: math.exp(-t * s))


def laplace_values(measure: Measure, t) -> np.ndarray:
    times = np.asarray(t, dtype=float)
    if np.any(times <= 0):
        raise ValueError("Laplace transform needs t > 0")
    if isinstance(measure, AtomicMeasure):
        return np.exp(-np.multiply.outer(times, measure.positions)) @ measure.weights
    flat = [laplace_transform(measure, float(value)) for value in times.ravel()]
    return np.asarray(flat, dtype=float).reshape(times.shape)


def cdf(measure: Measure, x: float) -> float:
    """mu((0, x]); right-continuous."""
    if not x >= 0:
        raise ValueError(f"cdf needs x >= 0, got {x}")
    return float(cdf_values(measure, np.array([x], dtype=float))[0])


def cdf_values(measure: Measure, points, side: Literal["right", "left"] = "right") -> np.ndarray:
    """CDF at every point; ``side="left"`` gives mu((0, x)) for atomic measures."""
    values = np.asarray(points, dtype=float)
    if isinstance(measure, AtomicMeasure):
        prefix = np.concatenate(([0.0], measure.cumulative_weights))
        return prefix[np.searchsorted(measure.positions, values, side=side)]

    lo, hi = measure.support
    order = np.argsort(values, kind="stable")
    clipped = np.clip(values[order], lo, hi)
    out = np.empty_like(values)
    out[order] = cumulative_positive(lambda t: density(measure, t), lo, clipped)
    return out


def _sharp_support(support: tuple[float, float]) -> tuple[float, float]:
    lo, hi = support
    new_lo = 0.0 if math.isinf(hi) else 1.0 / hi
    new_hi = math.inf if lo == 0 else 1.0 / lo
    return (new_lo, new_hi)


def sharp(measure: Measure) -> Measure:
    """Push ``measure`` forward under x -> 1/x with the x^-2 Jacobian."""
    if isinstance(measure, AtomicMeasure):
        inverted = 1.0 / measure.positions
        return AtomicMeasure.from_arrays(inverted, measure.weights * inverted * inverted)

    support = _sharp_support(measure.support)
    transforms = measure.transforms
    if measure.kind == "indicator" and not transforms:
        return measure.model_copy(update={"support": support})
    if transforms and transforms[-1].op == "sharp":
        return measure.model_copy(update={"support": support, "transforms": transforms[:-1]})
    return measure.model_copy(
        update={"support": support, "transforms": transforms + (DensityTransform(op="sharp"),)}
    )


def scale_mass(measure: Measure, tau: float) -> Measure:
    _require_tau(tau)
    if isinstance(measure, AtomicMeasure):
        return AtomicMeasure.from_arrays(measure.positions, measure.weights * tau)
    return measure.model_copy(update={"scale": measure.scale * tau})


def scale_variable(measure: Measure, tau: float) -> Measure:
    """Push ``measure`` forward under x -> tau*x."""
    _require_tau(tau)
    if isinstance(measure, AtomicMeasure):
        return AtomicMeasure.from_arrays(measure.positions * tau, measure.weights)

    lo, hi = measure.support
    update: dict = {"support": (lo * tau, hi * tau), "scale": measure.scale / tau}
    transforms = measure.transforms
    if not transforms and measure.kind == "indicator":
        return measure.model_copy(update=update)
    if not transforms and measure.kind == "exp_scale":
        update["params"] = {**measure.params, "beta": float(measure.params["beta"]) / tau}
        return measure.model_copy(update=update)

    # the Jacobian lives in the transform itself
    update["scale"] = measure.scale
    if transforms and transforms[-1].op == "variable":
        merged = DensityTransform(op="variable", tau=transforms[-1].tau * tau)
        update["transforms"] = transforms[:-1] + (merged,)
    else:
        update["transforms"] = transforms + (DensityTransform(op="variable", tau=tau),)
    return measure.model_copy(update=update)


def _require_tau(tau: float) -> None:
    if not math.isfinite(tau) or tau <= 0:
        raise ValueError(f"Scale factor must be finite and > 0, got {tau}")


def _keeps_climbing(ratios: np.ndarray) -> bool:
    """True when the last samples (toward the end of ``ratios``) rise and the rises do not shrink."""
    tail = ratios[-CARLESON_TREND_SAMPLES:]
    rises = np.diff(tail)
    if not np.all(rises > CARLESON_RISE_RTOL * np.abs(tail[1:])):
        return False
    return bool(rises[-1] >= CARLESON_STALL_RATIO * rises[0])


def _converges(compute: Callable[[], float]) -> bool:
    try:
        compute()
    except DivergentIntegralError:
        return False
    return True


def classify(measure: Measure) -> MeasureClass:
    """Classify ``measure``.

    For densities the Carleson flag is a semi-decision: mu((0, a))/a is sampled
    at a = 2**j and the measure is called non-Carleson when a sampled ratio
    diverges or an end of the grid keeps climbing without the rises dying out.
    """
    if isinstance(measure, AtomicMeasure):
        estimate = float(np.max(measure.cumulative_weights / measure.positions))
        return MeasureClass(
            is_finite=True,
            is_cofinite=True,
            is_carleson=True,
            bounded_support=True,
            blaschke_atomic=True,
            is_trace_class=True,
            carleson_estimate=estimate,
        )

    exponents = list(CARLESON_EXPONENTS)
    grid = np.exp2(np.array(exponents, dtype=float))
    try:
        ratios = cdf_values(measure, grid) / grid
        is_carleson = not (_keeps_climbing(ratios[::-1]) or _keeps_climbing(ratios))
        estimate = float(np.max(ratios))
    except DivergentIntegralError:
        is_carleson = False
        estimate = math.inf
    if not is_carleson:
        logger.info(f"Measure {measure.kind} looks non-Carleson (sampled sup ratio {estimate})")

    return MeasureClass(
        is_finite=_converges(lambda: total_mass(measure)),
        is_cofinite=_converges(lambda: inverse_second_moment(measure)),
        is_carleson=is_carleson,
        bounded_support=math.isfinite(measure.support[1]),
        blaschke_atomic=False,
        is_trace_class=_converges(lambda: inverse_first_moment(measure)),
        carleson_estimate=estimate,
    )


def _require_finite_mass(measure: Measure) -> float:
    try:
        return total_mass(measure)
    except DivergentIntegralError as exc:
        raise ValueError("Kolmogorov distance needs finite measures; infinite-mass input rejected") from exc


def _extent(measure: Measure) -> tuple[float, float]:
    """Smallest and largest abscissas worth sampling for ``measure``."""
    if isinstance(measure, AtomicMeasure):
        return float(measure.positions[0]), float(measure.positions[-1])
    lo, hi = measure.support
    if math.isinf(hi):
        mass = total_mass(measure)
        hi = max(1.0, 2.0 * lo)
        while cdf(measure, hi) < (1.0 - 1e-9) * mass and hi < 1e300:
            hi *= 2.0
    return (lo if lo > 0 else hi * 1e-9), hi


def kolmogorov_distance(first: Measure, second: Measure, grid=None) -> float:
    """sup_x |F1(x) - F2(x)| over atom positions (both one-sided limits) and a grid."""
    first_mass = _require_finite_mass(first)
    second_mass = _require_finite_mass(second)

    if grid is None:
        extents = [_extent(first), _extent(second)]
        lower = min(low for low, _ in extents)
        upper = max(high for _, high in extents)
        grid = np.union1d(
            np.linspace(0.0, upper, KOLMOGOROV_GRID_POINTS),
            np.geomspace(lower, upper, KOLMOGOROV_GRID_POINTS),
        )
    points = [np.asarray(grid, dtype=float)]
    points += [m.positions for m in (first, second) if isinstance(m, AtomicMeasure)]
    points = np.unique(np.concatenate(points))
    points = points[points >= 0]

    distance = abs(first_mass - second_mass)
    first_right = cdf_values(first, points)
    second_right = cdf_values(second, points)
    first_left = cdf_values(first, points, "left") if isinstance(first, AtomicMeasure) else first_right
    second_left = cdf_values(second, points, "left") if isinstance(second, AtomicMeasure) else second_right
    if points.size:
        distance = max(
            distance,
            float(np.max(np.abs(first_right - second_right))),
            float(np.max(np.abs(first_left - second_left))),
        )
    return distance


def midpoint_kolmogorov_distance(atomic: AtomicMeasure, other: Measure) -> float:
    """sup over atoms of |F(x_k-) + w_k/2 - G(x_k)|, together with the total-mass gap.

    Each atom is read at the middle of its jump, so a quadrature of a smooth
    density is charged its discretization error rather than half its largest atom.
    """
    if not isinstance(atomic, AtomicMeasure):
        raise ValueError("midpoint_kolmogorov_distance needs an atomic first argument")
    gap = abs(_require_finite_mass(atomic) - _require_finite_mass(other))
    positions = atomic.positions
    middle = cdf_values(atomic, positions, "left") + 0.5 * atomic.weights
    return max(gap, float(np.max(np.abs(middle - cdf_values(other, positions)))))


def atom_distance(first: AtomicMeasure, second: AtomicMeasure) -> float:
    """Max over atoms (matched in sorted order) of |dx| + |dw|."""
    if not isinstance(first, AtomicMeasure) or not isinstance(second, AtomicMeasure):
        raise ValueError("atom_distance is defined for atomic measures only")
    if first.size != second.size:
        raise StructuralError(f"Atom counts differ: {first.size} vs {second.size}")
    gaps = np.abs(first.positions - second.positions) + np.abs(first.weights - second.weights)
    return float(np.max(gaps))
