"""Adaptive integration of nonnegative integrands over subsets of (0, inf).

Finite pieces go to QUADPACK (``scipy.integrate.quad``, 21-point
Gauss-Kronrod with extrapolation). Ranges that touch 0 or infinity are cut
into dyadic shells and summed until the shells stop contributing; a range
whose shells never settle is reported through ``DivergentIntegralError``
instead of a silent ``inf``.
"""
from __future__ import annotations

import functools
import math
import warnings
from typing import Callable

import numpy as np
from scipy import integrate

from src.constants import (
    QUAD_EPSREL,
    QUAD_LIMIT_PER_PIECE,
    QUAD_MAX_SHELLS,
    QUAD_MAX_SUBDIVISIONS,
)
from src.hankel_spectra.errors import DivergentIntegralError
from src.logger import get_logger

logger = get_logger(__name__)

_FLOOR = 1e-300
_CEILING = 1e300
_SPAN_RATIO = 16.0


class _Budget:
    def __init__(self, limit: int = QUAD_MAX_SUBDIVISIONS):
        self.limit = limit
        self.used = 0

    def charge(self, subdivisions: int) -> None:
        self.used += subdivisions
        if self.used > self.limit:
            raise DivergentIntegralError(
                f"Quadrature budget of {self.limit} subdivisions exhausted"
            )


def integrate_positive(func: Callable[[float], float], lo: float, hi: float) -> float:
    """Integrate a nonnegative ``func`` over ``(lo, hi)`` with ``0 <= lo``, ``hi <= inf``."""
    if lo < 0:
        raise ValueError(f"Lower limit must be >= 0, got {lo}")
    if not hi > lo:
        return 0.0

    budget = _Budget()
    if lo > 0 and math.isfinite(hi):
        return _span(func, lo, hi, budget)

    if lo == 0:
        pivot = hi if hi <= 1.0 else 1.0
        total = _march(func, pivot, downward=True, budget=budget)
        if hi > pivot:
            if math.isfinite(hi):
                total += _span(func, pivot, hi, budget)
            else:
                total += _march(func, pivot, downward=False, budget=budget)
    else:
        pivot = max(lo, 1.0)
        total = _span(func, lo, pivot, budget) if pivot > lo else 0.0
        total += _march(func, pivot, downward=False, budget=budget)

    if not math.isfinite(total):
        raise DivergentIntegralError(f"Integral over ({lo}, {hi}) is not finite")
    logger.debug("Integrated over (%s, %s) with %d subdivisions: %r", lo, hi, budget.used, total)
    return total


def cumulative_positive(
    func: Callable[[float], float], lo: float, points: np.ndarray
) -> np.ndarray:
    """Running integrals of ``func`` from ``lo`` to each of the sorted ``points``."""
    values = np.asarray(points, dtype=float)
    if values.ndim != 1:
        raise ValueError("points must be a 1-D array")
    if values.size and np.any(np.diff(values) < 0):
        raise ValueError("points must be sorted in nondecreasing order")

    out = np.empty_like(values)
    running = 0.0
    previous = lo
    for index, point in enumerate(values):
        if point > previous:
            running += integrate_positive(func, previous, float(point))
            previous = float(point)
        out[index] = running
    return out


def _piece(func: Callable[[float], float], a: float, b: float, budget: _Budget) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        result = integrate.quad(
            func,
            a,
            b,
            epsabs=0.0,
            epsrel=QUAD_EPSREL,
            limit=QUAD_LIMIT_PER_PIECE,
            full_output=1,
        )
    value, info = result[0], result[2]
    budget.charge(int(info.get("last", 1)))
    if len(result) > 3:
        logger.debug("quad on [%s, %s] reported: %s", a, b, result[3])
    if not math.isfinite(value):
        raise DivergentIntegralError(f"Integrand is not integrable on [{a}, {b}]")
    return value


def _span(func: Callable[[float], float], a: float, b: float, budget: _Budget) -> float:
    if b / a <= _SPAN_RATIO:
        return _piece(func, a, b, budget)
    count = int(math.ceil(math.log2(b / a)))
    edges = a * np.exp2(np.arange(count + 1, dtype=float))
    edges[-1] = b
    return math.fsum(_piece(func, float(left), float(right), budget) for left, right in zip(edges[:-1], edges[1:]))


def _march(
    func: Callable[[float], float], pivot: float, downward: bool, budget: _Budget
) -> float:
    shells: list[float] = []
    for k in range(QUAD_MAX_SHELLS):
        if downward:
            a, b = math.ldexp(pivot, -(k + 1)), math.ldexp(pivot, -k)
            if a < _FLOOR:
                break
        else:
            a, b = math.ldexp(pivot, k), math.ldexp(pivot, k + 1)
            if b > _CEILING:
                break
        shells.append(_piece(func, a, b, budget))
        total = math.fsum(shells)
        if not math.isfinite(total):
            raise DivergentIntegralError("Shell sums overflowed")
        if _settled(shells, total):
            return total

    total = math.fsum(shells)
    if shells and max(shells[-3:]) <= QUAD_EPSREL * total or total == 0.0:
        return total
    direction = "0" if downward else "infinity"
    raise DivergentIntegralError(
        f"Integral toward {direction} did not settle after {len(shells)} dyadic shells"
    )


def _settled(shells: list[float], total: float) -> bool:
    if len(shells) < 3 or total <= 0.0:
        return False
    first, second, third = shells[-3:]
    tolerance = QUAD_EPSREL * total
    return first >= second >= third and second <= tolerance and third <= tolerance


@functools.lru_cache(maxsize=64)
def _legendre_reference(n: int) -> tuple[np.ndarray, np.ndarray]:
    knots, weights = np.polynomial.legendre.leggauss(n)
    knots.setflags(write=False)
    weights.setflags(write=False)
    return knots, weights


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre knots and weights on ``[a, b]``."""
    if n < 1:
        raise ValueError(f"Number of Gauss-Legendre points must be >= 1, got {n}")
    if not b > a:
        raise ValueError(f"Interval must satisfy a < b, got [{a}, {b}]")
    knots, weights = _legendre_reference(n)
    knots_a_b = 0.5 * (b - a) * knots + 0.5 * (b + a)
    weights_a_b = 0.5 * (b - a) * weights
    return knots_a_b, weights_a_b
