from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from src.constants import GRAMIAN_TAIL_TOL
from src.hankel_spectra.eigensolve import Method, decompose
from src.hankel_spectra.measures import AtomicMeasure
from src.hankel_spectra.model_operator import build
from src.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class DiagonalSystem:
    """x' = -A x + b u, y = <x, b> with A = diag(a) > 0."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape or a.size == 0:
            raise ValueError(f"a and b must be nonempty 1-D arrays of equal length, got {a.shape} and {b.shape}")
        if np.any(~np.isfinite(a)) or np.any(a <= 0):
            raise ValueError("The diagonal of A must be finite and > 0")
        if np.any(~np.isfinite(b)):
            raise ValueError("b must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_measure(cls, measure: AtomicMeasure) -> DiagonalSystem:
        """The realization (X, 1, 1) of the Hankel operator of ``measure``."""
        return cls(a=np.array(measure.positions), b=np.sqrt(measure.weights))

    @property
    def size(self) -> int:
        return int(self.a.shape[0])


@dataclass(frozen=True)
class GramianQuadrature:
    matrix: np.ndarray
    tail_bound: float
    tail_flag: bool


@dataclass(frozen=True)
class BalancedRealization:
    state_matrix: np.ndarray
    input_vector: np.ndarray
    hankel_singular_values: np.ndarray
    basis: np.ndarray

    def gramian_residual(self) -> float:
        """max |A L + L A - b b^T| with L = diag(hankel singular values)."""
        values = self.hankel_singular_values
        residual = (
            self.state_matrix * values[None, :]
            + values[:, None] * self.state_matrix
            - np.outer(self.input_vector, self.input_vector)
        )
        return float(np.max(np.abs(residual)))


def solve_lyapunov(system: DiagonalSystem) -> np.ndarray:
    """Solution W of A W + W A = b b^T, W_ij = b_i b_j / (a_i + a_j)."""
    return np.outer(system.b, system.b) / np.add.outer(system.a, system.a)


def lyapunov_residual(system: DiagonalSystem, gramian: np.ndarray) -> float:
    a = system.a
    residual = a[:, None] * gramian + gramian * a[None, :] - np.outer(system.b, system.b)
    return float(np.max(np.abs(residual)))


def gramian_quadrature(system: DiagonalSystem, horizon: float, steps: int = 4000) -> GramianQuadrature:
    """Composite Simpson on [0, horizon] with ``steps`` panels of the Gramian integrand."""
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")

    t = np.linspace(0.0, horizon, 2 * steps + 1)
    a, b = system.a, system.b
    decay = np.exp(-np.multiply.outer(a, t))
    matrix = np.empty((system.size, system.size))
    for i in range(system.size):
        integrand = b[i] * b[:, None] * decay[i][None, :] * decay
        matrix[i] = simpson(integrand, x=t, axis=-1)

    rates = np.add.outer(a, a)
    tail = float(np.max(np.abs(np.outer(b, b)) * np.exp(-horizon * rates) / rates))
    flagged = tail > GRAMIAN_TAIL_TOL
    if flagged:
        logger.warning(
            f"Gramian tail beyond T={horizon} is {tail:.3e} > {GRAMIAN_TAIL_TOL}; increase the horizon"
        )
    return GramianQuadrature(matrix=matrix, tail_bound=tail, tail_flag=flagged)


def impulse_response(system: DiagonalSystem, t: float) -> float:
    """h(t) = <exp(-tA) b, b> = sum b_i^2 exp(-t a_i)."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return math.fsum(float(bi * bi * math.exp(-t * ai)) for ai, bi in zip(system.a, system.b))


def balanced_realization(system: DiagonalSystem, method: Method = "accurate") -> BalancedRealization:
    """Change to Gramian eigen-coordinates; both Gramians become diag(lambda)."""
    if np.any(system.b == 0):
        raise ValueError("Every mode must be reachable (b_i != 0) for a balanced realization")
    if np.unique(system.a).size != system.size:
        raise ValueError("Repeated poles make the Gramian singular; merge them first")
    measure = AtomicMeasure.from_arrays(system.a, system.b * system.b)
    op = build(measure)
    decomposition = decompose(op, method)

    order = np.argsort(system.a)
    basis = np.empty_like(decomposition.eigenvectors)
    basis[order] = decomposition.eigenvectors
    basis *= np.sign(system.b)[:, None]
    return BalancedRealization(
        state_matrix=basis.T @ np.diag(system.a) @ basis,
        input_vector=basis.T @ system.b,
        hankel_singular_values=decomposition.eigenvalues,
        basis=basis,
    )
