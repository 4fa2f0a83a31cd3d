"""High relative accuracy eigensolver for the Cauchy-like model matrix.

The accurate path never forms ``M`` numerically: it runs a pivoted Cholesky
directly on the node data (every Schur complement of ``M`` is again of the
form ``g_i g_j / (x_i + x_j)``), then orthogonalizes the columns of the
factor with one-sided Jacobi rotations. The baseline path is a textbook
two-sided Jacobi iteration on the assembled matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.constants import (
    BASELINE_JACOBI_MAX_N,
    JACOBI_COSINE_TOL,
    JACOBI_CYCLIC_MAX_N,
    JACOBI_MAX_SWEEPS,
    PIVOT_UNDERFLOW,
    TIE_RTOL,
)
from src.hankel_spectra.errors import ConditioningError, ConvergenceError, DegenerateSpectrumError
from src.hankel_spectra.model_operator import ModelOperator, check_node_separation
from src.logger import get_logger

logger = get_logger(__name__)

Method = Literal["accurate", "baseline"]


@dataclass(frozen=True)
class FactorForm:
    factor: np.ndarray  # N x r, rows in pivot order
    pivot_order: np.ndarray
    pivots: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.factor.shape[1])

    @property
    def min_pivot(self) -> float:
        return float(self.pivots[-1])

    @property
    def max_pivot(self) -> float:
        return float(self.pivots[0])

    def permuted_matrix(self, matrix: np.ndarray) -> np.ndarray:
        """``matrix`` with rows and columns in pivot order, comparable to G G^T."""
        return matrix[np.ix_(self.pivot_order, self.pivot_order)]


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray  # descending
    vectors: np.ndarray  # orthonormal columns, original row order
    sweeps: int

    @property
    def singular_values(self) -> np.ndarray:
        return np.sqrt(self.values)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    masses: np.ndarray
    orthogonality_residual: float
    method_tag: Method
    sweeps: int

    @property
    def size(self) -> int:
        return int(self.eigenvalues.shape[0])


def accurate_factor(nodes, weights) -> FactorForm:
    """Pivoted Cholesky of M_ij = sqrt(w_i w_j)/(x_i + x_j) by the quasi-Cauchy recurrence.

    Eliminating pivot p maps the generators g_i -> g_i (x_i - x_p)/(x_i + x_p),
    so every entry stays a product of quotients of node sums and differences.
    """
    x = np.array(nodes, dtype=float)
    w = np.array(weights, dtype=float)
    if x.ndim != 1 or x.shape != w.shape or x.size == 0:
        raise ValueError("nodes and weights must be nonempty 1-D arrays of equal length")
    if np.any(x <= 0) or np.any(w <= 0):
        raise ValueError("nodes and weights must be strictly positive")
    check_node_separation(x)

    n = x.size
    g = np.sqrt(w)
    order = np.arange(n)
    factor = np.zeros((n, n), dtype=float)
    pivots: list[float] = []

    for k in range(n):
        diagonal = g[k:] * g[k:] / (2.0 * x[k:])
        j = k + int(np.argmax(diagonal))
        pivot = float(diagonal[j - k])
        if pivot < PIVOT_UNDERFLOW:
            logger.warning(
                f"Pivot {pivot!r} underflowed at step {k} of {n}; truncating factor to rank {k}"
            )
            factor = factor[:, :k]
            break
        if j != k:
            for array in (x, g, order):
                array[[k, j]] = array[[j, k]]
            factor[[k, j], :k] = factor[[j, k], :k]

        pivots.append(pivot)
        scale = np.sign(g[k]) * np.sqrt(2.0 * x[k])
        factor[k:, k] = g[k:] * scale / (x[k:] + x[k])
        factor[k, k] = np.sqrt(pivot)
        g[k + 1:] *= (x[k + 1:] - x[k]) / (x[k + 1:] + x[k])

    if not pivots:
        raise ConditioningError("Every pivot underflowed; the model matrix is numerically zero")
    logger.debug("Quasi-Cauchy Cholesky: rank %d, pivots in [%r, %r]", len(pivots), pivots[-1], pivots[0])
    return FactorForm(factor=factor, pivot_order=order, pivots=np.array(pivots))


def _rotation(alpha: float, beta: float, gamma: float) -> tuple[float, float]:
    zeta = (beta - alpha) / (2.0 * gamma)
    t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, c * t


def _cyclic_sweep(a: np.ndarray, tol: float) -> int:
    rotations = 0
    columns = a.shape[1]
    for p in range(columns - 1):
        for q in range(p + 1, columns):
            ap, aq = a[:, p], a[:, q]
            alpha = float(ap @ ap)
            beta = float(aq @ aq)
            gamma = float(ap @ aq)
            if abs(gamma) <= tol * np.sqrt(alpha * beta):
                continue
            c, s = _rotation(alpha, beta, gamma)
            new_p = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            a[:, p] = new_p
            rotations += 1
    return rotations


def _round_robin_rounds(columns: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings of the circle method: every pair meets once, pairs in a round are disjoint."""
    players = list(range(columns)) + ([-1] if columns % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _round_robin_sweep(a: np.ndarray, tol: float, rounds) -> int:
    rotations = 0
    for p, q in rounds:
        ap, aq = a[:, p], a[:, q]
        alpha = np.einsum("ij,ij->j", ap, ap)
        beta = np.einsum("ij,ij->j", aq, aq)
        gamma = np.einsum("ij,ij->j", ap, aq)
        active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
        if not np.any(active):
            continue
        p, q = p[active], q[active]
        alpha, beta, gamma = alpha[active], beta[active], gamma[active]
        ap, aq = ap[:, active], aq[:, active]
        zeta = (beta - alpha) / (2.0 * gamma)
        t = np.copysign(1.0, zeta) / (np.abs(zeta) + np.hypot(1.0, zeta))
        c = 1.0 / np.sqrt(1.0 + t * t)
        s = c * t
        a[:, p] = c * ap - s * aq
        a[:, q] = s * ap + c * aq
        rotations += int(p.size)
    return rotations


def rotation_threshold(rows: int) -> float:
    """Column cosine below which a pair is left alone: 1e-15, raised to rows * eps for taller factors."""
    return max(JACOBI_COSINE_TOL, rows * float(np.finfo(float).eps))


def jacobi_factor_svd(f: FactorForm) -> EigenPairs:
    """One-sided Jacobi on the columns of the factor; eigenvalues are squared column norms."""
    a = np.array(f.factor, dtype=float)
    rows, columns = a.shape
    tol = rotation_threshold(rows)
    rounds = _round_robin_rounds(columns) if columns > JACOBI_CYCLIC_MAX_N else None

    for sweep in range(1, JACOBI_MAX_SWEEPS + 1):
        if rounds is None:
            rotations = _cyclic_sweep(a, tol)
        else:
            rotations = _round_robin_sweep(a, tol, rounds)
        if rotations == 0:
            break
    else:
        raise ConvergenceError(f"One-sided Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")

    values = np.einsum("ij,ij->j", a, a)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    a = a[:, order]
    vectors = np.empty_like(a)
    vectors[f.pivot_order] = a / np.sqrt(values)
    logger.debug("One-sided Jacobi converged after %d sweeps on %d columns", sweep, columns)
    return EigenPairs(values=values, vectors=vectors, sweeps=sweep)


def baseline_eig(matrix, solver: Literal["auto", "jacobi", "lapack"] = "auto") -> EigenPairs:
    """Working-precision eigendecomposition of a symmetric matrix.

    Cyclic two-sided Jacobi up to ``BASELINE_JACOBI_MAX_N`` rows, LAPACK above.
    """
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=1e-12, atol=0.0):
        raise ValueError("baseline_eig expects a symmetric matrix")
    n = m.shape[0]

    if solver == "lapack" or (solver == "auto" and n > BASELINE_JACOBI_MAX_N):
        values, vectors = np.linalg.eigh(m)
        order = np.argsort(-values, kind="stable")
        return EigenPairs(values=values[order], vectors=vectors[:, order], sweeps=0)

    v = np.eye(n)
    scale = np.linalg.norm(m)
    tol = np.finfo(float).eps * scale
    for sweep in range(1, JACOBI_MAX_SWEEPS + 1):
        off = np.sqrt(max(np.sum(m * m) - np.sum(np.diag(m) ** 2), 0.0))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if m[p, q] == 0.0:
                    continue
                c, s = _rotation(m[p, p], m[q, q], m[p, q])
                for target in (m, v):
                    col_p = target[:, p].copy()
                    target[:, p] = c * col_p - s * target[:, q]
                    target[:, q] = s * col_p + c * target[:, q]
                row_p = m[p, :].copy()
                m[p, :] = c * row_p - s * m[q, :]
                m[q, :] = s * row_p + c * m[q, :]
    else:
        raise ConvergenceError(f"Cyclic Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")

    values = np.diag(m).copy()
    order = np.argsort(-values, kind="stable")
    return EigenPairs(values=values[order], vectors=v[:, order], sweeps=sweep)


def decompose(op: ModelOperator, method: Method = "accurate") -> SpectralDecomposition:
    if method not in ("accurate", "baseline"):
        raise ValueError(f"Unknown method: {method}")

    if op.size == 1:
        pairs = EigenPairs(values=np.array([op.matrix[0, 0]]), vectors=np.ones((1, 1)), sweeps=0)
    elif method == "accurate":
        pairs = jacobi_factor_svd(accurate_factor(op.nodes, op.weights))
    else:
        pairs = baseline_eig(op.matrix)

    values = pairs.values
    if values.size != op.size or np.any(values <= 0):
        raise ConditioningError(
            f"{method} eigensolver returned {values.size} eigenvalues with minimum {values.min()!r}; "
            "the model matrix is numerically singular for this solver"
        )
    gaps = values[:-1] - values[1:]
    ties = np.flatnonzero(gaps <= TIE_RTOL * values[:-1])
    if ties.size:
        k = int(ties[0])
        raise DegenerateSpectrumError(
            f"Eigenvalues {values[k]!r} and {values[k + 1]!r} coincide at working precision"
        )

    vectors = np.array(pairs.vectors)
    vectors *= np.where(vectors.T @ op.cyclic_vector < 0, -1.0, 1.0)
    residual = float(np.max(np.abs(vectors.T @ vectors - np.eye(op.size))))
    logger.debug("%s decomposition of size %d: orthogonality residual %.3e", method, op.size, residual)
    return SpectralDecomposition(
        eigenvalues=values,
        eigenvectors=vectors,
        masses=_masses(op, values, vectors, method, "cyclic"),
        orthogonality_residual=residual,
        method_tag=method,
        sweeps=pairs.sweeps,
    )


def spectral_masses(
    op: ModelOperator,
    decomposition: SpectralDecomposition,
    vector: Literal["cyclic", "theta"] = "cyclic",
) -> np.ndarray:
    """Spectral masses (q_k . v)^2 of the cyclic vector u or of theta = u/x.

    On the accurate path they come from the Lyapunov identities
    (q.u)^2 = 2 lambda sum x_i q_i^2 and (q.theta)^2 = 2 lambda sum q_i^2 / x_i,
    which add positive terms only.
    """
    return _masses(
        op,
        decomposition.eigenvalues,
        decomposition.eigenvectors,
        decomposition.method_tag,
        vector,
    )


def _masses(op, values, vectors, method, vector) -> np.ndarray:
    if vector not in ("cyclic", "theta"):
        raise ValueError(f"Unknown cyclic vector: {vector}")
    if op.size == 1:
        weight = op.weights[0] if vector == "cyclic" else op.weights[0] / op.nodes[0] ** 2
        return np.array([float(weight)])
    if method == "accurate":
        scale = op.nodes if vector == "cyclic" else 1.0 / op.nodes
        return 2.0 * values * ((vectors * vectors).T @ scale)
    target = op.cyclic_vector if vector == "cyclic" else op.theta_vector
    return (vectors.T @ target) ** 2
