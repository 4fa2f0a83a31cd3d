from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.constants import COINCIDENT_NODE_RTOL
from src.hankel_spectra.errors import ConditioningError
from src.hankel_spectra.measures import AtomicMeasure
from src.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ModelOperator:
    """Symmetrized model operator of an atomic measure.

    ``matrix[i, j] = sqrt(w_i w_j) / (x_i + x_j)``. The same matrix represents
    the operator of the sharp measure; only the cyclic vector changes from
    ``cyclic_vector`` (sqrt(w)) to ``theta_vector`` (sqrt(w)/x).
    """

    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    cyclic_vector: np.ndarray
    theta_vector: np.ndarray

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])


def check_node_separation(nodes: np.ndarray) -> None:
    ordered = np.sort(np.asarray(nodes, dtype=float))
    gaps = np.diff(ordered)
    close = np.flatnonzero(gaps < COINCIDENT_NODE_RTOL * ordered[:-1])
    if close.size:
        index = int(close[0])
        raise ConditioningError(
            f"Nodes {ordered[index]!r} and {ordered[index + 1]!r} are closer than "
            f"{COINCIDENT_NODE_RTOL} relative; the Cauchy factorization would break down"
        )


def build(measure: AtomicMeasure) -> ModelOperator:
    if not isinstance(measure, AtomicMeasure):
        raise ValueError("The model operator is built from atomic measures only; discretize densities first")
    x = np.array(measure.positions, dtype=float)
    w = np.array(measure.weights, dtype=float)
    check_node_separation(x)

    u = np.sqrt(w)
    matrix = np.outer(u, u) / np.add.outer(x, x)
    np.fill_diagonal(matrix, w / (2.0 * x))
    theta = u / x
    for array in (x, w, matrix, u, theta):
        array.setflags(write=False)
    logger.debug("Built model operator of size %d on [%r, %r]", len(x), x[0], x[-1])
    return ModelOperator(nodes=x, weights=w, matrix=matrix, cyclic_vector=u, theta_vector=theta)


def lyapunov_residual(op: ModelOperator) -> float:
    """max |x_i M_ij + M_ij x_j - u_i u_j|."""
    x = op.nodes
    u = op.cyclic_vector
    residual = x[:, None] * op.matrix + op.matrix * x[None, :] - np.outer(u, u)
    return float(np.max(np.abs(residual)))


def dual_lyapunov_residual(op: ModelOperator) -> float:
    """max |M_ij / x_i + M_ij / x_j - theta_i theta_j|, the identity for the sharp measure."""
    x = op.nodes
    theta = op.theta_vector
    residual = op.matrix / x[:, None] + op.matrix / x[None, :] - np.outer(theta, theta)
    return float(np.max(np.abs(residual)))


def trace(op: ModelOperator) -> float:
    return math.fsum(np.diag(op.matrix))


def frobenius_sq(op: ModelOperator) -> float:
    return math.fsum((op.matrix * op.matrix).ravel())


def quadratic_form(op: ModelOperator) -> float:
    """u^T M u = sum_ij w_i w_j / (x_i + x_j)."""
    u = op.cyclic_vector
    return math.fsum((op.matrix * np.outer(u, u)).ravel())
