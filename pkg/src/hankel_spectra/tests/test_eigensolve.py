import math

import mpmath
import numpy as np
import pytest

from src.hankel_spectra.eigensolve import (
    accurate_factor,
    baseline_eig,
    decompose,
    jacobi_factor_svd,
    rotation_threshold,
    spectral_masses,
)
from src.hankel_spectra.errors import HankelSpectraError
from src.hankel_spectra.measures import AtomicMeasure
from src.hankel_spectra.model_operator import build, frobenius_sq, quadratic_form, trace

_LARGE = (0.75 + math.sqrt(0.75**2 - 4.0 / 72.0)) / 2.0
TWO_BY_TWO = (_LARGE, (1.0 / 72.0) / _LARGE)


def _cauchy_reference(nodes, dps: int = 80):
    """Eigenvalues and masses of sqrt(w_i w_j)/(x_i + x_j) with unit weights, descending."""
    with mpmath.workdps(dps):
        n = len(nodes)
        matrix = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(n):
                matrix[i, j] = mpmath.mpf(1) / (mpmath.mpf(nodes[i]) + mpmath.mpf(nodes[j]))
        values, vectors = mpmath.eigsy(matrix)
        pairs = []
        for k in range(n):
            mass = sum(vectors[i, k] for i in range(n)) ** 2
            pairs.append((float(values[k]), float(mass)))
    pairs.sort(reverse=True)
    return np.array([v for v, _ in pairs]), np.array([m for _, m in pairs])


def test_accurate_factor_single_node():
    f = accurate_factor([1.0], [1.0])
    assert f.factor[0, 0] == pytest.approx(math.sqrt(0.5), rel=1e-15)
    assert f.rank == 1


def test_accurate_factor_reconstructs_two_by_two():
    op = build(AtomicMeasure.from_arrays([1.0, 2.0], [1.0, 1.0]))
    f = accurate_factor(op.nodes, op.weights)
    assert np.max(np.abs(f.factor @ f.factor.T - f.permuted_matrix(op.matrix))) <= 1e-15


def test_accurate_factor_geometric_nodes_elementwise():
    nodes = np.geomspace(1e-2, 1e2, 30)
    op = build(AtomicMeasure.from_arrays(nodes, np.ones(30)))
    f = accurate_factor(op.nodes, op.weights)
    assert f.rank == 30
    assert np.all(f.pivots > 0)
    assert np.all(np.diff(f.pivots) <= 0)
    assert f.max_pivot >= f.min_pivot
    reference = f.permuted_matrix(op.matrix)
    assert np.max(np.abs(f.factor @ f.factor.T - reference) / reference) <= 1e-11


def test_jacobi_factor_svd_two_by_two():
    pairs = jacobi_factor_svd(accurate_factor([1.0, 2.0], [1.0, 1.0]))
    assert pairs.values == pytest.approx(TWO_BY_TWO, rel=1e-14)
    assert pairs.singular_values == pytest.approx(np.sqrt(TWO_BY_TWO), rel=1e-14)


def test_jacobi_factor_svd_point_mass():
    pairs = jacobi_factor_svd(accurate_factor([0.4], [3.0]))
    assert pairs.values[0] == pytest.approx(3.0 / 0.8, rel=1e-14)


def test_baseline_eig_agrees_on_two_by_two():
    pairs = baseline_eig(build(AtomicMeasure.from_arrays([1.0, 2.0], [1.0, 1.0])).matrix)
    assert pairs.values[0] == pytest.approx(TWO_BY_TWO[0], rel=1e-12)
    assert baseline_eig([[1.0]]).values.tolist() == [1.0]


def test_baseline_eig_jacobi_and_lapack_agree():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(6, 6))
    matrix = a @ a.T + 6.0 * np.eye(6)
    jacobi = baseline_eig(matrix, solver="jacobi")
    lapack = baseline_eig(matrix, solver="lapack")
    assert jacobi.sweeps > 0
    assert jacobi.values == pytest.approx(lapack.values, rel=1e-12)
    assert np.max(np.abs(jacobi.vectors.T @ jacobi.vectors - np.eye(6))) <= 1e-13


def test_baseline_eig_rejects_nonsymmetric_input():
    with pytest.raises(ValueError):
        baseline_eig([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        baseline_eig([1.0, 2.0])


def test_decompose_point_mass_is_exact():
    op = build(AtomicMeasure.from_arrays([0.3], [1.7]))
    for method in ("accurate", "baseline"):
        decomposition = decompose(op, method)
        assert decomposition.eigenvalues.tolist() == [1.7 / 0.6]
        assert decomposition.masses.tolist() == [1.7]
        assert decomposition.method_tag == method


def test_decompose_two_atoms():
    op = build(AtomicMeasure.from_arrays([1.0, 2.0], [1.0, 1.0]))
    decomposition = decompose(op)
    ratio = (TWO_BY_TWO[0] - 0.5) * 3.0
    leading = (1.0 + ratio) ** 2 / (1.0 + ratio**2)
    assert decomposition.eigenvalues == pytest.approx(TWO_BY_TWO, rel=1e-14)
    assert decomposition.masses == pytest.approx([leading, 2.0 - leading], rel=1e-12)
    assert decomposition.masses == pytest.approx([1.936, 0.064], abs=1e-3)
    assert math.fsum(decomposition.masses) == pytest.approx(2.0, rel=1e-14)
    assert np.all(decomposition.eigenvectors.T @ op.cyclic_vector >= 0)


def test_decompose_against_extended_precision():
    nodes = np.arange(1.0, 21.0)
    op = build(AtomicMeasure.from_arrays(nodes, np.ones(20)))
    decomposition = decompose(op)
    values, masses = _cauchy_reference(nodes)
    assert np.max(np.abs(decomposition.eigenvalues - values) / values) <= 1e-10
    assert np.max(np.abs(decomposition.masses - masses) / masses) <= 1e-9
    assert np.all(np.diff(decomposition.eigenvalues) < 0)
    assert np.all(decomposition.masses > 1e-300 * 20.0)


@pytest.mark.parametrize("size", [12, 90])
def test_decompose_reconstruction_identities(size: int):
    rng = np.random.default_rng(size)
    nodes = np.geomspace(0.1, 10.0, size)
    weights = rng.uniform(0.1, 10.0, size)
    op = build(AtomicMeasure.from_arrays(nodes, weights))
    decomposition = decompose(op)
    values, masses = decomposition.eigenvalues, decomposition.masses

    assert math.fsum(masses) == pytest.approx(math.fsum(weights), rel=1e-12)
    assert math.fsum(masses * values) == pytest.approx(quadratic_form(op), rel=1e-12)
    assert math.fsum(values) == pytest.approx(trace(op), rel=1e-12)
    assert math.fsum(values * values) == pytest.approx(frobenius_sq(op), rel=1e-11)
    assert decomposition.orthogonality_residual <= 1e-13


def test_accurate_and_baseline_agree_on_dominant_spectrum():
    nodes = np.geomspace(0.1, 10.0, 32)
    op = build(AtomicMeasure.from_arrays(nodes, np.ones(32)))
    accurate = decompose(op, "accurate").eigenvalues
    baseline = decompose(op, "baseline").eigenvalues
    dominant = accurate >= accurate[0] * 1e-4
    assert np.max(np.abs(accurate[dominant] - baseline[dominant]) / accurate[dominant]) <= 1e-9


def test_baseline_breaks_down_on_ill_conditioned_cauchy_matrix():
    op = build(AtomicMeasure.from_arrays(np.arange(1.0, 101.0), np.ones(100)))
    with pytest.raises(HankelSpectraError):
        decompose(op, "baseline")
    decomposition = decompose(op, "accurate")
    assert np.all(decomposition.eigenvalues > 0)


def test_theta_masses_sum_to_inverse_second_moment():
    measure = AtomicMeasure.from_arrays([0.5, 1.0, 3.0], [1.0, 2.0, 0.5])
    op = build(measure)
    decomposition = decompose(op)
    theta = spectral_masses(op, decomposition, "theta")
    assert math.fsum(theta) == pytest.approx(1.0 / 0.25 + 2.0 + 0.5 / 9.0, rel=1e-13)
    with pytest.raises(ValueError):
        spectral_masses(op, decomposition, "other")


def test_decompose_rejects_unknown_method():
    with pytest.raises(ValueError):
        decompose(build(AtomicMeasure.from_arrays([1.0], [1.0])), "lanczos")


def test_rotation_threshold_grows_with_factor_height():
    eps = float(np.finfo(float).eps)
    assert rotation_threshold(2) == 1e-15
    assert rotation_threshold(4) == 1e-15
    assert rotation_threshold(5) == 5 * eps
    assert rotation_threshold(400) == 400 * eps
