import time

import numpy as np
import pytest

from src.hankel_spectra.measures import AtomicMeasure, DensityMeasure, inverse_second_moment, sharp, total_mass
from src.hankel_spectra.spectral_map import (
    DEFAULT_TAUS,
    check_suite,
    continuity_sequence,
    duality_error,
    hankel_cross_check,
    identity_report,
    omega,
    omega_sharp,
    omega_theta,
    rho_from_sigma,
    roundtrip_error,
    scaling_errors,
)


def _ten_atoms(seed: int = 11) -> AtomicMeasure:
    rng = np.random.default_rng(seed)
    return AtomicMeasure.from_arrays(np.sort(rng.uniform(0.1, 10.0, 10)), rng.uniform(0.1, 10.0, 10))


def test_omega_point_mass_law():
    rng = np.random.default_rng(5)
    for a, big_a in rng.uniform(0.01, 100.0, size=(20, 2)):
        image = omega(AtomicMeasure.from_arrays([a], [big_a]))
        assert image.positions[0] == pytest.approx(big_a / (2.0 * a), rel=1e-14)
        assert image.weights[0] == big_a


def test_omega_fixed_point_is_exact():
    image = omega(AtomicMeasure.from_arrays([1.0], [2.0]))
    assert image.positions.tolist() == [1.0]
    assert image.weights.tolist() == [2.0]


def test_omega_two_atoms_sorted_ascending():
    image = omega(AtomicMeasure.from_arrays([1.0, 2.0], [1.0, 1.0]))
    assert image.positions == pytest.approx([0.0190, 0.7310], abs=1e-4)
    assert image.weights == pytest.approx([0.064, 1.936], abs=1e-3)
    assert total_mass(image) == pytest.approx(2.0, rel=1e-14)


def test_omega_sharp_examples():
    assert omega_sharp(AtomicMeasure.from_arrays([1.0], [1.0])).positions.tolist() == [0.5]
    image = omega_sharp(AtomicMeasure.from_arrays([2.0], [3.0]))
    assert image.positions[0] == pytest.approx(0.75, rel=1e-15)
    assert image.weights[0] == pytest.approx(0.75, rel=1e-15)


def test_omega_sharp_mass_is_inverse_second_moment():
    measure = _ten_atoms()
    image = omega_sharp(measure)
    assert total_mass(image) == pytest.approx(inverse_second_moment(measure), rel=1e-12)
    direct = omega(sharp(measure))
    assert image.positions.tolist() == direct.positions.tolist()
    assert image.weights.tolist() == direct.weights.tolist()


def test_omega_theta_agrees_with_omega_sharp():
    measure = _ten_atoms(3)
    theta = omega_theta(measure)
    image = omega_sharp(measure)
    assert theta.positions == pytest.approx(image.positions, rel=1e-10)
    assert theta.weights == pytest.approx(image.weights, rel=1e-8)


def test_omega_rejects_density_input():
    with pytest.raises(ValueError):
        omega(DensityMeasure(kind="mehler_sigma"))


def test_roundtrip_point_mass_and_two_atoms():
    report = roundtrip_error(AtomicMeasure.from_arrays([0.7], [2.3]))
    assert report.node_error <= 1e-15
    assert report.weight_error <= 1e-15

    report = roundtrip_error(AtomicMeasure.from_arrays([1.0, 2.0], [1.0, 1.0]))
    assert report.node_error <= 1e-10
    assert report.weight_error <= 1e-10


def test_roundtrip_random_measures():
    for seed in range(10):
        report = roundtrip_error(_ten_atoms(seed))
        assert report.node_error <= 1e-6
        assert report.weight_error <= 1e-6


def test_roundtrip_geometric_nodes_accurate_path():
    measure = AtomicMeasure.from_arrays(np.geomspace(0.1, 10.0, 10), np.ones(10))
    report = roundtrip_error(measure, "accurate")
    assert max(report.node_error, report.weight_error) <= 1e-6


def test_rho_from_sigma_inverts_the_sharp_map():
    measure = _ten_atoms(4)
    sigma = omega(measure)
    rho = rho_from_sigma(sigma)
    expected = omega_sharp(measure)
    assert rho.positions == pytest.approx(expected.positions, rel=1e-5)
    assert rho.weights == pytest.approx(expected.weights, rel=1e-5)


def test_identity_report_two_atoms():
    report = identity_report(AtomicMeasure.from_arrays([1.0, 2.0], [1.0, 1.0]))
    assert report.mass_error <= 1e-14
    assert report.trace_error <= 1e-14
    assert report.hs_error <= 1e-14
    assert report.lyapunov_residual <= 1e-15


def test_identity_report_larger_measure():
    measure = AtomicMeasure.from_arrays(np.geomspace(0.01, 100.0, 60), np.linspace(0.5, 5.0, 60))
    report = identity_report(measure)
    assert report.mass_error <= 1e-12
    assert report.trace_error <= 1e-12
    assert report.hs_error <= 1e-11


@pytest.mark.parametrize("tau", DEFAULT_TAUS)
def test_scaling_laws(tau: float):
    report = scaling_errors(_ten_atoms(8), tau)
    assert report.mass_scaling_error <= 1e-10
    assert report.variable_scaling_error <= 1e-10


def test_duality_recovers_the_measure():
    for seed in range(5):
        report = duality_error(_ten_atoms(seed))
        assert max(report.node_error, report.weight_error) <= 1e-6


def test_hankel_cross_check_rank_one():
    report = hankel_cross_check(AtomicMeasure.from_arrays([1.0], [1.0]), n_t=400, t_max=40.0)
    assert report.passed
    assert report.max_relative_deviation <= 1e-6


def test_hankel_cross_check_two_atoms():
    report = hankel_cross_check(AtomicMeasure.from_arrays([1.0, 2.0], [1.0, 1.0]), n_t=400, t_max=40.0)
    assert report.passed
    assert report.max_relative_deviation <= 1e-6
    assert report.residual_max <= 1e-8


def test_hankel_cross_check_flags_short_grid(caplog):
    measure = AtomicMeasure.from_arrays([0.05], [1.0])
    with caplog.at_level("WARNING"):
        report = hankel_cross_check(measure, n_t=50, t_max=2.0)
    assert not report.passed
    assert report.tail_estimate > 1e-6
    assert "Raise t_max" in caplog.text


def test_hankel_cross_check_validates_grid():
    measure = AtomicMeasure.from_arrays([1.0, 2.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        hankel_cross_check(measure, n_t=1)
    with pytest.raises(ValueError):
        hankel_cross_check(measure, n_t=10, t_max=0.0)


def test_continuity_sequence_decreases():
    rows = continuity_sequence([2**k for k in range(1, 11)])
    distances = [distance for _, distance in rows]
    assert all(later < earlier for earlier, later in zip(distances, distances[1:]))
    assert rows[0][1] == pytest.approx(1.0 / 6.0, rel=1e-14)
    with pytest.raises(ValueError):
        continuity_sequence([0])


def test_check_suite_involution_passes():
    outcome = check_suite(_ten_atoms(), suite="involution")
    assert outcome.passed
    assert outcome.identity is not None
    assert outcome.scaling == []
    assert outcome.hankel is None


def test_check_suite_all_on_small_measure():
    measure = AtomicMeasure.from_arrays([0.5, 1.0, 3.0], [1.0, 2.0, 0.5])
    outcome = check_suite(measure, suite="all")
    assert outcome.failures == []
    assert len(outcome.scaling) == len(DEFAULT_TAUS)
    assert outcome.duality is not None
    assert outcome.hankel is not None and outcome.hankel.passed


def test_check_suite_reports_failures():
    outcome = check_suite(_ten_atoms(), suite="mass", mass_tol=-1.0)
    assert not outcome.passed
    assert outcome.failures[0].startswith("mass_error=")


def test_sigma_and_rho_share_their_support():
    measure = _ten_atoms(6)
    sigma = omega(measure)
    rho = omega_sharp(measure)
    assert rho.positions == pytest.approx(sigma.positions, rel=1e-10)
    assert not np.allclose(sharp(sigma).positions, rho.positions)


def _log_geometric_atoms(rng: np.random.Generator, max_size: int = 10) -> AtomicMeasure:
    size = int(rng.integers(1, max_size + 1))
    nodes = np.exp(rng.uniform(np.log(0.1), np.log(10.0), size))
    return AtomicMeasure.from_arrays(nodes, rng.uniform(0.1, 10.0, size))


def test_omega_point_mass_law_on_a_thousand_samples():
    rng = np.random.default_rng(2024)
    samples = rng.uniform(0.01, 100.0, size=(1000, 2))
    measures = [AtomicMeasure.from_arrays([a], [big_a]) for a, big_a in samples]
    omega(measures[0])

    start = time.perf_counter()
    images = [omega(measure) for measure in measures]
    elapsed = time.perf_counter() - start

    assert elapsed < 0.1
    for (a, big_a), image in zip(samples, images):
        assert image.size == 1
        assert image.positions[0] == pytest.approx(big_a / (2.0 * a), rel=1e-14)
        assert image.weights[0] == big_a


def test_involution_on_random_log_geometric_measures():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        report = roundtrip_error(_log_geometric_atoms(rng))
        worst = max(worst, report.node_error, report.weight_error)
    assert worst <= 1e-6


def test_duality_on_random_log_geometric_measures():
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(100):
        report = duality_error(_log_geometric_atoms(rng))
        worst = max(worst, report.node_error, report.weight_error)
    assert worst <= 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_hankel_cross_check_five_atoms_on_default_grid(seed: int):
    rng = np.random.default_rng(seed)
    nodes = np.geomspace(0.5, 8.0, 5) * rng.uniform(0.9, 1.1, 5)
    measure = AtomicMeasure.from_arrays(nodes, rng.uniform(0.1, 10.0, 5))
    report = hankel_cross_check(measure)
    assert report.n_t == 800
    assert report.t_max == 60.0
    assert report.passed
    assert report.max_relative_deviation <= 1e-6
    assert report.residual_max <= 1e-8


def test_continuity_reaches_the_limit_at_1024():
    [(n, distance)] = continuity_sequence([1024])
    assert n == 1024
    assert distance < 1e-3
