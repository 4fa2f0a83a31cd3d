import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.hankel_spectra.errors import DivergentIntegralError, StructuralError
from src.hankel_spectra.measures import (
    AtomicMeasure,
    DensityMeasure,
    atom_distance,
    cdf,
    cdf_values,
    classify,
    density,
    inverse_first_moment,
    inverse_second_moment,
    kolmogorov_distance,
    laplace_transform,
    laplace_values,
    midpoint_kolmogorov_distance,
    scale_mass,
    scale_variable,
    sharp,
    total_mass,
)


def _atoms(*pairs) -> AtomicMeasure:
    return AtomicMeasure.from_arrays([x for x, _ in pairs], [w for _, w in pairs])


def _exp(beta: float = 2.0) -> DensityMeasure:
    return DensityMeasure(kind="exp_scale", params={"beta": beta})


def _half_line_indicator() -> DensityMeasure:
    return DensityMeasure(kind="indicator", support=(0.5, None))


def test_atomic_measure_merges_equal_positions_and_sorts():
    measure = _atoms((2.0, 1.0), (1.0, 1.0), (2.0, 3.0))
    assert measure.positions.tolist() == [1.0, 2.0]
    assert measure.weights.tolist() == [1.0, 4.0]
    assert measure.size == 2


def test_atomic_measure_keeps_nearby_positions_apart():
    measure = _atoms((1.0, 1.0), (1.0 + 2.0**-52, 1.0))
    assert measure.size == 2


@pytest.mark.parametrize("pair", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (math.inf, 1.0), (1.0, math.nan)])
def test_atom_rejects_nonpositive_or_nonfinite_values(pair):
    with pytest.raises(ValidationError):
        _atoms(pair)


def test_atomic_measure_rejects_empty_atoms():
    with pytest.raises(ValidationError):
        AtomicMeasure(atoms=())


def test_atomic_arrays_are_read_only():
    measure = _atoms((1.0, 1.0))
    with pytest.raises(ValueError):
        measure.weights[0] = 2.0


def test_density_measure_natural_supports():
    assert _exp().support == (0.0, math.inf)
    assert DensityMeasure(kind="mehler_sigma").support == (0.0, math.pi)
    tabulated = DensityMeasure(kind="tabulated", params={"x": [0.5, 1.0, 3.0], "y": [1.0, 2.0, 0.0]})
    assert tabulated.support == (0.5, 3.0)
    assert _half_line_indicator().support == (0.5, math.inf)


@pytest.mark.parametrize(
    "payload",
    [
        {"kind": "exp_scale"},
        {"kind": "exp_scale", "params": {"beta": -1.0}},
        {"kind": "indicator", "support": [2.0, 1.0]},
        {"kind": "indicator", "support": [0.0, 1.0], "scale": 0.0},
        {"kind": "tabulated", "params": {"x": [1.0, 0.5], "y": [1.0, 1.0]}},
        {"kind": "tabulated", "params": {"x": [0.0, 1.0], "y": [1.0, -1.0]}},
        {"kind": "gaussian"},
    ],
)
def test_density_measure_rejects_invalid_payloads(payload):
    with pytest.raises(ValidationError):
        DensityMeasure(**payload)


def test_total_mass_examples():
    assert total_mass(_atoms((1.0, 1.0))) == 1.0
    assert total_mass(_exp()) == pytest.approx(0.5, rel=1e-9)
    with pytest.raises(DivergentIntegralError):
        total_mass(_half_line_indicator())


def test_inverse_second_moment_examples():
    assert inverse_second_moment(_atoms((2.0, 3.0))) == 0.75
    assert inverse_second_moment(_atoms((1.0, 1.0))) == 1.0
    assert inverse_second_moment(_half_line_indicator()) == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(DivergentIntegralError):
        inverse_second_moment(_exp())


def test_inverse_first_moment_atomic():
    assert inverse_first_moment(_atoms((1.0, 1.0), (2.0, 1.0))) == 1.5


def test_laplace_transform_examples():
    assert laplace_transform(_exp(), 1.0) == pytest.approx(1.0 / 3.0, rel=1e-9)
    assert laplace_transform(_atoms((3.0, 1.0)), 0.7) == pytest.approx(math.exp(-2.1), rel=1e-15)
    assert laplace_transform(_half_line_indicator(), 2.0) == pytest.approx(math.exp(-1.0) / 2.0, rel=1e-9)
    with pytest.raises(ValueError):
        laplace_transform(_exp(), 0.0)


def test_laplace_transform_bounded_by_mass_and_decreasing():
    measure = _atoms((0.5, 1.0), (2.0, 3.0))
    times = np.array([0.1, 0.5, 1.0, 5.0])
    values = laplace_values(measure, times)
    assert np.all(np.diff(values) < 0)
    assert np.all(values <= total_mass(measure))
    assert values[1] == pytest.approx(laplace_transform(measure, 0.5), rel=1e-15)


def test_cdf_atomic_is_right_continuous():
    measure = _atoms((1.0, 2.0))
    assert cdf(measure, 0.5) == 0.0
    assert cdf(measure, 1.0) == 2.0
    assert cdf_values(measure, [1.0], side="left")[0] == 0.0


def test_cdf_reaches_total_mass():
    measure = _atoms((1.0, 1.0), (2.0, 3.0))
    assert cdf(measure, 2.0) == total_mass(measure)
    assert cdf(_exp(), 50.0) == pytest.approx(0.5, rel=1e-9)
    with pytest.raises(ValueError):
        cdf(measure, -1.0)


def test_cdf_values_density_is_nondecreasing_in_any_input_order():
    points = np.array([3.0, 0.1, 1.0, 0.0])
    values = cdf_values(_exp(), points)
    expected = (1.0 - np.exp(-2.0 * points)) / 2.0
    assert values == pytest.approx(expected, rel=1e-8, abs=1e-15)


def test_sharp_atomic_examples():
    assert sharp(_atoms((2.0, 3.0))) == _atoms((0.5, 0.75))
    assert sharp(_atoms((1.0, 1.0))) == _atoms((1.0, 1.0))


def test_sharp_is_an_involution_on_atoms():
    measure = AtomicMeasure.from_arrays(np.geomspace(0.1, 10.0, 7), np.linspace(0.5, 3.0, 7))
    twice = sharp(sharp(measure))
    assert twice.positions == pytest.approx(measure.positions, rel=1e-15)
    assert twice.weights == pytest.approx(measure.weights, rel=1e-15)
    assert total_mass(sharp(measure)) == pytest.approx(inverse_second_moment(measure), rel=1e-14)


def test_sharp_indicator_inverts_support():
    image = sharp(_half_line_indicator())
    assert image.kind == "indicator"
    assert image.support == (0.0, 2.0)
    assert image.transforms == ()
    assert total_mass(image) == pytest.approx(2.0, rel=1e-9)


def test_sharp_density_uses_reciprocal_argument():
    measure = _exp(1.0)
    image = sharp(measure)
    assert density(image, 2.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert sharp(image) == measure


def test_scale_mass_and_scale_variable_examples():
    assert scale_mass(_atoms((1.0, 1.0)), 2.0) == _atoms((1.0, 2.0))
    assert scale_variable(_atoms((1.0, 1.0)), 3.0) == _atoms((3.0, 1.0))

    scaled = scale_variable(_exp(2.0), 2.0)
    assert density(scaled, 1.0) == pytest.approx(math.exp(-1.0) / 2.0, rel=1e-15)
    assert total_mass(scaled) == pytest.approx(0.5, rel=1e-9)
    assert scale_mass(_exp(2.0), 3.0).scale == 3.0
    with pytest.raises(ValueError):
        scale_mass(_exp(), 0.0)


def test_scale_variable_round_trip():
    measure = AtomicMeasure.from_arrays([0.3, 1.7, 4.0], [1.0, 2.0, 0.5])
    back = scale_variable(scale_variable(measure, 7.0), 1.0 / 7.0)
    assert back.positions == pytest.approx(measure.positions, rel=1e-15)
    assert back.weights.tolist() == measure.weights.tolist()


def test_scale_variable_on_reference_density_keeps_mass():
    scaled = scale_variable(DensityMeasure(kind="mehler_sigma"), 2.0)
    assert scaled.support == (0.0, 2.0 * math.pi)
    assert total_mass(scaled) == pytest.approx(0.5, rel=1e-7)


def test_classify_atomic():
    flags = classify(_atoms((1.0, 1.0), (2.0, 3.0)))
    assert flags.is_finite and flags.is_cofinite and flags.is_carleson
    assert flags.blaschke_atomic and flags.bounded_support and flags.is_trace_class
    assert flags.carleson_estimate == 2.0


def test_classify_lebesgue_is_carleson_but_neither_finite_nor_cofinite():
    flags = classify(DensityMeasure(kind="indicator"))
    assert flags.is_carleson
    assert not flags.is_finite
    assert not flags.is_cofinite
    assert not flags.bounded_support
    assert not flags.blaschke_atomic


def test_classify_exponential_is_finite_only():
    flags = classify(_exp())
    assert flags.is_finite
    assert not flags.is_cofinite
    assert not flags.is_trace_class
    assert flags.is_carleson


def test_kolmogorov_distance_atomic_examples():
    one = _atoms((1.0, 1.0))
    assert kolmogorov_distance(one, one) == 0.0
    assert kolmogorov_distance(one, _atoms((2.0, 1.0))) == 1.0
    assert kolmogorov_distance(one, _atoms((1.1, 1.0))) == 1.0
    assert kolmogorov_distance(one, _atoms((1.0, 3.0))) == 2.0


def test_kolmogorov_distance_density_against_itself():
    assert kolmogorov_distance(_exp(), _exp()) == 0.0


def test_kolmogorov_distance_rejects_infinite_mass():
    with pytest.raises(ValueError):
        kolmogorov_distance(_half_line_indicator(), _atoms((1.0, 1.0)))


def test_atom_distance_requires_matching_sizes():
    with pytest.raises(StructuralError):
        atom_distance(_atoms((1.0, 1.0)), _atoms((1.0, 1.0), (2.0, 1.0)))
    assert atom_distance(_atoms((1.0, 1.0)), _atoms((1.5, 2.0))) == 1.5


def test_classify_catches_logarithmic_growth_near_zero():
    flags = classify(DensityMeasure(kind="mehler_sigma"))
    assert flags.is_finite
    assert not flags.is_carleson
    assert flags.carleson_estimate > 1.5


def test_classify_ratios_that_level_off_stay_carleson():
    assert classify(DensityMeasure(kind="indicator", support=(0.5, None))).is_carleson
    assert classify(DensityMeasure(kind="exp_scale", params={"beta": 0.001})).is_carleson


def test_midpoint_distance_reads_atoms_at_mid_jump():
    unit = DensityMeasure(kind="indicator", support=(0.0, 1.0))
    assert midpoint_kolmogorov_distance(_atoms((0.5, 1.0)), unit) == pytest.approx(0.0, abs=1e-14)
    assert kolmogorov_distance(_atoms((0.5, 1.0)), unit) == pytest.approx(0.5, rel=1e-12)

    root = 0.5 / math.sqrt(3.0)
    gauss = _atoms((0.5 - root, 0.5), (0.5 + root, 0.5))
    assert midpoint_kolmogorov_distance(gauss, unit) == pytest.approx(root - 0.25, rel=1e-9)


def test_midpoint_distance_counts_the_mass_gap():
    unit = DensityMeasure(kind="indicator", support=(0.0, 1.0))
    assert midpoint_kolmogorov_distance(_atoms((0.5, 3.0)), unit) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ValueError):
        midpoint_kolmogorov_distance(unit, _atoms((0.5, 1.0)))
