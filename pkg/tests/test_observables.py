import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from halfwalk import (
    CoinBlockMatrix,
    DecoherenceModel,
    EnsembleConfig,
    InitialState,
    SpinorField,
    fit_power_law,
    half_line_masses,
    position_distribution,
    run_ensemble,
    spread_series,
)
from halfwalk.errors import InvalidArgument, NotRecorded
from halfwalk.lattice import evolve_pure
from halfwalk.observables import (
    FIT_MIN_T,
    SpreadSeries,
    bootstrap_sigma,
    distribution_from_mapping,
    excess_kurtosis,
    half_line_shape,
    spread_from_moments,
)

from conftest import HADAMARD

REFERENCE = json.loads((Path(__file__).parent / "fixtures" / "reference.json").read_text())
LEFT = InitialState(0, (1, 0))


def power_law(prefactor, exponent, steps=200):
    t = np.arange(1, steps + 1)
    return SpreadSeries(t, np.zeros(steps), prefactor * t.astype(float) ** exponent)


def test_distribution_from_each_source():
    state = evolve_pure(LEFT, HADAMARD, 2)[-1]
    expected = {-2: 0.25, 0: 0.5, 2: 0.25}
    pure = position_distribution(state, 2)
    assert pure.as_dict(1e-15) == pytest.approx(expected, abs=1e-15)
    dense = position_distribution(CoinBlockMatrix.from_spinor(state, compact=True), 2)
    assert dense.as_dict(1e-15) == pytest.approx(expected, abs=1e-15)
    acc = run_ensemble(LEFT, HADAMARD, DecoherenceModel(0.0), EnsembleConfig(1, 2))
    assert position_distribution(acc, 2).as_dict(1e-15) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(NotRecorded):
        position_distribution(run_ensemble(LEFT, HADAMARD, DecoherenceModel(0.0), EnsembleConfig(1, 2),
                                           record="final"), 1)
    with pytest.raises(TypeError):
        position_distribution([0.5, 0.5], 0)


def test_one_step_distribution():
    dist = position_distribution(evolve_pure(LEFT, HADAMARD, 1)[-1], 1)
    assert dist.as_dict(1e-15) == pytest.approx({-1: 0.5, 1: 0.5}, abs=1e-15)


@pytest.mark.parametrize("probs, mean, sigma", [
    ({-1: 0.5, 1: 0.5}, 0.0, 1.0),
    ({0: 1.0}, 0.0, 0.0),
])
def test_spread_examples(probs, mean, sigma):
    series = spread_series([distribution_from_mapping(1, probs)])
    assert series.mean[0] == mean and series.sigma[0] == sigma


def test_spread_rejects_empty():
    with pytest.raises(InvalidArgument):
        spread_series([])


def test_spread_clips_rounding_negatives():
    series = spread_from_moments([1], [3.0], [9.0 - 1e-15])
    assert series.sigma[0] == 0.0


def test_sigma_ratio_fixture_from_pure_oracle():
    """sigma/t at p = 0 on the block simulator equals the frozen dictionary-oracle value."""
    state = evolve_pure(InitialState(), HADAMARD, 2000)[-1]
    series = spread_series([position_distribution(state, 2000)])
    assert series.sigma[0] / 2000 == pytest.approx(REFERENCE["sigma_over_t_p0_t2000"], abs=1e-12)
    # and the ratio is close to the asymptotic Hadamard value
    assert abs(REFERENCE["sigma_over_t_p0_t2000"] - REFERENCE["sigma_over_t_hadamard_limit"]) < 1e-5


def test_sigma_ratio_at_200_approaches_limit(exact_runs):
    run = exact_runs(0.0, 200)
    sites, probs = run.records["P"][200]
    series = spread_series([distribution_from_mapping(200, dict(zip(sites.tolist(), probs)))])
    assert series.sigma[0] / 200 == pytest.approx(REFERENCE["sigma_over_t_p0_t200"], abs=1e-12)
    assert abs(series.sigma[0] / 200 - REFERENCE["sigma_over_t_hadamard_limit"]) < 1e-4


@given(st.floats(0.1, 10), st.floats(0.2, 1.2), st.floats(0.05, 1.0))
def test_fit_recovers_exact_power_law(prefactor, exponent, fraction):
    fit = fit_power_law(power_law(prefactor, exponent), fraction)
    assert fit.exponent == pytest.approx(exponent, abs=1e-12)
    assert fit.prefactor == pytest.approx(prefactor, rel=1e-11)
    assert fit.rms_residual < 1e-12


def test_fit_examples():
    fit = fit_power_law(power_law(2.0, 0.75))
    assert abs(fit.exponent - 0.75) < 1e-12 and abs(fit.prefactor - 2) < 1e-11
    assert fit.fit_window == (101, 200)
    assert abs(fit_power_law(power_law(1.0, 0.5)).exponent - 0.5) < 1e-12


def test_fit_skips_early_transient():
    fit = fit_power_law(power_law(1.0, 1.0, steps=20), 1.0)
    assert fit.fit_window[0] == FIT_MIN_T


@pytest.mark.parametrize("series, fraction", [
    (power_law(1, 1, steps=15), 0.5),
    (power_law(1, 1), 0.0),
    (power_law(1, 1), 1.5),
    (SpreadSeries(np.arange(1, 41), np.zeros(40), np.zeros(40)), 0.5),
])
def test_fit_errors(series, fraction):
    with pytest.raises(InvalidArgument):
        fit_power_law(series, fraction)


def test_unitary_walk_is_ballistic():
    states = evolve_pure(InitialState(), HADAMARD, 1000)
    series = spread_series(position_distribution(s, t) for t, s in enumerate(states) if t)
    assert 0.97 <= fit_power_law(series).exponent <= 1.01


def test_half_line_examples():
    assert half_line_masses(distribution_from_mapping(1, {-1: 0.5, 1: 0.5})) == (0.5, 0.5)
    assert half_line_masses(distribution_from_mapping(0, {0: 1.0})) == (0.0, 1.0)


def test_left_mass_dominates_under_dephasing(exact_runs):
    sites, probs = exact_runs(0.2, 400).records["P"][400]
    left, right = half_line_masses(distribution_from_mapping(400, dict(zip(sites.tolist(), probs))))
    assert left > 0.5 > right
    assert abs(left + right - 1) < 1e-10
    assert left == pytest.approx(REFERENCE["half_lines_t400"]["0.2"]["left_mass"], abs=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.2])
def test_sigma_nondecreasing(exact_runs, p):
    records = exact_runs(p, 200).records["P"]
    series = spread_series(distribution_from_mapping(t, dict(zip(s.tolist(), pr)))
                           for t, (s, pr) in enumerate(records) if t)
    assert np.all(series.sigma >= 0)
    assert np.all(np.diff(series.sigma[1:]) >= -1e-9)


def test_kurtosis_values():
    x = np.arange(-400, 401)
    gauss = np.exp(-0.5 * (x / 40.0) ** 2)
    assert abs(excess_kurtosis(x, gauss)) < 1e-6
    assert excess_kurtosis([-1, 1], [1, 1]) == pytest.approx(-2.0)


def test_half_line_shape_fields():
    dist = distribution_from_mapping(3, {-3: 0.1, -1: 0.3, 1: 0.4, 3: 0.2})
    shape = half_line_shape(dist)
    assert shape["left"]["peak_site"] == -1 and shape["right"]["peak_site"] == 1
    assert shape["left"]["mass"] == pytest.approx(0.4)


def test_bootstrap_shapes_and_zero_spread():
    first = np.tile(np.arange(5.0), (10, 1))
    second = first**2 + 1
    err = bootstrap_sigma((first, second), resamples=50, seed=3)
    assert err.shape == (5,)
    np.testing.assert_allclose(err, 0, atol=1e-12)
    rng = np.random.default_rng(0)
    noisy = rng.normal(size=(40, 5))
    err = bootstrap_sigma((noisy, noisy**2 + 1), resamples=50, seed=3)
    assert np.all(err > 0)
    np.testing.assert_array_equal(err, bootstrap_sigma((noisy, noisy**2 + 1), resamples=50, seed=3))
