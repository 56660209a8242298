import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from halfwalk import (
    CoinBlockMatrix,
    GcdPoint,
    GcdSeries,
    InitialState,
    SpinorField,
    gcd_from_coin,
    gcd_recursion_step,
    pure_state_to_blocks,
    reduce_to_coin,
    stationary_estimate,
    verify_recursion,
)
from halfwalk.chirality import recursion_residuals
from halfwalk.errors import InvalidArgument
from halfwalk.lattice import evolve_pure

from conftest import HADAMARD

probability = st.floats(0, 1)


def constant_series(pi_l, pi_r, q, length=40):
    return GcdSeries([GcdPoint(t, pi_l, pi_r, q) for t in range(length)])


def series_of(run):
    return GcdSeries([gcd_from_coin(c, t) for t, c in enumerate(run.records["coin"])])


def test_reduce_single_site():
    rho = CoinBlockMatrix.from_spinor(SpinorField.localized(InitialState()))
    np.testing.assert_allclose(reduce_to_coin(rho), [[0.5, -0.5j], [0.5j, 0.5]], atol=1e-15)


def test_reduce_ignores_cross_blocks():
    state = evolve_pure(InitialState(0, (1, 0)), HADAMARD, 1)[-1]
    rho = pure_state_to_blocks(state)
    assert np.abs(rho.block(-1, 1)).max() > 0.4
    np.testing.assert_allclose(reduce_to_coin(rho), 0.5 * np.eye(2), atol=1e-15)


@pytest.mark.parametrize("matrix, expected", [
    ([[0.5, -0.5j], [0.5j, 0.5]], (0.5, 0.5, 0.0)),
    ([[1, 0], [0, 0]], (1, 0, 0)),
    ([[0.6, 0.1], [0.1, 0.4]], (0.6, 0.4, 0.1)),
])
def test_gcd_read_off(matrix, expected):
    point = gcd_from_coin(np.array(matrix, dtype=complex), t=3)
    assert (point.pi_l, point.pi_r, point.q) == pytest.approx(expected, abs=1e-15)
    assert point.t == 3


def test_gcd_rejects_bad_trace():
    with pytest.raises(InvalidArgument):
        gcd_from_coin(np.diag([0.6, 0.5]))


def test_recursion_examples():
    assert gcd_recursion_step(GcdPoint(0, 0.3, 0.7, 0.1), math.pi / 4) == pytest.approx((0.6, 0.4), abs=1e-15)
    assert gcd_recursion_step(GcdPoint(0, 0.9, 0.1, 0.0), math.pi / 4) == pytest.approx((0.5, 0.5), abs=1e-15)
    assert gcd_recursion_step(GcdPoint(0, 1, 0, 0), 0.0) == (1, 0)


@given(probability, st.floats(-0.5, 0.5), st.floats(-4, 4))
def test_recursion_conserves_total(pi_l, q, gamma):
    nxt = gcd_recursion_step(GcdPoint(0, pi_l, 1 - pi_l, q), gamma)
    assert abs(sum(nxt) - 1) < 1e-14


@pytest.mark.parametrize("values", [(0.7, 0.4, 0.0), (1.2, -0.2, 0.0), (0.5, 0.5, 0.6)])
def test_point_rejects_impossible_values(values):
    with pytest.raises(InvalidArgument):
        GcdPoint(0, *values)


def test_series_needs_consecutive_times():
    with pytest.raises(InvalidArgument):
        GcdSeries([GcdPoint(0, 1, 0, 0), GcdPoint(2, 1, 0, 0)])
    with pytest.raises(InvalidArgument):
        GcdSeries([GcdPoint(1, 1, 0, 0)])


def test_verify_needs_two_points():
    with pytest.raises(InvalidArgument):
        verify_recursion(constant_series(1, 0, 0, 1), 0.3, 1e-10)


@pytest.mark.parametrize("p", [0.0, 0.2, 0.5, 1.0])
def test_exact_channel_obeys_recursion(exact_runs, p):
    worst, ok = verify_recursion(series_of(exact_runs(p, 100)), math.pi / 4, 1e-10)
    assert ok, worst


def test_recursion_detects_tampering(exact_runs):
    series = series_of(exact_runs(0.2, 100))
    pts = list(series.points)
    pts[50] = GcdPoint(50, pts[50].pi_l + 1e-6, pts[50].pi_r - 1e-6, pts[50].q)
    residuals = recursion_residuals(GcdSeries(pts), math.pi / 4)
    assert residuals[49] > 5e-7
    # at gamma = pi/4 an opposite shift of Pi_L and Pi_R cancels in the next prediction
    assert np.delete(residuals, 49).max() < 1e-10


@pytest.mark.parametrize("gamma", [math.pi / 4, 0.3, 0.0, math.pi / 2])
def test_symmetric_fixed_point(gamma):
    est = stationary_estimate(constant_series(0.5, 0.5, 0.0), gamma)
    assert est.residual == 0.0
    if gamma in (0.0, math.pi / 2):
        assert est.residual_tan_form is None


def test_stationary_read_off():
    est = stationary_estimate(constant_series(0.6, 0.4, 0.1), math.pi / 4)
    assert est.residual < 1e-15
    assert est.residual_tan_form < 1e-15
    assert est.predicted_pi_l(math.pi / 4) == pytest.approx(0.6, abs=1e-15)
    assert est.window == (20, 39)


def test_stationary_needs_twenty_points():
    with pytest.raises(InvalidArgument):
        stationary_estimate(constant_series(0.5, 0.5, 0, 19), 0.4)


def test_tail_fraction_sets_window():
    est = stationary_estimate(constant_series(0.5, 0.5, 0, 100), 0.4, tail_fraction=0.1)
    assert est.window == (90, 99)


def test_stationary_residual_shrinks_with_time(exact_runs):
    residuals = [stationary_estimate(series_of(exact_runs(0.2, steps)), math.pi / 4).residual
                 for steps in (100, 200, 400)]
    assert residuals[0] > residuals[1] > residuals[2]


@pytest.mark.parametrize("p", [0.1, 0.5])
def test_gcd_point_bounds(exact_runs, p):
    for point in series_of(exact_runs(p, 100)).points:
        assert abs(point.pi_l + point.pi_r - 1) < 1e-10
        assert -1e-12 <= point.pi_l <= 1 + 1e-12
        assert abs(point.q) <= 0.5 + 1e-12
