import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import optimize

from rosctl.control import (
    ergodic_cost,
    ergodic_cost_riccati_form,
    mean_part_cost,
    optimal_gain,
    riccati_residual,
    stationary_second_moment,
    surrogate_gain,
    surrogate_sweep,
    variance_aware_gains,
)
from rosctl.errors import DomainError, InadmissibleError
from rosctl.numerics import gamma_fn

hs = st.floats(0.5, 0.99)
drift = st.floats(-3.0, 3.0)
coef = st.floats(0.2, 3.0).flatmap(lambda v: st.sampled_from([v, -v]))
weight = st.floats(0.1, 5.0)


def test_reference_example_against_grid_oracle():
    sol = optimal_gain(1, 1, 1, 1, 0.75)
    grid = np.linspace(-20, 0, 200_001)
    costs = np.array([ergodic_cost(k, 1, 1, 1, 1, 0.75) for k in grid[::10]])
    k_grid = grid[::10][np.argmin(costs)]
    assert abs(sol.gain - k_grid) < 2e-3
    res = optimize.minimize_scalar(lambda k: ergodic_cost(k, 1, 1, 1, 1, 0.75), bounds=(-20, -1.01), method="bounded",
                                   options={"xatol": 1e-10})
    assert sol.gain == pytest.approx(res.x, abs=1e-6)
    assert sol.gain == pytest.approx(-4.64575, abs=1e-5)
    assert sol.cost == pytest.approx(res.fun, rel=1e-10)
    assert sol.cost == pytest.approx(2.156291, abs=1e-6)
    assert abs(sol.cost - sol.cost_riccati_form) < 1e-10


@given(drift, coef, weight)
def test_brownian_limit_is_classical_gain(b1, b2, q):
    r = 1.0
    k = optimal_gain(b1, b2, q, r, 0.5).gain
    assert k == pytest.approx(-(b1 + math.sqrt(b1 ** 2 + b2 ** 2 * q / r)) / b2, rel=1e-12, abs=1e-12)


def test_zero_state_weight_with_stable_plant():
    assert optimal_gain(-1.0, 1.0, 1e-12, 1.0, 0.75).gain == pytest.approx(0.0, abs=1e-11)


@given(drift, coef, weight, weight, hs)
def test_cost_forms_and_riccati(b1, b2, q, r, h):
    sol = optimal_gain(b1, b2, q, r, h)
    assert sol.closed_loop < 0
    assert sol.cost == pytest.approx(sol.cost_riccati_form, rel=1e-10)
    p = sol.riccati_p
    assert abs(riccati_residual(p, b1, b2, q, r, h)) < 1e-10 * max(1.0, abs(p) ** 2 * b2 ** 2 / r, h * q)
    assert abs(sol.gain - b2 * p / r) < 1e-10 * max(1.0, abs(sol.gain))


@given(drift, coef, weight, weight, hs)
def test_optimal_gain_minimizes_cost_on_grid(b1, b2, q, r, h):
    sol = optimal_gain(b1, b2, q, r, h)
    spread = 0.5 * abs(sol.gain) + 0.5
    for k in np.linspace(sol.gain - spread, sol.gain + spread, 1000):
        assert ergodic_cost(k, b1, b2, q, r, h) >= sol.cost * (1 - 1e-12)


def test_infinite_cost_signal():
    assert math.isinf(ergodic_cost(-1.0, 1.0, 1.0, 1.0, 1.0, 0.75))
    assert math.isinf(ergodic_cost_riccati_form(0.0, 1.0, 1.0, 1.0, 1.0, 0.75))


def test_stationary_second_moment_examples():
    assert stationary_second_moment(-1.0, 0.5) == pytest.approx(0.5, rel=1e-14)
    assert stationary_second_moment(-1.0, 0.75) == pytest.approx(0.66467, abs=1e-5)
    with pytest.raises(DomainError):
        stationary_second_moment(0.0, 0.75)


@given(st.floats(0.05, 5.0), hs)
def test_stationary_second_moment_homogeneity(b, h):
    assert stationary_second_moment(-2 * b, h) == pytest.approx(2 ** (-2 * h) * stationary_second_moment(-b, h), rel=1e-12)


def test_surrogate_examples():
    assert surrogate_gain(0.75, 0.75, 1, 1, 1, 1).gap == 0.0
    assert surrogate_gain(0.75, 0.5, 1, 1, 1, 1).gap > 0


@given(drift, coef, weight, weight, hs, hs)
def test_surrogate_gap_nonnegative(b1, b2, q, r, h_true, h_assumed):
    assert surrogate_gain(h_true, h_assumed, b1, b2, q, r).gap >= -1e-12


def test_sweep_minimum_at_true_index():
    grid = np.round(np.arange(0.5, 0.951, 0.05), 10)
    gaps = [s.gap for s in surrogate_sweep(0.75, grid, 1, 1, 1, 1)]
    assert grid[int(np.argmin(gaps))] == pytest.approx(0.75)


def test_variance_aware_example():
    # b1 + bbar1 = -2, b2 + bbar2 = 2
    sol = variance_aware_gains(1, 1, 1, -3, 1, 1, 1, 1, 1, 0.75)
    f = lambda k: mean_part_cost(k, 1, 1, 1, -3, 1, 1, 1)
    oracle = optimize.minimize_scalar(f, bounds=(-10, 0.99), method="bounded", options={"xatol": 1e-12}).x
    assert sol.gain_mean == pytest.approx(-1.0, rel=1e-14)
    assert sol.gain_mean == pytest.approx(oracle, abs=1e-6)
    assert sol.cost_mean == pytest.approx(0.125, rel=1e-14)
    assert sol.cost_mean == pytest.approx(f(sol.gain_mean), rel=1e-14)
    assert sol.gain_dev == pytest.approx(-4.64575, abs=1e-5)
    assert sol.cost == pytest.approx(optimal_gain(1, 1, 1, 1, 0.75).cost + 0.125, rel=1e-14)
    assert sol.cost == pytest.approx(2.281291, abs=1e-6)


def test_variance_aware_degenerate_cases():
    assert variance_aware_gains(1, 1, 0, -3, 1, 1, 1, 1, 1, 0.75).cost_mean == 0.0
    assert variance_aware_gains(1, 1, 1, -3, 1, 1, 0, 1, 1, 0.75).gain_mean == 0.0
    with pytest.raises(InadmissibleError):
        variance_aware_gains(1, 1, 1, 1, 1, 1, 1, 1, 1, 0.75)


@given(st.floats(-4, -0.2), coef, st.floats(0.1, 3), weight, weight)
def test_mean_gain_minimizes_mean_cost(big_b, big_c, bbar0, qbar, rbar):
    sol = variance_aware_gains(big_b - 1.0, 1.0, bbar0, 1.0, big_c - 1.0, 1, qbar, 1, rbar, 0.75)
    f = lambda k: mean_part_cost(k, big_b - 1.0, 1.0, bbar0, 1.0, big_c - 1.0, qbar, rbar)
    assume(abs(big_c) > 0.2)
    for k in sol.gain_mean + np.linspace(-0.5, 0.5, 201):
        assert f(k) >= sol.cost_mean * (1 - 1e-12) - 1e-15


@pytest.mark.parametrize("h", [0.4, 1.0])
def test_closed_forms_reject_index(h):
    with pytest.raises(DomainError):
        optimal_gain(1, 1, 1, 1, h)
