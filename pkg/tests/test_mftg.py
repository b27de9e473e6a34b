import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rosctl.control import stationary_second_moment
from rosctl.errors import BlowUpError, CoefficientSignError, DomainError
from rosctl.mftg import (
    MftgSpec,
    calibrated_c3,
    compute_o_v2,
    cooperative_optimum,
    mftg_equilibrium,
    solve_lambda,
    solve_lambda_bar,
)
from rosctl.numerics import gamma_fn

GRID = np.linspace(0.0, 2.0, 201)


def _spec(**kw):
    base = dict(
        n_players=2, horizon=1.0, n_steps=100, b1=0.5, bbar1=-0.2, b2=1.0, bbar2=0.2,
        q=1.0, qbar=0.5, r=1.0, rbar=1.0, q_terminal=1.0, qbar_terminal=0.5, kbar=1, h=0.75,
    )
    base.update(kw)
    return MftgSpec(**base)


@given(st.floats(-2, 2), st.floats(0.3, 2), st.floats(0.1, 3), st.floats(0.2, 3))
def test_lambda_stays_at_stationary_root(b1, b2, q, r):
    root = r * (b1 + math.sqrt(b1 ** 2 + q * b2 ** 2 / r)) / b2 ** 2
    lam = solve_lambda(b1, b2, q, r, root, GRID)
    assert np.allclose(lam, root, rtol=1e-12, atol=1e-14)


def test_lambda_zero_weights():
    assert np.all(solve_lambda(0.7, 1.0, 0.0, 1.0, 0.0, GRID) == 0.0)


def test_lambda_time_varying_self_convergence():
    b1 = lambda t: 0.5 * np.sin(t)
    q = lambda t: 1.0 + t
    fine = np.linspace(0.0, 2.0, 200 * 16 + 1)
    lam = solve_lambda(b1, 1.0, q, 1.0, 0.5, GRID)
    ref = solve_lambda(b1, 1.0, q, 1.0, 0.5, fine)[::16]
    assert np.max(np.abs(lam - ref)) < 1e-8


def test_lambda_blow_up():
    with pytest.raises(BlowUpError):
        solve_lambda(20.0, 0.0, 1.0, 1.0, 1.0, GRID)
    with pytest.raises(DomainError):
        solve_lambda(0.0, 1.0, 1.0, 1.0, -1.0, GRID)


@given(st.floats(-2, 1), st.floats(-1, 1), st.floats(0.3, 2), st.floats(-0.2, 0.5), st.floats(0.1, 3), st.floats(0.2, 3))
def test_lambda_bar_unit_degree_is_riccati(b1, bbar1, b2, bbar2, qbar, rbar):
    lb = solve_lambda_bar(b1, bbar1, b2, bbar2, qbar, rbar, 1, 0.4, GRID)
    ref = solve_lambda(b1 + bbar1, b2 + bbar2, qbar, rbar, 0.4, GRID)
    assert np.allclose(lb, ref, rtol=1e-12, atol=1e-14)


def test_lambda_bar_zero_weights():
    assert np.all(solve_lambda_bar(0.5, -0.2, 1.0, 0.2, 0.0, 1.0, 2, 0.0, GRID) == 0.0)


def test_lambda_bar_degree_two_self_convergence():
    fine = np.linspace(0.0, 2.0, 200 * 16 + 1)
    lb = solve_lambda_bar(0.5, -0.2, 1.0, 0.2, 1.0, 1.0, 2, 0.5, GRID)
    ref = solve_lambda_bar(0.5, -0.2, 1.0, 0.2, 1.0, 1.0, 2, 0.5, fine)[::16]
    assert np.max(np.abs(lb - ref)) < 1e-8


def test_lambda_bar_negative_base():
    with pytest.raises(CoefficientSignError):
        solve_lambda_bar(0.5, -0.2, 1.0, -3.0, 1.0, 1.0, 2, 0.5, GRID)


def test_o_v2_initial_values():
    o, v2 = compute_o_v2(-1.0, 0.75, 0.7, 0.25, GRID)
    assert o[0] == 0.0 and v2[0] == 0.25


def test_o_v2_long_run_limits():
    h = 0.75
    c3 = calibrated_c3(h)
    grid = np.linspace(0.0, 40.0, 4001)
    o, v2 = compute_o_v2(-1.0, h, c3, 0.0, grid)
    # the approach to the limit is algebraic, of order t^(2H-2)
    assert o[-1] == pytest.approx(c3 * gamma_fn(2 * h - 1), rel=0.05)
    assert v2[-1] == pytest.approx(stationary_second_moment(-1.0, h), rel=1e-6)


def test_equilibrium_structure():
    spec = _spec()
    sol = mftg_equilibrium(spec)
    for i in range(2):
        assert sol.gamma_i[i][-1] == 0.0
        assert np.array_equal(sol.lambda_i[i], solve_lambda(0.5, 1.0, 1.0, 1.0, 1.0, spec.grid))
    # symmetric players
    for seq in (sol.lambda_i, sol.lambda_bar_i, sol.eta_i, sol.eta_bar_i, sol.gamma_i):
        assert np.allclose(seq[0], seq[1], rtol=1e-13, atol=1e-15)
    header, rows = sol.table()
    assert rows.shape == (spec.n_steps + 1, len(header))


def test_single_player_gamma_monotone():
    sol = mftg_equilibrium(_spec(n_players=1))
    assert np.all(np.diff(sol.gamma_i[0]) <= 1e-15)


def test_noise_off_reduces_to_deterministic_value():
    spec = _spec(n_players=1, c3=0.0, var_x0=0.3, v2_init=0.0, xbar0=1.5)
    sol = mftg_equilibrium(spec)
    assert np.all(sol.gamma_i[0] == 0.0)
    expected = sol.lambda_i[0][0] * 0.3 + sol.lambda_bar_i[0][0] * 1.5 ** 2 / 2
    assert sol.equilibrium_cost_i[0] == pytest.approx(expected, rel=1e-15)


def test_cooperative_single_player_matches_equilibrium():
    spec = _spec(n_players=1)
    eq = mftg_equilibrium(spec)
    co = cooperative_optimum(spec, [1.0])
    for a, b in ((eq.lambda_i, co.lambda_i), (eq.lambda_bar_i, co.lambda_bar_i), (eq.eta_i, co.eta_i),
                 (eq.eta_bar_i, co.eta_bar_i), (eq.gamma_i, co.gamma_i)):
        assert np.allclose(a[0], b[0], rtol=1e-12, atol=1e-14)
    assert co.equilibrium_cost_i[0] == pytest.approx(eq.equilibrium_cost_i[0], rel=1e-12)


@given(st.floats(0.2, 5.0))
def test_cooperative_weight_scaling(kappa):
    spec = _spec(n_players=2, q=[1.0, 2.0], r=[1.0, 0.5])
    w = [1.0, 2.0]
    a = cooperative_optimum(spec, w)
    b = cooperative_optimum(spec, [kappa * x for x in w])
    assert np.allclose(b.lambda_i[0], kappa * a.lambda_i[0], rtol=1e-10)
    assert np.allclose(b.lambda_bar_i[0], kappa * a.lambda_bar_i[0], rtol=1e-10)
    for i in range(2):
        assert np.allclose(b.eta_i[i], a.eta_i[i], rtol=1e-10, atol=1e-14)
        assert np.allclose(b.eta_bar_i[i], a.eta_bar_i[i], rtol=1e-10, atol=1e-14)


def test_cooperative_without_weights_is_zero():
    spec = _spec(q=0.0, qbar=0.0, q_terminal=0.0, qbar_terminal=0.0)
    co = cooperative_optimum(spec, [1.0, 1.0])
    assert np.all(co.lambda_i[0] == 0) and np.all(co.lambda_bar_i[0] == 0)
    assert co.equilibrium_cost_i[0] == 0.0


def test_spec_validation():
    with pytest.raises(DomainError):
        _spec(r=0.0)
    with pytest.raises(DomainError):
        _spec(q=-1.0)
