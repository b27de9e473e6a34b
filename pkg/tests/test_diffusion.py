import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rosctl.diffusion import (
    DiffusionSpec,
    chi_square_limit_check,
    frac_forward_mv,
    frac_reverse_drift,
    frac_reverse_sample,
    frac_v2_quadrature,
    ou_bridge_params,
    ou_forward_terminal,
    ou_forward_terminal_check,
    ou_reverse_sample,
    rosenblatt_ou_variance,
    rosenblatt_superdiffusion_sample,
)
from rosctl.errors import ConfigurationError, DomainError
from rosctl.numerics import quad_singular_2d


def test_bridge_params_reference():
    m, sigma = ou_bridge_params(DiffusionSpec(1.0, 1.0, 0.0, 1.0))
    assert m == 0.0
    assert sigma == pytest.approx(math.sqrt(2 / (1 - math.exp(-2))), rel=1e-15)
    assert sigma == pytest.approx(1.520867, abs=1e-6)


@given(st.floats(0.1, 3), st.floats(0.1, 5), st.floats(-3, 3), st.floats(0.1, 2))
def test_bridge_fixed_point(theta, horizon, target, std):
    m, _ = ou_bridge_params(DiffusionSpec(theta, horizon, target, std, x0=target))
    assert m == pytest.approx(target, rel=1e-12, abs=1e-12)


def test_bridge_long_horizon_limit():
    m, sigma = ou_bridge_params(DiffusionSpec(2.0, 50.0, 1.5, 0.7, x0=-4.0))
    assert m == pytest.approx(1.5, rel=1e-12)
    assert sigma == pytest.approx(0.7 * math.sqrt(4.0), rel=1e-12)


def test_degenerate_bridge():
    with pytest.raises(DomainError):
        ou_bridge_params(DiffusionSpec(0.0, 1.0, 0.0, 1.0))


@given(st.floats(0.2, 3), st.floats(0.2, 3), st.floats(-2, 2), st.floats(0.2, 2), st.floats(-2, 2))
def test_forward_terminal_matches_mask(theta, horizon, target, std, x0):
    spec = DiffusionSpec(theta, horizon, target, std, x0=x0)
    mean, var = ou_forward_terminal_check(spec, 5000, 3)
    assert mean.within(target, 4.0)
    assert var.within(std ** 2, 4.0)


def test_tiny_mask_concentrates():
    x = ou_forward_terminal(DiffusionSpec(1.0, 1.0, 2.0, 1e-3, x0=-1.0), 5000, 0)
    assert np.max(np.abs(x - 2.0)) < 6e-3


def test_reverse_spread_shrinks_with_step():
    spec = DiffusionSpec(1.0, 1.0, 0.0, 1.0, x0=0.5)
    mask = np.random.default_rng(0).normal(0, 1, 4000)
    spreads = [np.std(ou_reverse_sample(spec, mask, n, seed=1).samples) for n in (16, 64, 256)]
    assert spreads[0] > spreads[1] > spreads[2]
    res = ou_reverse_sample(spec, mask, 64, seed=1)
    assert res.t_end == pytest.approx(1.0 - 1.0 / 64)
    assert res.meta["clamped_at"] == res.t_end


def test_reverse_from_fixed_point_stays_put():
    spec = DiffusionSpec(1.0, 1.0, 0.5, 1e-4, x0=0.5)
    res = ou_reverse_sample(spec, np.full(200, 0.5), 128, seed=2)
    assert np.max(np.abs(res.samples - 0.5)) < 1e-3


def _fspec(**kw):
    base = dict(theta=1.0, horizon=1.0, target_mean=0.3, target_std=1.0, h=0.75, x0=0.5, driver="fbm")
    base.update(kw)
    return DiffusionSpec(**base)


def test_fractional_endpoints():
    spec = _fspec()
    assert frac_forward_mv(0.0, spec) == (0.5, 0.0)
    m, v2 = frac_forward_mv(1.0, spec)
    assert m == pytest.approx(0.3, rel=1e-14) and v2 == pytest.approx(1.0, rel=1e-14)
    m, v2 = frac_forward_mv(1e-9, spec)
    assert m == pytest.approx(0.5, abs=1e-8) and v2 < 1e-10


@pytest.mark.parametrize("theta", [1.0, lambda t: 1.0 + 0.5 * t])
def test_fractional_variance_closed_form_vs_quadrature(theta):
    spec = _fspec(theta=theta)
    for t in np.linspace(0.1, 1.0, 10):
        closed = frac_forward_mv(t, spec)[1]
        assert frac_v2_quadrature(t, spec) == pytest.approx(closed, rel=1e-6)


def test_reverse_drift_properties():
    spec = _fspec()
    t = 0.4
    m, _ = frac_forward_mv(t, spec)
    assert frac_reverse_drift(m, t, spec) == pytest.approx(1.0 * (spec.bridge_mean() - m), rel=1e-15)
    half = _fspec(h=0.5)
    m, _ = frac_forward_mv(t, half)
    x = m + 1.0
    assert frac_reverse_drift(x, t, half) == pytest.approx(spec.bridge_mean() - x + 1.0 / t, rel=1e-14)
    with pytest.raises(DomainError):
        frac_reverse_drift(0.0, 0.0, spec)


def test_matched_reverse_reproduces_forward_marginal():
    spec = _fspec()
    rev = frac_reverse_sample(spec, 0.5, 512, 20_000, 4, noise="matched")
    m, v2 = frac_forward_mv(0.5, spec)
    se = rev.samples.std(ddof=1) / math.sqrt(rev.samples.size)
    assert abs(rev.samples.mean() - m) < 3 * se
    assert np.var(rev.samples) == pytest.approx(v2, rel=0.05)


def test_reverse_sample_validation():
    with pytest.raises(DomainError):
        frac_reverse_sample(_fspec(), 1.0, 16, 10, 0)
    with pytest.raises(ConfigurationError):
        frac_reverse_sample(_fspec(), 0.5, 16, 10, 0, noise="levy")


def test_rosenblatt_variance_unit_reversion_free():
    # theta = 0 leaves sigma^2 H(2H-1) int int |u-v|^(2H-2) = sigma^2 t^(2H)
    assert rosenblatt_ou_variance(0.0, 2.0, 1.5, 0.75) == pytest.approx(4.0 * 1.5 ** 1.5, rel=1e-12)
    assert rosenblatt_ou_variance(1.0, 0.0, 1.0, 0.75) == 0.0
    w = lambda u: np.exp(np.asarray(u) - 1.0)
    direct = 0.75 * 0.5 * quad_singular_2d(0.5, 1.0, w, w, panels=8, order=32)
    assert rosenblatt_ou_variance(1.0, 1.0, 1.0, 0.75) == pytest.approx(direct, rel=1e-9)


def test_superdiffusion_without_noise_is_deterministic():
    spec = DiffusionSpec(1.0, 1.0, 0.0, 1.0, h=0.75, driver="rosenblatt", x0=1.0)
    res = rosenblatt_superdiffusion_sample(spec, 50, 0, n_steps=32, sigma=0.0)
    assert np.ptp(res.samples) == 0.0
    assert res.samples[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigurationError):
        rosenblatt_superdiffusion_sample(_fspec(), 10, 0)


def test_chi_square_limit_degenerate_and_domain():
    assert chi_square_limit_check(1.0, 0.2, 0.0, 0.0, 1.0, 0.99, 100, 0, n_steps=16) == 0.0
    with pytest.raises(DomainError):
        chi_square_limit_check(1.0, 0.0, 1.0, 0.0, 1.0, 0.9, 100)
