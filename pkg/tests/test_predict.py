import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rosctl.errors import ConfigurationError, DomainError, StencilError
from rosctl.noise import STATE, SamplePath, gen_rosenblatt
from rosctl.numerics import gamma_fn
from rosctl.predict import (
    PredictorSpec,
    c_h,
    f_exp,
    g_exp,
    predict_linear_ou,
    predict_martingale,
    predictor_mse,
    stencil_step,
)


def _history(values, dt, t0):
    return SamplePath(dt, np.asarray(values, dtype=float), STATE, t0=t0)


def test_martingale_examples():
    path = gen_rosenblatt(0.75, 64, 1.0, 3, upsample=64)
    hist = _history(path.values + 1.0, path.dt, 0.0)
    assert predict_martingale(hist, 0.5, 0.5) == hist.values[32]
    assert predict_martingale(hist, 0.5, 3.0) == predict_martingale(hist, 0.5, 100.0)
    assert predict_martingale(_history(np.full(9, 5.0), 0.125, 0.0), 0.5, 2.0) == 5.0
    with pytest.raises(DomainError):
        predict_martingale(hist, 0.5, 0.25)


def test_martingale_refinement_invariance():
    fine = gen_rosenblatt(0.75, 128, 1.0, 4, upsample=64)
    hist_f = _history(fine.values + 2.0, fine.dt, 0.0)
    hist_c = _history(fine.values[::4] + 2.0, fine.dt * 4, 0.0)
    assert predict_martingale(hist_f, 0.75, 2.0) == predict_martingale(hist_c, 0.75, 2.0)


def test_f_exp_brownian_drift_free_example():
    spec = PredictorSpec(0.0, 1.0, 1.0, 0.75)
    assert f_exp(0.5, spec) == pytest.approx((1.5 ** 0.5 - 0.5 ** 0.5) / 0.5, rel=1e-10)
    assert f_exp(0.5, spec) == pytest.approx(1.03528, abs=1e-5)
    v = f_exp(1 - 1e-12, spec)
    assert math.isfinite(v) and v > 0
    for y in (0.0, 1.0, -0.5):
        with pytest.raises(DomainError):
            f_exp(y, spec)


@given(st.floats(0.0, 2.0), st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.55, 0.95),
       st.floats(0.02, 0.97), st.floats(0.01, 0.5))
def test_f_exp_positive_and_decreasing(b1, window, horizon, h, y, dy):
    spec = PredictorSpec(b1, window, horizon, h)
    y2 = min(y + dy, 0.99)
    a, b = f_exp(y, spec), f_exp(y2, spec)
    assert a > 0 and b > 0
    if y2 > y:
        assert b < a


def test_c_h_direct_evaluation():
    # cos(pi (1 - 2H) / 2) at H = 3/4 is cos(-pi/4)
    expected = 2 * math.cos(-math.pi / 4) * gamma_fn(0.5) * gamma_fn(0.75) ** 2
    assert c_h(0.75) == pytest.approx(expected, rel=1e-14)
    assert c_h(0.75) == pytest.approx(3.7640686, abs=1e-7)


def test_g_exp_finite_and_stencil_margin():
    spec = PredictorSpec(1.0, 1.0, 1.0, 0.75)
    assert math.isfinite(g_exp(0.5, spec, grid=128))
    step = stencil_step(128)
    with pytest.raises(StencilError) as err:
        g_exp(step, spec, grid=128)
    assert err.value.min_offset == pytest.approx(4 * step)
    with pytest.raises(DomainError):
        g_exp(1.0, spec)


def test_linear_predictor_zero_and_linearity():
    spec = PredictorSpec(-1.0, 1.0, 0.5, 0.75)
    zero = _history(np.zeros(65), 1 / 64, -1.0)
    assert predict_linear_ou(zero, spec) == 0.0
    path = gen_rosenblatt(0.75, 64, 1.0, 5, upsample=64)
    hist = _history(path.values, path.dt, -1.0)
    base = predict_linear_ou(hist, spec)
    scaled = predict_linear_ou(_history(3.0 * path.values, path.dt, -1.0), spec)
    assert scaled == pytest.approx(3.0 * base, rel=1e-12)


def test_linear_predictor_history_checks():
    spec = PredictorSpec(-1.0, 1.0, 0.5, 0.75)
    with pytest.raises(ConfigurationError):
        predict_linear_ou(_history(np.zeros(33), 1 / 64, -0.5), spec)
    with pytest.raises(ConfigurationError):
        predict_linear_ou(_history(np.zeros(65), 1 / 64, 0.0), spec)


def test_predictor_mse_ranking():
    mse = predictor_mse(PredictorSpec(-1.0, 1.0, 1.0, 0.75), 300, 0)
    assert mse["linear"].value < mse["zero"].value
    again = predictor_mse(PredictorSpec(-1.0, 1.0, 1.0, 0.75), 300, 0)
    assert again == mse


@given(st.floats(-3.0, 3.0), st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.52, 0.98), st.floats(0.001, 0.999))
def test_vectorised_kernel_matches_adaptive_quadrature(b1, window, horizon, h, y):
    from rosctl.predict import _f_exp_vec

    spec = PredictorSpec(b1, window, horizon, h)
    assert _f_exp_vec(np.array([y]), spec)[0] == pytest.approx(f_exp(y, spec), rel=1e-9)
