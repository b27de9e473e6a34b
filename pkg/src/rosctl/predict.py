"""Prediction of Rosenblatt-driven linear states.

``predict_martingale`` returns the last observation. The linear predictor
of an Ornstein-Uhlenbeck state weights the past increments of
``e^{-b1 r} X(r)`` with ``g(r) = e^{b1 r} G(-r/s)``, where ``G`` is a nested
derivative-of-integral transform of ``F``. Derivatives are five-point
central differences with step ``grid**(-2/3)``; quadratures are Gauss-Jacobi rules
carrying the algebraic endpoint weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import ConfigurationError, DomainError, StencilError
from .noise import SamplePath, _grid_index
from .numerics import as_hurst, gamma_fn, gauss_jacobi_01

__all__ = [
    "PredictorSpec",
    "c_h",
    "predict_martingale",
    "f_exp",
    "g_exp",
    "stencil_step",
    "predictor_weights",
    "predict_linear_ou",
    "predictor_mse",
]


@dataclass(frozen=True)
class PredictorSpec:
    b1: float
    window: float
    horizon: float
    h: float

    def __post_init__(self):
        if not (self.window > 0 and self.horizon > 0):
            raise DomainError("window and horizon must be positive")
        object.__setattr__(self, "h", as_hurst(self.h).h)


def c_h(h) -> float:
    """``2 cos(pi (1 - 2H) / 2) Gamma(2H - 1) Gamma(3/2 - H)**2``."""
    h = as_hurst(h).h
    return 2 * math.cos(0.5 * math.pi * (1 - 2 * h)) * gamma_fn(2 * h - 1) * gamma_fn(1.5 - h) ** 2


def predict_martingale(history: SamplePath, t_prime: float, t: float) -> float:
    """Conditional mean of ``x(t)`` given the path up to ``t_prime``: ``x(t_prime)``."""
    if t < t_prime:
        raise DomainError(f"prediction time {t} precedes the observation time {t_prime}")
    return float(history.values[_grid_index(t_prime, history.t0, history.dt, history.n)])


# ---------------------------------------------------------------------------
# F_exp
# ---------------------------------------------------------------------------

def _f_integrand_w(w, y, spec):
    # substitution w = (x + s y)^(2H-1) removes the endpoint singularity
    p = 1.0 / (2 * spec.h - 1)
    x = w ** p - spec.window * y
    return np.exp(-spec.b1 * x) / (2 * spec.h - 1)


def f_exp(y: float, spec: PredictorSpec) -> float:
    """``s^(1-2H) int_0^t e^(-b1 x) (x + s y)^(2H-2) dx`` by adaptive quadrature."""
    if not 0 < y < 1:
        raise DomainError(f"F_exp is defined for y in (0, 1), got {y}")
    a = 2 * spec.h - 1
    lo = (spec.window * y) ** a
    hi = (spec.horizon + spec.window * y) ** a
    val, _ = integrate.quad(_f_integrand_w, lo, hi, args=(y, spec), epsabs=0.0, epsrel=1e-12, limit=200)
    return spec.window ** (1 - 2 * spec.h) * val


def _f_exp_vec(y: np.ndarray, spec: PredictorSpec) -> np.ndarray:
    """Closed form of F for ``y >= 0`` (values above 1 are used by the stencils).

    With ``u = x + s y`` and ``a = 2H - 1`` the integral is
    ``e^(b1 s y) (Phi(t + s y) - Phi(s y))`` where
    ``Phi(u) = u^a / a * 1F1(a; a + 1; -b1 u)``.
    """
    a = 2 * spec.h - 1
    sy = spec.window * np.asarray(y, dtype=float)

    def big_phi(u):
        z = -spec.b1 * u
        # scipy's 1F1 misbehaves for subnormal-scale arguments; two series terms are exact there
        small = np.abs(z) < 1e-6
        series = 1 + a * z / (a + 1) + a * z * z / (2 * (a + 2))
        return u ** a / a * np.where(small, series, special.hyp1f1(a, a + 1, np.where(small, 1.0, z)))

    return spec.window ** (-a) * np.exp(spec.b1 * sy) * (big_phi(spec.horizon + sy) - big_phi(sy))


# ---------------------------------------------------------------------------
# G_exp
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _jacobi_sym01(n: int, a: float):
    # int_0^1 f(z) z^a (1-z)^a dz
    x, w = special.roots_jacobi(n, a, a)
    return 0.5 * (x + 1), w * 2.0 ** (-2 * a - 1)


def stencil_step(grid: int) -> float:
    return float(grid) ** (-2.0 / 3.0)


def _inner(xi: np.ndarray, spec: PredictorSpec, grid: int) -> np.ndarray:
    """``int_0^xi eta^a (xi - eta)^a F(eta) d eta`` with ``a = 1/2 - H``."""
    a = 0.5 - spec.h
    z, w = _jacobi_sym01(grid, a)
    xi = np.asarray(xi, dtype=float)
    return xi ** (2 * a + 1) * (_f_exp_vec(xi[..., None] * z, spec) @ w)


def _central(f, x, step):
    # fourth-order five-point central difference
    return (
        -f(x + 2 * step) + 8 * f(x + step) - 8 * f(x - step) + f(x - 2 * step)
    ) / (12 * step)


def _psi(xi: np.ndarray, spec: PredictorSpec, grid: int, step: float) -> np.ndarray:
    return _central(lambda v: _inner(v, spec, grid), xi, step)


def _phi(x: np.ndarray, spec: PredictorSpec, grid: int, step: float) -> np.ndarray:
    """``int_x^1 xi^(2H-1) (xi - x)^a psi(xi) d xi``."""
    a = 0.5 - spec.h
    z, w = gauss_jacobi_01(grid, a)
    x = np.asarray(x, dtype=float)
    xi = x[..., None] + (1 - x)[..., None] * z
    vals = xi ** (2 * spec.h - 1) * _psi(xi, spec, grid, step)
    return (1 - x) ** (a + 1) * (vals @ w)


def _check_stencil(x: np.ndarray, step: float):
    off = 4 * step
    if np.any(x < off) or np.any(x > 1 - off):
        raise StencilError(f"G_exp stencil needs {off:.6g} <= x <= {1 - off:.6g}", min_offset=off)


def _g_exp_vec(x: np.ndarray, spec: PredictorSpec, grid: int) -> np.ndarray:
    step = stencil_step(grid)
    x = np.asarray(x, dtype=float)
    _check_stencil(x, step)
    dphi = _central(lambda v: _phi(v, spec, grid, step), x, step)
    return -x ** (0.5 - spec.h) * dphi / c_h(spec.h)


def g_exp(x: float, spec: PredictorSpec, grid: int = 256) -> float:
    """Kernel ``G`` of the linear predictor at ``x`` in (0, 1).

    ``grid`` is the Gauss order of every quadrature; the finite-difference
    step is ``grid**(-2/3)``. Points closer than four steps to either
    end raise :class:`StencilError` carrying that minimal offset.
    """
    if not 0 < x < 1:
        raise DomainError(f"G_exp is defined on (0, 1), got {x}")
    return float(_g_exp_vec(np.array([x]), spec, grid)[0])


@lru_cache(maxsize=16)
def predictor_weights(spec: PredictorSpec, n_hist: int, grid: int = 128) -> np.ndarray:
    """Weights ``g(r_k+1/2)`` at the midpoints of a uniform history grid on [-s, 0].

    Midpoints that fall inside the stencil margin take the kernel value at
    the nearest admissible point. Results are cached and read-only.
    """
    step = stencil_step(grid)
    dt = spec.window / n_hist
    r_mid = -spec.window + (np.arange(n_hist) + 0.5) * dt
    x = np.clip(-r_mid / spec.window, 4 * step, 1 - 4 * step)
    w = np.exp(spec.b1 * r_mid) * _g_exp_vec(x, spec, grid)
    w.setflags(write=False)
    return w


def predict_linear_ou(history: SamplePath, spec: PredictorSpec, grid: int = 128) -> float:
    """Linear prediction of ``X(t)`` from ``X`` observed on ``(-s, 0]``.

    ``history`` must be on a uniform grid ending at time 0 and covering the
    window. The Stieltjes integral is a midpoint sum against the increments
    of ``e^{-b1 r} X(r)``.
    """
    times = history.times
    if not math.isclose(times[-1], 0.0, abs_tol=1e-9 * max(1.0, spec.window)):
        raise ConfigurationError("history must end at time 0")
    if times[0] > -spec.window + 1e-9 * spec.window:
        raise ConfigurationError("history is shorter than the observation window")
    start = _grid_index(-spec.window, history.t0, history.dt, history.n)
    return float(_linear_prediction(history.values[start:], times[start:], spec, grid)[0])


def _linear_prediction(values: np.ndarray, r: np.ndarray, spec: PredictorSpec, grid: int) -> np.ndarray:
    values = np.atleast_2d(values)
    y = np.exp(-spec.b1 * r) * values
    w = predictor_weights(spec, values.shape[-1] - 1, grid)
    integral = np.diff(y, axis=-1) @ w
    return math.exp(spec.b1 * spec.horizon) * (values[:, -1] + integral)


def predictor_mse(
    spec: PredictorSpec,
    n_paths: int,
    seed: int,
    dt: float = 2.0 ** -6,
    burn_in: float = 4.0,
    grid: int = 128,
    upsample: int = 64,
    workers=None,
) -> dict:
    """Monte Carlo mean squared errors on stationary-looking Rosenblatt-OU paths.

    Paths of ``dx = b1 x dt + dR`` start at 0 and run ``burn_in`` before the
    observation window. Returns estimates for the linear, martingale and
    zero predictors of ``X(t)`` from ``X`` on ``(-s, 0]``.
    """
    from .harness import MCEstimate, NoiseConfig, _noise_values
    from .noise import PathEnsemble
    from .sde import rosenblatt_ou_exact

    n_burn, n_win, n_hor = (int(round(v / dt)) for v in (burn_in, spec.window, spec.horizon))
    for v, n in ((burn_in, n_burn), (spec.window, n_win), (spec.horizon, n_hor)):
        if not math.isclose(n * dt, v, rel_tol=1e-9, abs_tol=1e-12):
            raise ConfigurationError("burn-in, window and horizon must be whole numbers of steps")
    n = n_burn + n_win + n_hor
    cfg = NoiseConfig.rosenblatt(spec.h, upsample)
    values = _noise_values(cfg, n, n * dt, n_paths, seed, workers)
    noise = PathEnsemble(values, dt, cfg.kind, seed)
    x = np.atleast_2d(rosenblatt_ou_exact(-spec.b1, 0.0, 1.0, 0.0, noise).values)
    hist = x[:, n_burn : n_burn + n_win + 1]
    r = -spec.window + dt * np.arange(n_win + 1)
    target = x[:, -1]
    preds = {
        "linear": _linear_prediction(hist, r, spec, grid),
        "martingale": hist[:, -1],
        "zero": np.zeros(n_paths),
    }
    return {k: MCEstimate.from_samples((v - target) ** 2, seed) for k, v in preds.items()}
