"""Generative diffusion dynamics with Brownian, fractional and Rosenblatt drivers.

Forward constructions steer a point mass at ``x0`` to a Gaussian "mask"
``N(m_T, sigma_T^2)`` at time ``T``; reverse dynamics start from the mask and
use the exact Gaussian score. Only scalar states are handled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, DomainError
from .harness import MCEstimate, NoiseConfig, SummaryStats, _noise_values, summary_stats, wasserstein1
from .noise import NoiseKind, PathEnsemble, gen_ensemble, path_seed
from .numerics import as_hurst, quad_singular_2d
from .sde import rosenblatt_ou_exact

__all__ = [
    "DiffusionSpec",
    "ReverseResult",
    "SuperdiffusionResult",
    "ou_bridge_params",
    "ou_forward_terminal",
    "ou_forward_terminal_check",
    "ou_reverse_sample",
    "frac_forward_mv",
    "frac_v2_quadrature",
    "frac_reverse_drift",
    "frac_reverse_sample",
    "rosenblatt_ou_variance",
    "rosenblatt_superdiffusion_sample",
    "chi_square_limit_check",
]

Rate = Union[float, Callable[[float], float]]
DRIVERS = ("brownian", "fbm", "rosenblatt")


@dataclass(frozen=True)
class DiffusionSpec:
    """Mean-reversion rate ``theta`` (constant or a function of time), horizon,
    target mask ``N(target_mean, target_std^2)``, start ``x0`` and driver."""

    theta: Rate
    horizon: float
    target_mean: float
    target_std: float
    h: float = 0.5
    x0: float = 0.0
    driver: str = "brownian"

    def __post_init__(self):
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")
        if not self.target_std > 0:
            raise DomainError("target_std must be positive")
        if self.driver not in DRIVERS:
            raise ConfigurationError(f"driver must be one of {DRIVERS}, got {self.driver!r}")
        if self.driver == "rosenblatt":
            object.__setattr__(self, "h", as_hurst(self.h).h)
        elif not 0 < self.h < 1:
            raise DomainError("h must lie in (0, 1)")
        if not callable(self.theta) and self.theta < 0:
            raise DomainError("theta must be nonnegative")

    @property
    def constant_theta(self) -> float:
        if callable(self.theta):
            raise ConfigurationError("this construction needs a constant theta")
        return float(self.theta)

    def theta_at(self, t):
        if callable(self.theta):
            return np.vectorize(self.theta, otypes=[float])(t)
        return np.full_like(np.asarray(t, dtype=float), float(self.theta))

    def phi(self, t):
        """``Phi(t) = int_0^t theta``."""
        t = np.asarray(t, dtype=float)
        if not callable(self.theta):
            return float(self.theta) * t
        f = lambda s: integrate.quad(self.theta, 0.0, s, epsabs=0.0, epsrel=1e-13, limit=200)[0]
        return np.vectorize(f, otypes=[float])(t)

    def bridge_mean(self) -> float:
        """Reversion level ``(m_T - e^{-Phi(T)} x0) / (1 - e^{-Phi(T)})``."""
        big = float(self.phi(self.horizon))
        if not big > 0:
            raise DomainError("Phi(T) must be positive for the bridge formulas")
        e = math.exp(-big)
        return (self.target_mean - e * self.x0) / (1.0 - e)


# ---------------------------------------------------------------------------
# Brownian OU bridge matching
# ---------------------------------------------------------------------------

def ou_bridge_params(spec: DiffusionSpec):
    """Reversion level and volatility that send ``x0`` to the mask at ``T``."""
    theta = spec.constant_theta
    if theta == 0:
        raise DomainError("theta = 0 gives a degenerate bridge")
    m = spec.bridge_mean()
    sigma = math.sqrt(2 * theta * spec.target_std ** 2 / -math.expm1(-2 * theta * spec.horizon))
    return m, sigma


def _ou_mean(theta, m, x0, s):
    e = np.exp(-theta * s)
    return e * x0 + (1 - e) * m


def ou_forward_terminal(spec: DiffusionSpec, n_paths: int, seed: int) -> np.ndarray:
    """Terminal samples of the matched OU through its time-changed Brownian form."""
    theta = spec.constant_theta
    m, sigma = ou_bridge_params(spec)
    clock = -math.expm1(-2 * theta * spec.horizon)
    b = gen_ensemble("brownian", 1, clock, n_paths, seed).values[:, -1]
    return _ou_mean(theta, m, spec.x0, spec.horizon) + sigma / math.sqrt(2 * theta) * b


def ou_forward_terminal_check(spec: DiffusionSpec, n_paths: int, seed: int):
    """``(mean, variance)`` estimates of the simulated terminal law."""
    x = ou_forward_terminal(spec, n_paths, seed)
    return MCEstimate.from_samples(x, seed), MCEstimate.variance_from_samples(x, seed)


@dataclass(frozen=True)
class ReverseResult:
    samples: np.ndarray
    t_end: float
    clamp_dt: float
    meta: dict = field(default_factory=dict)


def ou_reverse_sample(spec: DiffusionSpec, mask_samples, n_steps: int, seed: int = 0) -> ReverseResult:
    """Euler integration of the reverse OU from the mask.

    Reverse time ``t`` runs from 0 (the mask) towards ``T`` (the start point);
    the drift is ``-theta (m - x) - 2 theta (x - mu(T-t)) / (1 - e^{-2 theta (T-t)})``
    with ``mu`` the forward mean. The score term blows up at ``t = T``, so the
    run stops one step early, at ``T - dt``.
    """
    if n_steps < 2:
        raise ConfigurationError("need at least two reverse steps")
    theta = spec.constant_theta
    m, sigma = ou_bridge_params(spec)
    x = np.array(mask_samples, dtype=float).ravel()
    dt = spec.horizon / n_steps
    steps = n_steps - 1
    noise = np.diff(gen_ensemble("brownian", steps, steps * dt, x.size, seed).values, axis=1)
    for k in range(steps):
        s = spec.horizon - k * dt
        mu = _ou_mean(theta, m, spec.x0, s)
        drift = -theta * (m - x) - 2 * theta * (x - mu) / -math.expm1(-2 * theta * s)
        x = x + drift * dt + sigma * noise[:, k]
    t_end = spec.horizon - dt
    return ReverseResult(x, t_end, dt, {"clamped_at": t_end, "sigma": sigma, "m": m, "n_steps": n_steps})


# ---------------------------------------------------------------------------
# Fractional forward and reverse dynamics
# ---------------------------------------------------------------------------

def _frac_sigma(spec: DiffusionSpec, t):
    big = spec.phi(spec.horizon)
    return spec.target_std * spec.horizon ** (-spec.h) * np.exp(big - spec.phi(t))


def frac_forward_mv(t: float, spec: DiffusionSpec):
    """Mean and variance at ``t`` of the fractional forward diffusion.

    With volatility ``sigma(t) = sigma_T T^{-H} e^{Phi(T) - Phi(t)}`` the
    variance is ``e^{2 Phi(T) - 2 Phi(t)} (t/T)^{2H} sigma_T^2``.
    """
    if not 0 <= t <= spec.horizon:
        raise DomainError(f"t must lie in [0, T], got {t}")
    if t == 0:
        return float(spec.x0), 0.0
    e_t = math.exp(-float(spec.phi(t)))
    mean = e_t * spec.x0 + (1 - e_t) * spec.bridge_mean()
    big = float(spec.phi(spec.horizon))
    v2 = math.exp(2 * big - 2 * float(spec.phi(t))) * (t / spec.horizon) ** (2 * spec.h) * spec.target_std ** 2
    return mean, v2


def frac_v2_quadrature(t: float, spec: DiffusionSpec, panels: int = 4, order: int = 24) -> float:
    """``e^{-2 Phi(t)} H(2H-1) int int e^{Phi} sigma e^{Phi} sigma |u-v|^{2H-2}`` by singular quadrature."""
    h = spec.h
    if not 0.5 < h < 1:
        raise DomainError("the double-integral variance needs 1/2 < H < 1")
    if t <= 0:
        return 0.0
    w = lambda u: np.exp(spec.phi(u)) * _frac_sigma(spec, u)
    val = quad_singular_2d(2 - 2 * h, t, w, w, panels=panels, order=order)
    return math.exp(-2 * float(spec.phi(t))) * h * (2 * h - 1) * val


def frac_reverse_drift(x, t: float, spec: DiffusionSpec):
    """Forward-time drift used when integrating the fractional diffusion backwards.

    Mean reversion towards the bridge level plus the score correction
    ``(x - m(t)) 2H / t``.
    """
    if t <= 0:
        raise DomainError("reverse drift is singular at t = 0")
    if t > spec.horizon:
        raise DomainError("t exceeds the horizon")
    mean, _ = frac_forward_mv(t, spec)
    theta = spec.theta_at(t)
    return theta * (spec.bridge_mean() - np.asarray(x, dtype=float)) + (np.asarray(x, dtype=float) - mean) * 2 * spec.h / t


def frac_reverse_sample(
    spec: DiffusionSpec,
    t_stop: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    noise: str = "fbm",
) -> ReverseResult:
    """Integrate from the mask at ``T`` back to ``t_stop`` with ``n_steps`` steps.

    ``noise="fbm"`` drives the reversal with time-reversed fractional
    increments scaled by the forward ``sigma(t)``. ``noise="matched"`` uses
    Brownian increments with variance ``2H v^2(t) / t`` per unit time, which
    reproduces the forward marginal variances as well as the means.
    """
    if not 0 < t_stop < spec.horizon:
        raise DomainError("t_stop must lie in (0, T)")
    if noise not in ("fbm", "matched"):
        raise ConfigurationError("noise must be 'fbm' or 'matched'")
    dt = (spec.horizon - t_stop) / n_steps
    mask_seed = path_seed(seed, 1 << 32)
    x = np.random.default_rng(mask_seed).normal(spec.target_mean, spec.target_std, n_paths)
    if noise == "fbm":
        n_gen = 1 << max(0, (n_steps - 1).bit_length())
        vals = gen_ensemble(NoiseKind("fbm", spec.h), n_gen, n_gen * dt, n_paths, seed).values
        incr = np.diff(vals[:, : n_steps + 1], axis=1)
    else:
        incr = np.diff(gen_ensemble("brownian", n_steps, n_steps * dt, n_paths, seed).values, axis=1)
    for k in range(n_steps):
        t = spec.horizon - k * dt
        if noise == "fbm":
            scale = float(_frac_sigma(spec, t))
        else:
            scale = math.sqrt(2 * spec.h * frac_forward_mv(t, spec)[1] / t)
        x = x - frac_reverse_drift(x, t, spec) * dt + scale * incr[:, k]
    return ReverseResult(x, t_stop, dt, {"noise": noise, "mask_seed": mask_seed, "n_steps": n_steps})


# ---------------------------------------------------------------------------
# Rosenblatt super-diffusion
# ---------------------------------------------------------------------------

def rosenblatt_ou_variance(theta: float, sigma: float, t: float, h: float, panels: int = 4, order: int = 24) -> float:
    """``sigma^2 e^{-2 theta t} H(2H-1) int int e^{theta u} e^{theta v} |u-v|^{2H-2}``."""
    h = as_hurst(h).h
    if t <= 0 or sigma == 0:
        return 0.0
    w = lambda u: np.exp(theta * (np.asarray(u) - t))
    return sigma ** 2 * h * (2 * h - 1) * quad_singular_2d(2 - 2 * h, t, w, w, panels=panels, order=order)


@dataclass(frozen=True)
class SuperdiffusionResult:
    samples: np.ndarray
    m: float
    sigma: float
    variance: MCEstimate
    variance_formula: float
    stats: SummaryStats
    meta: dict = field(default_factory=dict)


def rosenblatt_superdiffusion_sample(
    spec: DiffusionSpec,
    n_paths: int,
    seed: int,
    n_steps: int = 256,
    upsample: int = 64,
    sigma: Optional[float] = None,
    workers: Optional[int] = None,
) -> SuperdiffusionResult:
    """Terminal samples of the Rosenblatt-driven OU and a variance report.

    The reversion level is the bridge mean; by default ``sigma`` is chosen so
    the terminal variance equals ``target_std^2``.
    """
    if spec.driver != "rosenblatt":
        raise ConfigurationError("rosenblatt_superdiffusion_sample needs driver='rosenblatt'")
    theta = spec.constant_theta
    t = spec.horizon
    m = spec.bridge_mean() if theta > 0 else spec.target_mean
    if sigma is None:
        sigma = spec.target_std / math.sqrt(rosenblatt_ou_variance(theta, 1.0, t, spec.h))
    cfg = NoiseConfig.rosenblatt(spec.h, upsample)
    values = _noise_values(cfg, n_steps, t, n_paths, seed, workers)
    noise = PathEnsemble(values, t / n_steps, cfg.kind, seed)
    x = np.atleast_2d(rosenblatt_ou_exact(theta, m, sigma, spec.x0, noise).values)[:, -1]
    return SuperdiffusionResult(
        samples=x,
        m=m,
        sigma=sigma,
        variance=MCEstimate.variance_from_samples(x, seed),
        variance_formula=rosenblatt_ou_variance(theta, sigma, t, spec.h),
        stats=summary_stats(x),
        meta={"n_steps": n_steps, "upsample": upsample, "seed": seed},
    )


def chi_square_limit_check(
    theta: float,
    m: float,
    sigma: float,
    x0: float,
    t: float,
    h_near_one: float,
    n_paths: int,
    seed: int = 0,
    n_steps: int = 256,
    upsample: int = 64,
    workers: Optional[int] = None,
) -> float:
    """Wasserstein-1 distance between the Rosenblatt-OU marginal at ``t`` and its
    centred chi-square limit as ``H -> 1``."""
    if not 0.95 <= h_near_one < 1:
        raise DomainError("h_near_one must lie in [0.95, 1)")
    if theta <= 0:
        raise DomainError("theta must be positive")
    cfg = NoiseConfig.rosenblatt(h_near_one, upsample)
    values = _noise_values(cfg, n_steps, t, n_paths, seed, workers)
    noise = PathEnsemble(values, t / n_steps, cfg.kind, seed)
    x = np.atleast_2d(rosenblatt_ou_exact(theta, m, sigma, x0, noise).values)[:, -1]
    z = np.random.default_rng(path_seed(seed, 1 << 32)).standard_normal(n_paths)
    decay = math.exp(-theta * t)
    limit = decay * x0 + (1 - decay) * m + sigma / (theta * math.sqrt(2)) * (1 - decay) * (z * z - 1)
    return wasserstein1(x, limit)
