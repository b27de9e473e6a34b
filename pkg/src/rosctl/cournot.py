"""Cournot market of renewable producers with Rosenblatt price noise.

Price: ``dp = (1/eps)(a + D - sum_j u_j - p) dt + dR``. Producers play
``u_i = eta_i (p - pbar) + etabar_i pbar + rho_i``. The problem splits into
a stochastic deviation game in ``eta`` and a deterministic mean game in
``(etabar, rho)``; payoffs add across the two parts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ConvergenceError, DomainError, InadmissibleError
from .harness import MCEstimate, NoiseConfig, _noise_values
from .numerics import as_hurst, gamma_fn

__all__ = [
    "CournotSpec",
    "CournotEquilibrium",
    "BarMarket",
    "MfgBaseline",
    "tilde_payoff",
    "best_response_eta",
    "foc_residual",
    "eta_star_fixed_point",
    "bar_market_equilibrium",
    "bar_stationary_payoff",
    "full_equilibrium",
    "price_of_simplicity",
    "mfg_baseline",
    "mftg_table_payoff",
    "simulate_payoffs",
]


@dataclass(frozen=True)
class CournotSpec:
    """``a_intercept`` is the price-dynamics constant ``a`` (distinct from the
    best-response aggregate ``1 + sum_{j != i} eta_j``)."""

    a_intercept: float
    demand: float
    c: Sequence[float]
    r: Sequence[float]
    rbar: Sequence[float]
    epsilon: float
    h: float
    p0: float = 0.0

    def __post_init__(self):
        for name in ("c", "r", "rbar"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not (len(self.c) == len(self.r) == len(self.rbar)) or not self.c:
            raise ConfigurationError("c, r and rbar need one entry per producer")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if min(self.r) <= 0 or min(self.rbar) < 0:
            raise DomainError("need r_i > 0 and rbar_i >= 0")
        object.__setattr__(self, "h", as_hurst(self.h).h)

    @property
    def n_producers(self) -> int:
        return len(self.c)


def _variance_factor(total: float, spec: CournotSpec) -> float:
    # stationary E[ptilde^2] for mean reversion rate total/eps
    return gamma_fn(2 * spec.h + 1) / (2 * (total / spec.epsilon) ** (2 * spec.h))


def tilde_payoff(eta: Sequence[float], spec: CournotSpec) -> List[float]:
    """Long-run deviation payoffs; ``nan`` for every producer when ``1 + sum eta <= 0``."""
    eta = [float(e) for e in eta]
    total = 1.0 + sum(eta)
    if not total > 0:
        return [math.nan] * len(eta)
    v = _variance_factor(total, spec)
    return [v * (e - 0.5 * r * e * e) for e, r in zip(eta, spec.r)]


def best_response_eta(a_aggregate: float, r_i: float, h: float) -> float:
    """Positive critical point of the deviation payoff in ``eta_i``."""
    k = r_i * a_aggregate + 2 * h - 1
    return (-k + math.sqrt(k * k + 4 * (1 - h) * r_i * a_aggregate)) / (2 * (1 - h) * r_i)


def foc_residual(eta: Sequence[float], spec: CournotSpec) -> List[float]:
    total = 1.0 + sum(eta)
    h = spec.h
    out = []
    for e, r in zip(eta, spec.r):
        a = total - e
        out.append(abs((h - 1) * r * e * e - (r * a + 2 * h - 1) * e + a))
    return out


def eta_star_fixed_point(spec: CournotSpec, damping: float = 0.5, tol: float = 1e-13, max_iter: int = 10_000) -> List[float]:
    """Damped Jacobi best-response iteration from ``eta = 0``."""
    eta = np.zeros(spec.n_producers)
    r = np.asarray(spec.r)
    residual = math.inf
    for _ in range(max_iter):
        agg = 1.0 + eta.sum() - eta
        if np.any(agg <= 0):
            raise InadmissibleError("aggregate 1 + sum_{j!=i} eta_j became nonpositive")
        br = np.array([best_response_eta(a, ri, spec.h) for a, ri in zip(agg, r)])
        residual = float(np.max(np.abs(br - eta)))
        if residual < tol:
            eta = br
            break
        eta = (1 - damping) * eta + damping * br
    else:
        raise ConvergenceError("deviation-gain iteration did not converge", residual)
    if not 1.0 + eta.sum() > 0:
        raise InadmissibleError("1 + sum eta must be positive")
    return eta.tolist()


@dataclass(frozen=True)
class BarMarket:
    p_bar_star: float
    eta_bar: List[float]
    rho: List[float]
    u_bar: List[float]
    payoffs_bar: List[float]
    consistency_residual: float


def bar_market_equilibrium(spec: CournotSpec) -> BarMarket:
    """Price-taking equilibrium of the deterministic mean game."""
    k = [r + rb for r, rb in zip(spec.r, spec.rbar)]
    if min(k) <= 0:
        raise DomainError("r_i + rbar_i must be positive")
    base = spec.a_intercept + spec.demand
    p_star = (base + sum(c / ki for c, ki in zip(spec.c, k))) / (1.0 + sum(1.0 / ki for ki in k))
    eta_bar = [1.0 / ki for ki in k]
    rho = [-c / ki for c, ki in zip(spec.c, k)]
    u_bar = [(p_star - c) / ki for c, ki in zip(spec.c, k)]
    payoffs = [(p_star - c) ** 2 / (2 * ki) for c, ki in zip(spec.c, k)]
    residual = abs(p_star - (base - math.fsum(u_bar)))
    return BarMarket(p_star, eta_bar, rho, u_bar, payoffs, residual)


def bar_stationary_payoff(i: int, eta_bar: Sequence[float], rho: Sequence[float], spec: CournotSpec) -> float:
    """Stationary mean-game payoff of producer ``i`` with the limiting price
    ``(a + D - sum rho) / (1 + sum etabar)`` induced by the profile."""
    total = 1.0 + sum(eta_bar)
    if not total > 0:
        return math.nan
    p = (spec.a_intercept + spec.demand - sum(rho)) / total
    k = spec.r[i] + spec.rbar[i]
    u = eta_bar[i] * p + rho[i]
    return p * u - spec.c[i] * u - 0.5 * k * u * u


@dataclass(frozen=True)
class CournotEquilibrium:
    eta: List[float]
    eta_bar: List[float]
    rho: List[float]
    p_bar_star: float
    payoffs: List[float]
    payoffs_dev: List[float]
    payoffs_mean: List[float]
    stability: tuple

    def rows(self):
        return [
            (i, self.eta[i], self.eta_bar[i], self.rho[i], self.payoffs[i])
            for i in range(len(self.eta))
        ]


def full_equilibrium(spec: CournotSpec) -> CournotEquilibrium:
    eta = eta_star_fixed_point(spec)
    bar = bar_market_equilibrium(spec)
    dev = tilde_payoff(eta, spec)
    total = [d + m for d, m in zip(dev, bar.payoffs_bar)]
    stab = (1.0 + sum(eta), 1.0 + sum(bar.eta_bar))
    if min(stab) <= 0:
        raise InadmissibleError(f"stability certificates not positive: {stab}")
    return CournotEquilibrium(eta, bar.eta_bar, bar.rho, bar.p_bar_star, total, dev, bar.payoffs_bar, stab)


def price_of_simplicity(p_mean: float, c_i: float, r_i: float, rbar_i: float) -> float:
    """Payoff lost by freezing the mean-field term; equals ``rbar^2 (p-c)^2 / (2 r^2 (r+rbar))``."""
    if not r_i > 0:
        raise DomainError("r_i must be positive")
    return 0.5 * (1.0 / (r_i + rbar_i) - (r_i - rbar_i) / r_i ** 2) * (p_mean - c_i) ** 2


@dataclass(frozen=True)
class MfgBaseline:
    strategies: List[np.ndarray]
    payoffs: List[float]
    rbar_independent: bool = True


def mfg_baseline(spec: CournotSpec, p_samples) -> MfgBaseline:
    """Frozen mean-field strategies ``(p - c_k)/r_k`` and their payoffs.

    Payoffs use the empirical price law with population moments.
    """
    p = np.asarray(p_samples, dtype=float)
    if p.size == 0:
        raise ConfigurationError("need price samples")
    strategies, payoffs = [], []
    for c, r, rb in zip(spec.c, spec.r, spec.rbar):
        u = (p - c) / r
        strategies.append(u)
        payoffs.append(float(np.mean((p - c) ** 2) / (2 * r) - 0.5 * rb * np.mean(u) ** 2))
    return MfgBaseline(strategies, payoffs)


def mftg_table_payoff(spec: CournotSpec, p_samples) -> List[float]:
    """Equilibrium payoff ``var(p)/(2r) + (mean(p) - c)^2 / (2(r + rbar))`` on a price sample."""
    p = np.asarray(p_samples, dtype=float)
    var, mean = float(np.var(p)), float(np.mean(p))
    return [var / (2 * r) + (mean - c) ** 2 / (2 * (r + rb)) for c, r, rb in zip(spec.c, spec.r, spec.rbar)]


def simulate_payoffs(
    spec: CournotSpec,
    eq: Optional[CournotEquilibrium] = None,
    horizon: float = 200.0,
    dt: float = 2 ** -5,
    n_paths: int = 100,
    seed: int = 0,
    upsample: int = 64,
    workers: Optional[int] = None,
) -> List[MCEstimate]:
    """Monte Carlo long-run average payoff of each producer under ``eq``.

    The deviation price is an exact Rosenblatt-OU convolution; the mean price
    follows its deterministic ODE from ``p0``.
    """
    from .sde import rosenblatt_ou_exact
    from .noise import PathEnsemble

    eq = eq or full_equilibrium(spec)
    n = int(round(horizon / dt))
    values = _noise_values(NoiseConfig.rosenblatt(spec.h, upsample), n, horizon, n_paths, seed, workers)
    noise = PathEnsemble(values, dt, NoiseConfig.rosenblatt(spec.h).kind, seed)
    theta = (1.0 + sum(eq.eta)) / spec.epsilon
    p_dev = rosenblatt_ou_exact(theta, 0.0, 1.0, 0.0, noise).values
    t = noise.times
    rate = (1.0 + sum(eq.eta_bar)) / spec.epsilon
    p_bar = eq.p_bar_star + (spec.p0 - eq.p_bar_star) * np.exp(-rate * t)
    p = p_bar + p_dev
    out = []
    for i in range(spec.n_producers):
        u_bar = eq.eta_bar[i] * p_bar + eq.rho[i]
        u = eq.eta[i] * p_dev + u_bar
        pi = p * u - spec.c[i] * u - 0.5 * spec.r[i] * u * u - 0.5 * spec.rbar[i] * u_bar ** 2
        avg = dt * (pi.sum(axis=1) - 0.5 * (pi[:, 0] + pi[:, -1])) / horizon
        out.append(MCEstimate.from_samples(avg, seed))
    return out
