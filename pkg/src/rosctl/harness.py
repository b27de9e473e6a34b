"""Monte Carlo estimators and distributional distances."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError
from .noise import NoiseKind, gen_ensemble

__all__ = [
    "MCEstimate",
    "NoiseConfig",
    "SummaryStats",
    "estimate_ergodic_cost",
    "wasserstein1",
    "summary_stats",
]

OVERFLOW_GUARD = 1e150


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean with its normal-approximation standard error."""

    value: float
    std_error: float
    n: int
    seed: int
    diverged: bool = False

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.value - target) <= n_se * self.std_error

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "n": self.n,
            "seed": self.seed,
            "diverged": self.diverged,
        }

    @classmethod
    def from_samples(cls, samples, seed: int) -> "MCEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        return cls(float(np.mean(samples)), se, n, int(seed))

    @classmethod
    def variance_from_samples(cls, samples, seed: int) -> "MCEstimate":
        """Unbiased sample variance with the standard error of the squared deviations."""
        x = np.asarray(samples, dtype=float).ravel()
        n = x.size
        if n < 2:
            raise ConfigurationError("a variance estimate needs at least two samples")
        return cls.from_samples((x - x.mean()) ** 2 * (n / (n - 1)), seed)


@dataclass(frozen=True)
class NoiseConfig:
    """How to draw the driving noise of a Monte Carlo run."""

    kind: NoiseKind
    method: str = "hermite"
    upsample: int = 64
    base: str = "sqrt_fgn"

    @classmethod
    def rosenblatt(cls, h, upsample: int = 64) -> "NoiseConfig":
        return cls(NoiseKind("rosenblatt", float(h)), upsample=upsample)


def _noise_values(cfg: NoiseConfig, n, horizon, n_paths, seed, workers):
    if cfg.kind.name == "fbm":
        # circulant embedding wants a power of two; draw longer and truncate
        n_gen = 1 << max(0, (n - 1).bit_length())
        ens = gen_ensemble(cfg.kind, n_gen, horizon * n_gen / n, n_paths, seed, workers=workers)
        return ens.values[:, : n + 1]
    ens = gen_ensemble(
        cfg.kind, n, horizon, n_paths, seed,
        method=cfg.method, upsample=cfg.upsample, base=cfg.base, workers=workers,
    )
    return ens.values


def estimate_ergodic_cost(
    dyn,
    gain: float,
    q: float,
    r: float,
    noise: NoiseConfig,
    horizon: float,
    dt: float,
    n_paths: int,
    seed: int,
    workers: Optional[int] = None,
) -> MCEstimate:
    """Estimate ``(1/T) E int_0^T (q x^2 + r u^2) dt`` under ``u = gain * x``.

    Each path gives one time average (trapezoid rule); the estimate is their
    mean and the standard error is taken across paths. Long memory slows the
    convergence of time averages, so horizons in the hundreds are advisable.
    A state leaving the overflow guard marks the estimate as diverged.
    """
    from .sde import _step_recursion

    n = int(round(horizon / dt))
    if n < 1 or not math.isclose(n * dt, horizon, rel_tol=1e-9):
        raise ConfigurationError("horizon must be a whole number of steps")
    values = _noise_values(noise, n, horizon, n_paths, seed, workers)
    b = dyn.closed_loop(gain)
    with np.errstate(over="ignore", invalid="ignore"):
        x = _step_recursion(1.0 + b * dt, dyn.x0, np.diff(values, axis=1))
        running = (q + r * gain * gain) * x * x
        per_path = dt * (running.sum(axis=1) - 0.5 * (running[:, 0] + running[:, -1])) / horizon
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > OVERFLOW_GUARD:
        return MCEstimate(math.inf, math.inf, n_paths, int(seed), diverged=True)
    return MCEstimate.from_samples(per_path, seed)


def wasserstein1(xs, ys) -> float:
    """Exact 1-D Wasserstein-1 distance between two empirical laws.

    With equal sizes this is the mean absolute difference of the sorted
    samples. Unequal sizes are handled by integrating the difference of the
    two quantile functions exactly over their joint breakpoints.
    """
    xs = np.sort(np.asarray(xs, dtype=float).ravel())
    ys = np.sort(np.asarray(ys, dtype=float).ravel())
    if xs.size == 0 or ys.size == 0:
        raise ConfigurationError("wasserstein1 needs non-empty samples")
    if xs.size == ys.size:
        return float(np.mean(np.abs(xs - ys)))
    breaks = np.union1d(np.arange(1, xs.size + 1) / xs.size, np.arange(1, ys.size + 1) / ys.size)
    widths = np.diff(np.concatenate([[0.0], breaks]))
    mids = breaks - 0.5 * widths
    qx = xs[np.minimum((mids * xs.size).astype(int), xs.size - 1)]
    qy = ys[np.minimum((mids * ys.size).astype(int), ys.size - 1)]
    return float(np.sum(widths * np.abs(qx - qy)))


class SummaryStats(NamedTuple):
    mean: float
    variance: float
    skewness: float


def summary_stats(samples) -> SummaryStats:
    """Mean, unbiased variance and standardized third moment.

    Skewness is ``nan`` when the variance vanishes.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 3:
        raise ConfigurationError("summary_stats needs at least three samples")
    mean = float(np.mean(x))
    var = float(np.var(x, ddof=1))
    centred = x - mean
    m2 = float(np.mean(centred ** 2))
    if m2 <= 1e-300 * max(1.0, mean * mean):
        return SummaryStats(mean, var, math.nan)
    return SummaryStats(mean, var, float(np.mean(centred ** 3) / m2 ** 1.5))
