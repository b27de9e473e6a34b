"""Brownian, fractional Gaussian and Rosenblatt sample paths.

Rosenblatt paths are built from second Hermite polynomials ``X**2 - 1`` of
a long-memory stationary Gaussian sequence (non-central limit theorem).
The default base sequence has autocorrelation ``sqrt(r_H(k))`` where
``r_H`` is the fGn autocovariance of index H; its squared autocorrelation
then sums to exactly ``N**(2H)`` over a window of N terms, so the generated
grid values carry the Rosenblatt covariance exactly for every upsampling
factor, and only the marginal law is approximate. The literal fGn base of
index (1+H)/2 is available with ``base="fgn"``.

A slow double Wiener-Ito integral discretisation (``method="double_integral"``)
serves as an oracle for small grids.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, GenerationError, ResourceLimitError
from .numerics import as_hurst, rosenblatt_constants

__all__ = [
    "NoiseKind",
    "SamplePath",
    "PathEnsemble",
    "path_seed",
    "fgn_autocovariance",
    "gen_brownian",
    "gen_fgn",
    "gen_rosenblatt",
    "gen_ensemble",
    "covariance_rosenblatt",
    "self_similarity_stat",
]

DOUBLE_INTEGRAL_MAX_N = 64
MIN_UPSAMPLE = 64


@dataclass(frozen=True)
class NoiseKind:
    """Tag describing which process a path samples.

    ``name`` is one of ``"brownian"``, ``"fbm"``, ``"rosenblatt"`` or
    ``"state"`` (a simulated controlled state, not a noise).
    """

    name: str
    h: Optional[float] = None

    def __post_init__(self):
        if self.name not in ("brownian", "fbm", "rosenblatt", "state"):
            raise ConfigurationError(f"unknown noise kind {self.name!r}")
        if self.name == "fbm" and not (self.h is not None and 0 < self.h < 1):
            raise DomainError("fbm kind needs 0 < h < 1")
        if self.name == "rosenblatt":
            object.__setattr__(self, "h", as_hurst(self.h).h)

    def __str__(self):
        return self.name if self.h is None else f"{self.name}({self.h:g})"

    @classmethod
    def parse(cls, text: str) -> "NoiseKind":
        text = text.strip()
        if "(" in text:
            name, rest = text.split("(", 1)
            return cls(name.strip(), float(rest.rstrip(")")))
        return cls(text)


BROWNIAN = NoiseKind("brownian")
STATE = NoiseKind("state")


@dataclass
class SamplePath:
    """A path on the uniform grid ``t0 + k*dt``, ``k = 0..n``."""

    dt: float
    values: np.ndarray
    kind: NoiseKind
    seed: Optional[int] = None
    t0: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ConfigurationError("a path needs at least two grid values")
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.kind.name != "state" and self.values[0] != 0.0:
            raise ConfigurationError("noise paths must start at the origin")

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    @property
    def horizon(self) -> float:
        return self.t0 + self.dt * self.n


@dataclass
class PathEnsemble:
    """Paths sharing one grid and kind; row ``i`` is reproducible from
    ``(base_seed, i)`` through :func:`path_seed`."""

    values: np.ndarray
    dt: float
    kind: NoiseKind
    base_seed: int
    t0: float = 0.0
    seeds: List[int] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))

    def __len__(self):
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1] - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.shape[1])

    @property
    def horizon(self) -> float:
        return self.t0 + self.dt * self.n

    @property
    def paths(self) -> List[SamplePath]:
        seeds = self.seeds or [None] * len(self)
        return [
            SamplePath(self.dt, row, self.kind, s, self.t0)
            for row, s in zip(self.values, seeds)
        ]

    def at(self, t: float) -> np.ndarray:
        """Cross-section of the ensemble at grid time ``t``."""
        return self.values[:, _grid_index(t, self.t0, self.dt, self.n)]


def _grid_index(t, t0, dt, n):
    k = (t - t0) / dt
    idx = int(round(k))
    if abs(k - idx) > 1e-9 * max(1.0, abs(k)) or not (0 <= idx <= n):
        raise DomainError(f"time {t} is not a grid point of [{t0}, {t0 + n * dt}]")
    return idx


def path_seed(base_seed: int, index: int) -> int:
    """64-bit seed of path ``index`` in an ensemble with ``base_seed``."""
    ss = np.random.SeedSequence([int(base_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# Circulant embedding
# ---------------------------------------------------------------------------

def fgn_autocovariance(k, h: float) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise at lags ``k``."""
    k = np.abs(np.asarray(k, dtype=float))
    return 0.5 * ((k + 1) ** (2 * h) - 2 * k ** (2 * h) + np.abs(k - 1) ** (2 * h))


def _base_autocorrelation(kernel: str, h: float, n: int) -> np.ndarray:
    lags = np.arange(n + 1)
    if kernel == "fgn":
        return fgn_autocovariance(lags, h)
    if kernel == "sqrt_fgn":
        return np.sqrt(fgn_autocovariance(lags, h))
    raise ConfigurationError(f"unknown base kernel {kernel!r}")


@lru_cache(maxsize=16)
def _circulant_scale(kernel: str, h: float, n: int) -> np.ndarray:
    """sqrt(eigenvalues / 2n) of the minimal circulant embedding of size 2n."""
    rho = _base_autocorrelation(kernel, h, n)
    row = np.concatenate([rho, rho[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        raise GenerationError(
            f"circulant embedding not nonnegative definite (min eigenvalue {lam.min():.3e})"
        )
    scale = np.sqrt(np.clip(lam, 0.0, None) / row.size)
    scale.setflags(write=False)
    return scale


def _stationary_gaussian(kernel: str, h: float, n: int, rngs: Sequence[np.random.Generator]):
    """One stationary Gaussian sequence of length ``n`` per generator."""
    scale = _circulant_scale(kernel, h, n)
    m = scale.size
    z = np.empty((len(rngs), m), dtype=complex)
    for row, rng in zip(z, rngs):
        g = rng.standard_normal(2 * m)
        row.real = g[:m]
        row.imag = g[m:]
    return np.fft.fft(z * scale, axis=1).real[:, :n]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def gen_brownian(n: int, dt: float, seed: int) -> SamplePath:
    rng = np.random.default_rng(seed)
    inc = rng.standard_normal(n) * math.sqrt(dt)
    return SamplePath(dt, np.concatenate([[0.0], np.cumsum(inc)]), BROWNIAN, seed)


def _fgn_rows(h, n, dt, rngs):
    return _stationary_gaussian("fgn", h, n, rngs) * dt ** h


def gen_fgn(h: float, n: int, dt: float, seed: int) -> SamplePath:
    """Fractional Brownian path from circulant-embedded fGn increments.

    ``n`` must be a power of two. Increments have autocovariance
    ``dt**(2h)/2 (|k+1|^2h - 2|k|^2h + |k-1|^2h)``.
    """
    if not 0 < h < 1:
        raise DomainError(f"fGn needs 0 < h < 1, got {h}")
    if not _is_power_of_two(n):
        raise ConfigurationError(f"n must be a power of two, got {n}")
    inc = _fgn_rows(h, n, dt, [np.random.default_rng(seed)])[0]
    return SamplePath(dt, np.concatenate([[0.0], np.cumsum(inc)]), NoiseKind("fbm", h), seed)


def _hermite_rows(h, n, horizon, rngs, upsample, base):
    dt = horizon / n
    big_n = n * upsample
    x = _stationary_gaussian(base, _base_index(base, h), big_n, rngs)
    partial = np.cumsum(x * x - 1.0, axis=1)[:, upsample - 1 :: upsample]
    if base == "sqrt_fgn":
        # variance of a window of N base terms is exactly 2 N^(2H)
        norm = dt ** h / math.sqrt(2.0 * upsample ** (2 * h))
    else:
        # fGn base of index (1+H)/2: exact window variance at t = 1
        per_unit = upsample / dt
        norm = 1.0 / math.sqrt(_hermite_window_variance(_base_index(base, h), per_unit))
    out = np.zeros((len(rngs), n + 1))
    out[:, 1:] = partial * norm
    return out


def _base_index(base, h):
    return h if base == "sqrt_fgn" else 0.5 * (1.0 + h)


def _hermite_window_variance(h0: float, window: float) -> float:
    # Var(sum_{k<N} H2(X_k)) = 2 sum_{|k|<N} (N - |k|) rho(k)^2 for unit-variance X
    big_n = int(round(window))
    k = np.arange(1, big_n)
    rho = fgn_autocovariance(k, h0)
    return 2.0 * (big_n + 2.0 * np.sum((big_n - k) * rho ** 2))


# -- double Wiener-Ito integral oracle ---------------------------------------

@lru_cache(maxsize=8)
def _double_integral_operator(h: float, n: int, horizon: float, l_factor: float, sub: int):
    """Cell-averaged kernel matrix for the oracle.

    Returns ``(gbar, width, du, scale)`` where ``gbar[u, i]`` is the average
    of ``(u - y)_+^(H/2 - 1)`` over white-noise cell ``i`` and ``scale``
    multiplies the discretised integral so that its variance at the horizon
    equals ``horizon**(2H)`` exactly.
    """
    alpha = h / 2.0 - 1.0
    h_fine = horizon / (n * sub)
    lo = -l_factor * horizon
    fine = np.linspace(-horizon, horizon, 2 * n * sub + 1)
    # geometric cells reach far into the past, where the kernel is nearly flat
    past, left, width = [], -horizon, h_fine
    while left > lo:
        width *= 1.2
        left = max(left - width, lo)
        past.append(left)
    edges = np.concatenate([np.array(past[::-1]), fine])
    a, b = edges[:-1], edges[1:]
    du = h_fine / 2.0
    u = (np.arange(2 * n * sub) + 0.5) * du
    diff_a = np.clip(u[:, None] - a[None, :], 0.0, None) ** (alpha + 1.0)
    diff_b = np.clip(u[:, None] - b[None, :], 0.0, None) ** (alpha + 1.0)
    gbar = (diff_a - diff_b) / ((alpha + 1.0) * (b - a)[None, :])
    width = b - a
    f = (gbar.T @ gbar) * du * np.sqrt(np.outer(width, width))
    c_unit = rosenblatt_constants(h).c_unit
    var_t = 2.0 * c_unit ** 2 * np.sum(f * f)
    scale = c_unit * math.sqrt(horizon ** (2 * h) / var_t)
    for arr in (gbar, width):
        arr.setflags(write=False)
    return gbar, width, du, scale


def _double_integral_rows(h, n, horizon, rngs, l_factor=1e8, sub=8):
    gbar, width, du, scale = _double_integral_operator(h, n, horizon, l_factor, sub)
    dw = np.stack([rng.standard_normal(width.size) for rng in rngs]) * np.sqrt(width)
    g = dw @ gbar.T
    # Wick product: subtract E[G(u)^2] so the diagonal carries H2 terms
    mean_sq = (gbar * gbar) @ width
    integrand = (g * g - mean_sq) * du
    per_step = integrand.reshape(len(rngs), n, -1).sum(axis=2)
    out = np.zeros((len(rngs), n + 1))
    out[:, 1:] = scale * np.cumsum(per_step, axis=1)
    return out


def _rosenblatt_rows(h, n, horizon, rngs, method, upsample, base):
    if method == "hermite":
        if upsample < MIN_UPSAMPLE:
            raise ConfigurationError(f"hermite method needs upsample >= {MIN_UPSAMPLE}")
        return _hermite_rows(h, n, horizon, rngs, upsample, base)
    if method == "double_integral":
        if n > DOUBLE_INTEGRAL_MAX_N:
            raise ResourceLimitError(
                f"double_integral oracle is limited to n <= {DOUBLE_INTEGRAL_MAX_N}, got {n}"
            )
        return _double_integral_rows(h, n, horizon, rngs)
    raise ConfigurationError(f"unknown method {method!r}")


def gen_rosenblatt(
    h,
    n: int,
    horizon: float,
    seed: int,
    method: str = "hermite",
    upsample: int = 256,
    base: str = "sqrt_fgn",
) -> SamplePath:
    """One Rosenblatt path on ``[0, horizon]`` with ``n`` steps.

    Parameters
    ----------
    h : float or HurstParam
    n : int
        Number of output steps.
    horizon : float
        Final time T.
    seed : int
    method : {"hermite", "double_integral"}
    upsample : int
        Base Gaussians aggregated per output step (hermite only, >= 64).
    base : {"sqrt_fgn", "fgn"}
        Autocorrelation of the base Gaussian sequence (hermite only).
    """
    h = as_hurst(h).h
    rows = _rosenblatt_rows(h, n, horizon, [np.random.default_rng(seed)], method, upsample, base)
    return SamplePath(horizon / n, rows[0], NoiseKind("rosenblatt", h), seed)


def _rows_for(kind: NoiseKind, n, horizon, rngs, method, upsample, base):
    dt = horizon / n
    if kind.name == "rosenblatt":
        return _rosenblatt_rows(kind.h, n, horizon, rngs, method, upsample, base)
    if kind.name == "fbm":
        inc = _fgn_rows(kind.h, n, dt, rngs)
    elif kind.name == "brownian":
        inc = np.stack([rng.standard_normal(n) for rng in rngs]) * math.sqrt(dt)
    else:
        raise ConfigurationError(f"cannot generate noise of kind {kind}")
    out = np.zeros((len(rngs), n + 1))
    np.cumsum(inc, axis=1, out=out[:, 1:])
    return out


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("ROSCTL_WORKERS", "1")))
    except ValueError:
        return 1


def gen_ensemble(
    kind,
    n: int,
    horizon: float,
    n_paths: int,
    base_seed: int,
    method: str = "hermite",
    upsample: int = 256,
    base: str = "sqrt_fgn",
    workers: Optional[int] = None,
) -> PathEnsemble:
    """Generate ``n_paths`` independent paths of one kind.

    Path ``i`` equals the single-path generator called with
    ``seed=path_seed(base_seed, i)``. Work is split in chunks that may run on
    ``workers`` threads; the merge order is fixed, so output does not depend
    on the worker count.
    """
    if isinstance(kind, str):
        kind = NoiseKind.parse(kind)
    if kind.name == "fbm" and not _is_power_of_two(n):
        raise ConfigurationError(f"n must be a power of two for fbm, got {n}")
    seeds = [path_seed(base_seed, i) for i in range(n_paths)]
    big = n * (upsample if kind.name == "rosenblatt" and method == "hermite" else 1)
    chunk = max(1, min(n_paths, (1 << 23) // max(1, 2 * big)))
    batches = [seeds[i : i + chunk] for i in range(0, n_paths, chunk)]

    def work(batch):
        rngs = [np.random.default_rng(s) for s in batch]
        return _rows_for(kind, n, horizon, rngs, method, upsample, base)

    workers = workers or default_workers()
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, batches))
    else:
        parts = [work(b) for b in batches]
    values = np.concatenate(parts, axis=0) if parts else np.zeros((0, n + 1))
    return PathEnsemble(values, horizon / n, kind, int(base_seed), seeds=seeds)


def covariance_rosenblatt(s: float, t: float, h) -> float:
    """E[R(s) R(t)] = (t^2H + s^2H - |t - s|^2H) / 2."""
    h = as_hurst(h).h
    if s < 0 or t < 0:
        raise DomainError("covariance is defined for nonnegative times")
    return 0.5 * (t ** (2 * h) + s ** (2 * h) - abs(t - s) ** (2 * h))


def self_similarity_stat(ensemble: PathEnsemble, c: float, t: Optional[float] = None) -> float:
    """Wasserstein-1 distance between the laws of R(c t) and c^H R(t).

    ``t`` defaults to ``horizon / c`` so that ``c t`` is the last grid point.
    """
    from .harness import wasserstein1

    if ensemble.kind.name != "rosenblatt":
        raise ConfigurationError("self-similarity statistic needs a Rosenblatt ensemble")
    if not c > 0:
        raise DomainError("scale factor must be positive")
    if t is None:
        t = ensemble.horizon / c
    if c * t > ensemble.horizon + 1e-12 or t <= 0:
        raise DomainError(f"c*t = {c * t} lies outside the grid")
    lhs = ensemble.at(c * t)
    rhs = c ** ensemble.kind.h * ensemble.at(t)
    return wasserstein1(lhs, rhs)
