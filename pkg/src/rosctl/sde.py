"""Linear state dynamics driven by generated noise paths."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigurationError, DomainError
from .noise import STATE, PathEnsemble, SamplePath
from .numerics import as_hurst, rosenblatt_constants

__all__ = [
    "LinearDynamics",
    "CoeffTriple",
    "ScalarField",
    "simulate_linear_sde",
    "rosenblatt_ou_exact",
    "ito_transform_coeffs",
]

PathLike = Union[SamplePath, PathEnsemble]


@dataclass(frozen=True)
class LinearDynamics:
    """Coefficients of ``dx = (b1 x + b2 u + b3 v) dt + mean-field terms + dR``."""

    b1: float
    b2: float = 1.0
    b3: float = 0.0
    bbar0: float = 0.0
    bbar1: float = 0.0
    bbar2: float = 0.0
    x0: float = 0.0

    def closed_loop(self, gain: float) -> float:
        if gain != 0 and self.b2 == 0:
            raise ConfigurationError("b2 must be nonzero when a controller acts")
        return self.b1 + self.b2 * gain


def _step_recursion(coef: float, x0, forcing: np.ndarray) -> np.ndarray:
    """Solve ``x[k+1] = coef x[k] + forcing[k]`` along the last axis."""
    forcing = np.atleast_2d(forcing)
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), forcing.shape[:-1])
    body, _ = lfilter([1.0], [1.0, -coef], forcing, axis=-1, zi=(coef * x0)[..., None])
    return np.concatenate([x0[..., None], body], axis=-1)


def _wrap(like: PathLike, values: np.ndarray, kind=STATE) -> PathLike:
    if isinstance(like, PathEnsemble):
        return PathEnsemble(values, like.dt, kind, like.base_seed, like.t0, list(like.seeds))
    return SamplePath(like.dt, values[0], kind, like.seed, like.t0)


def _check_grid(noise: PathLike, dt):
    if dt is not None and not math.isclose(dt, noise.dt, rel_tol=1e-12, abs_tol=0.0):
        raise ConfigurationError(f"simulation step {dt} does not match noise grid {noise.dt}")


def simulate_linear_sde(dyn: LinearDynamics, gain: float, noise: PathLike, dt=None) -> PathLike:
    """Euler scheme ``x[k+1] = x[k] + b x[k] dt + (N[k+1] - N[k])`` with ``b = b1 + b2*gain``.

    Accepts a single path or an ensemble and returns the matching type
    tagged as a state path.
    """
    _check_grid(noise, dt)
    b = dyn.closed_loop(gain)
    if not math.isfinite(b):
        raise ConfigurationError("closed-loop coefficient is not finite")
    values = np.atleast_2d(noise.values)
    x = _step_recursion(1.0 + b * noise.dt, dyn.x0, np.diff(values, axis=-1))
    return _wrap(noise, x)


def rosenblatt_ou_exact(theta: float, m: float, sigma: float, x0: float, noise: PathLike) -> PathLike:
    """Variation-of-constants solution of ``dx = theta (m - x) dt + sigma dN``.

    The convolution is integrated by parts pathwise,
    ``int_0^t e^{-theta(t-s)} dN(s) = N(t) - theta int_0^t e^{-theta(t-s)} N(s) ds``,
    and the Riemann integral uses the trapezoid rule with the exponential
    factor carried exactly from step to step.
    """
    if noise.kind.name not in ("rosenblatt", "fbm", "brownian"):
        raise ConfigurationError(f"expected a noise path, got kind {noise.kind}")
    r = np.atleast_2d(noise.values)
    t = noise.times
    decay = np.exp(-theta * t)
    det = decay * x0 + (1.0 - decay) * m
    if theta == 0 or sigma == 0:
        x = det + sigma * r
        return _wrap(noise, x)
    e = math.exp(-theta * noise.dt)
    forcing = 0.5 * noise.dt * (e * r[:, :-1] + r[:, 1:])
    a = _step_recursion(e, 0.0, forcing)
    return _wrap(noise, det + sigma * (r - theta * a))


# ---------------------------------------------------------------------------
# Coefficient transformation under a smooth change of variable
# ---------------------------------------------------------------------------

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CoeffTriple:
    """Drift, mixed-fBm and Rosenblatt coefficients.

    Each entry is either a callable ``(t, x) -> value`` or an array already
    evaluated on a grid.
    """

    d1: Union[Field, np.ndarray]
    d2: Union[Field, np.ndarray]
    d3: Union[Field, np.ndarray]

    def on_grid(self, t: np.ndarray, x: np.ndarray):
        def ev(d):
            val = d(t, x) if callable(d) else d
            return np.broadcast_to(np.asarray(val, dtype=float), np.shape(x))

        return ev(self.d1), ev(self.d2), ev(self.d3)


@dataclass(frozen=True)
class ScalarField:
    """A function ``f(t, x)`` with the partial derivatives the transformation needs."""

    f: Field
    f_t: Field
    f_x: Field
    f_xx: Field
    f_xxx: Field

    @classmethod
    def polynomial(cls, coeffs) -> "ScalarField":
        """Time-independent polynomial ``sum coeffs[k] x**k``."""
        p = np.polynomial.Polynomial(coeffs)
        d1, d2, d3 = p.deriv(1), p.deriv(2), p.deriv(3)

        def zero(t, x):
            return np.zeros_like(np.asarray(x, dtype=float))

        return cls(
            f=lambda t, x: p(x),
            f_t=zero,
            f_x=lambda t, x: d1(x),
            f_xx=lambda t, x: d2(x),
            f_xxx=lambda t, x: d3(x),
        )


def ito_transform_coeffs(
    f: ScalarField,
    d: CoeffTriple,
    grad_x: Callable[[np.ndarray], np.ndarray],
    grad2_x: Callable[[np.ndarray], np.ndarray],
    h,
    state: SamplePath,
) -> CoeffTriple:
    """Coefficients of ``y = f(t, x)`` when ``x`` has coefficients ``d``.

    ``grad_x(t)`` and ``grad2_x(t)`` are the first and second order fractional
    derivatives of the state at ``t`` (closed forms supplied by the caller).
    The returned triple holds arrays on the state grid.
    """
    c = rosenblatt_constants(as_hurst(h)).c
    t = state.times
    x = state.values
    d1, d2, d3 = d.on_grid(t, x)
    fx, fxx, fxxx = f.f_x(t, x), f.f_xx(t, x), f.f_xxx(t, x)
    g1 = np.asarray(grad_x(t), dtype=float)
    g2 = np.asarray(grad2_x(t), dtype=float)
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
        raise DomainError("fractional derivative values must be finite on the grid")
    dt1 = (
        f.f_t(t, x)
        + fx * d1
        + 2 * c * fxx * g1 * d2
        + c * fxx * g2 * d3
        + c * fxxx * g1 ** 2 * d3
    )
    dt2 = fx * d2 + fxx * g1 * d3
    dt3 = fx * d3
    return CoeffTriple(*(np.broadcast_to(v, x.shape).astype(float) for v in (dt1, dt2, dt3)))
