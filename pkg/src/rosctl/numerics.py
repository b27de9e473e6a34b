"""Special functions, Rosenblatt constants and weakly singular quadrature.

Every closed-form cost in the package goes through ``gamma_fn`` and the
kernel ``|u - v|^(2H-2)`` goes through ``quad_singular_2d``, so these two
are the single source of truth for the rest of the code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "HurstParam",
    "RosenblattConstants",
    "as_hurst",
    "gamma_fn",
    "beta_fn",
    "rosenblatt_constants",
    "quad_singular_1d",
    "quad_singular_2d",
    "gauss_jacobi_01",
]


@dataclass(frozen=True)
class HurstParam:
    """Long-memory index, restricted to the open interval (1/2, 1)."""

    h: float

    def __post_init__(self):
        h = float(self.h)
        if not (0.5 < h < 1.0):
            raise DomainError(f"Hurst index must satisfy 1/2 < H < 1, got {h!r}")
        object.__setattr__(self, "h", h)

    def __float__(self):
        return self.h


def as_hurst(h) -> HurstParam:
    return h if isinstance(h, HurstParam) else HurstParam(h)


def gamma_fn(x: float) -> float:
    """Gamma function for positive real arguments."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"gamma_fn needs a positive argument, got {x!r}")
    return float(special.gamma(x))


def beta_fn(x: float, y: float) -> float:
    """Euler Beta function B(x, y) for positive arguments."""
    x, y = float(x), float(y)
    if not (x > 0 and y > 0):
        raise DomainError(f"beta_fn needs positive arguments, got ({x!r}, {y!r})")
    return float(special.beta(x, y))


@dataclass(frozen=True)
class RosenblattConstants:
    """Normalising constants attached to a Hurst index.

    Attributes
    ----------
    c_r : float
        Normaliser of the double Wiener-Ito integral (unit variance at t=1).
    c : float
        ``c_r * Gamma(H/2)**2``, the Ito-correction scale.
    c_tilde : float
        Scale of the mixed fractional-Brownian term.
    c_tilde_h : float
        Kernel constant of the second-order fractional derivative of R^H.
    c_unit : float
        Normaliser that makes the double integral with kernel
        ``(u - y)_+^(H/2 - 1)`` have unit variance at t = 1, namely
        ``sqrt(H(2H-1) / (2 B(H/2, 1-H)**2))``. It differs from ``c_r``.
    """

    h: float
    c_r: float
    c: float
    c_tilde: float
    c_tilde_h: float
    c_unit: float


@lru_cache(maxsize=256)
def _constants(h: float) -> RosenblattConstants:
    c_r = math.sqrt(2 * h * (2 * h - 1) / (2 * beta_fn(1 - h, h / 2)))
    g_half = gamma_fn(h / 2)
    c = c_r * g_half ** 2
    c_tilde = math.sqrt(
        (2 * h - 1) * gamma_fn(1 - h / 2) * g_half / ((h + 1) * gamma_fn(1 - h))
    )
    c_tilde_h = 2 * c_r * beta_fn(h / 2, 1 - h / 2) ** 2 / g_half ** 2
    c_unit = math.sqrt(h * (2 * h - 1) / (2 * beta_fn(h / 2, 1 - h) ** 2))
    return RosenblattConstants(
        h=h, c_r=c_r, c=c, c_tilde=c_tilde, c_tilde_h=c_tilde_h, c_unit=c_unit
    )


def rosenblatt_constants(h) -> RosenblattConstants:
    return _constants(as_hurst(h).h)


@lru_cache(maxsize=128)
def gauss_jacobi_01(n: int, a: float = 0.0):
    """Nodes and weights for ``int_0^1 g(z) z**a dz`` (a > -1).

    Returned arrays are read-only so the cache cannot be corrupted.
    """
    x, w = special.roots_jacobi(int(n), 0.0, float(a))
    z = 0.5 * (1.0 + x)
    w = w * 2.0 ** (-1.0 - a)
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if beta >= 1.0:
        raise DomainError(f"kernel |u-v|^(-beta) is not integrable for beta={beta} >= 1")
    if beta < 0.0:
        raise DomainError(f"kernel exponent must be nonnegative, got beta={beta}")
    return beta


def quad_singular_1d(
    f: Callable[[np.ndarray], np.ndarray],
    t: float,
    beta: float,
    panels: int = 8,
    order: int = 24,
) -> float:
    """Compute ``int_0^t f(s) (t - s)**(-beta) ds`` for smooth ``f``.

    The panel touching ``s = t`` uses Gauss-Jacobi nodes carrying the
    algebraic weight exactly; the remaining panels use Gauss-Legendre.
    ``f`` must accept a numpy array.
    """
    beta = _check_beta(beta)
    t = float(t)
    if t <= 0:
        return 0.0
    edges = np.linspace(0.0, t, panels + 1)
    zj, wj = gauss_jacobi_01(order, -beta)
    # last panel: s = t - h z, weight z^-beta
    h = edges[-1] - edges[-2]
    total = h ** (1.0 - beta) * np.dot(wj, f(t - h * zj))
    if panels > 1:
        xl, wl = np.polynomial.legendre.leggauss(order)
        a, b = edges[:-2], edges[1:-1]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        s = (mid[:, None] + half[:, None] * xl[None, :]).ravel()
        vals = f(s) * (t - s) ** (-beta)
        total += np.dot(np.repeat(half, order) * np.tile(wl, panels - 1), vals)
    return float(total)


def _triangle(w_outer, w_inner, t, beta, panels, order):
    # int_0^t w_outer(u) u^(1-beta) S(u) du,  S(u) = int_0^1 w_inner(u(1-z)) z^-beta dz
    zj, wj = gauss_jacobi_01(order, -beta)

    def smooth_part(u):
        inner = w_inner(u[:, None] * (1.0 - zj[None, :]))
        return w_outer(u) * (inner @ wj)

    edges = np.linspace(0.0, t, panels + 1)
    h = edges[1]
    # first panel carries u^(1-beta) exactly
    zo, wo = gauss_jacobi_01(order, 1.0 - beta)
    total = h ** (2.0 - beta) * np.dot(wo, smooth_part(h * zo))
    if panels > 1:
        xl, wl = np.polynomial.legendre.leggauss(order)
        a, b = edges[1:-1], edges[2:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        u = (mid[:, None] + half[:, None] * xl[None, :]).ravel()
        vals = smooth_part(u) * u ** (1.0 - beta)
        total += np.dot(np.repeat(half, order) * np.tile(wl, panels - 1), vals)
    return total


def _unit(x):
    return np.ones_like(x)


def quad_singular_2d(
    beta: float,
    t: float,
    w1: Optional[Callable] = None,
    w2: Optional[Callable] = None,
    panels: int = 4,
    order: int = 24,
) -> float:
    """Compute ``int_0^t int_0^t w1(u) w2(v) |u - v|**(-beta) du dv``.

    The square is split along its diagonal and each triangle is mapped by a
    Duffy substitution so the singularity becomes an algebraic endpoint
    weight, integrated exactly by Gauss-Jacobi rules. Unit weights give
    ``2 t**(2-beta) / ((1-beta)(2-beta))`` to rounding error.

    Parameters
    ----------
    beta : float
        Kernel exponent in [0, 1); for the Rosenblatt kernel ``beta = 2 - 2H``.
    t : float
        Side of the square.
    w1, w2 : callable, optional
        Vectorised weight functions (default: 1).
    panels, order : int
        Outer panel count and Gauss order per panel; raising either refines.
    """
    beta = _check_beta(beta)
    t = float(t)
    if t <= 0:
        return 0.0
    w1 = w1 or _unit
    w2 = w2 or _unit
    # lower triangle (v < u) and upper triangle (u < v)
    lower = _triangle(w1, w2, t, beta, panels, order)
    upper = lower if w1 is w2 else _triangle(w2, w1, t, beta, panels, order)
    return float(lower + upper)
