"""Zero-sum saddle points and N-player Nash equilibria in linear feedback."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .control import INFINITE_COST, _gain, closed_form_h, stationary_second_moment
from .errors import ConvergenceError, DomainError, ExistenceError, InadmissibleError

__all__ = [
    "ZeroSumSpec",
    "SaddlePoint",
    "zero_sum_saddle",
    "zero_sum_value_at",
    "NashSpec",
    "NashSolution",
    "best_response_gain",
    "nash_fixed_point",
    "nash_player_cost",
]


@dataclass(frozen=True)
class ZeroSumSpec:
    """Minimizer gain K on ``b2``, maximizer gain L on ``b3``.

    Construction fails with :class:`ExistenceError` when the saddle-gain
    quadratic has no real root.
    """

    b1: float
    b2: float
    b3: float
    q: float
    r: float
    s: float
    h: float

    def __post_init__(self):
        object.__setattr__(self, "h", closed_form_h(self.h))
        if self.b2 == 0 or self.b3 == 0:
            raise DomainError("b2 and b3 must be nonzero")
        if not (self.q > 0 and self.r > 0 and self.s > 0):
            raise DomainError("weights q, r, s must be positive")
        if self.discriminant < 0:
            raise ExistenceError(f"saddle-gain quadratic has no real root (disc={self.discriminant})")

    @property
    def coefficients(self):
        """``(A, B, C)`` of ``A L^2 + B L + C = 0``."""
        b1, b2, b3, q, r, s, h = self.b1, self.b2, self.b3, self.q, self.r, self.s, self.h
        a = s * b3 - (1 - h) * b2 * b2 * s * s / (b3 * r) - h * b3 * s
        return a, s * b1, h * b3 * q

    @property
    def discriminant(self) -> float:
        a, b, c = self.coefficients
        return b * b - 4 * a * c

    def k_of_l(self, l: float) -> float:
        return -(self.b2 * self.s / (self.b3 * self.r)) * l


@dataclass(frozen=True)
class SaddlePoint:
    k: float
    l: float
    value: float
    closed_loop: float
    roots: tuple
    selected: str


def zero_sum_value_at(k, l, spec: ZeroSumSpec) -> float:
    """Long-run cost ``q x^2 + r u^2 - s v^2``; ``math.inf`` for an unstable pair."""
    b = spec.b1 + spec.b2 * k + spec.b3 * l
    if not b < 0:
        return INFINITE_COST
    return (spec.q + spec.r * k * k - spec.s * l * l) * stationary_second_moment(b, spec.h)


def _edge_certificate(k: float, l: float, spec: ZeroSumSpec) -> bool:
    # running-cost weight at the gain where the other player's fixed gain
    # leaves the loop marginally stable
    k_edge = -(spec.b1 + spec.b3 * l) / spec.b2
    l_edge = -(spec.b1 + spec.b2 * k) / spec.b3
    return (
        spec.q + spec.r * k_edge ** 2 - spec.s * l * l > 0
        and spec.q + spec.r * k * k - spec.s * l_edge ** 2 < 0
    )


def zero_sum_saddle(spec: ZeroSumSpec) -> SaddlePoint:
    """Saddle gains from the stationarity conditions of the closed-form value.

    Both conditions give ``K = -(b2 s / (b3 r)) L``, and L solves a quadratic.
    A root is kept only if it stabilizes the loop and each player's
    one-dimensional problem tends to the right infinity at the stability
    edge (``+inf`` for the minimizer, ``-inf`` for the maximizer); the
    stationary point is then that player's global optimum. Among kept roots
    the one with the smaller ``|L|`` is selected.
    """
    a, b, c = spec.coefficients
    if a == 0:
        if b == 0:
            raise ExistenceError("degenerate saddle-gain equation")
        roots = (-c / b,)
    else:
        sq = math.sqrt(spec.discriminant)
        # numerically stable pair of roots
        qq = -0.5 * (b + math.copysign(sq, b)) if b != 0 else -0.5 * sq
        roots = tuple(sorted({qq / a, c / qq} if qq != 0 else {0.0}))
    stable, saddles = [], []
    for l in roots:
        k = spec.k_of_l(l)
        loop = spec.b1 + spec.b2 * k + spec.b3 * l
        if loop < 0:
            stable.append(l)
            if _edge_certificate(k, l, spec):
                saddles.append((abs(l), l, k, loop))
    if not stable:
        raise InadmissibleError(f"no stabilizing saddle root among {roots}")
    if not saddles:
        raise ExistenceError(
            f"stationary gains {stable} are not a saddle: a player's cost is unbounded near the stability edge"
        )
    saddles.sort()
    _, l, k, loop = saddles[0]
    selected = "unique" if len(saddles) == 1 else "smaller-|L|"
    return SaddlePoint(k, l, zero_sum_value_at(k, l, spec), loop, roots, selected)


# ---------------------------------------------------------------------------
# Non-zero-sum games
# ---------------------------------------------------------------------------

def best_response_gain(a, b2i, qi, ri, h) -> float:
    """Best response of a player facing aggregate drift ``a = b1 + sum_{j!=i} b2j Kj``."""
    h = closed_form_h(h)
    if b2i == 0:
        raise DomainError("b2i must be nonzero")
    if qi < 0 or not ri > 0:
        raise DomainError("weights need qi >= 0 and ri > 0")
    return _gain(a, b2i, qi, ri, h)


@dataclass(frozen=True)
class NashSpec:
    b1: float
    b2: Sequence[float]
    q: Sequence[float]
    r: Sequence[float]
    h: float
    n_players: int = field(default=0)

    def __post_init__(self):
        n = len(self.b2)
        if self.n_players and self.n_players != n:
            raise DomainError("n_players does not match the coefficient sequences")
        if not (len(self.q) == len(self.r) == n) or n < 1:
            raise DomainError("b2, q and r must have one entry per player")
        object.__setattr__(self, "n_players", n)
        object.__setattr__(self, "h", closed_form_h(self.h))
        for name in ("b2", "q", "r"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))


@dataclass(frozen=True)
class NashSolution:
    gains: List[float]
    residuals: List[float]
    closed_loop: float
    iterations: int


def _best_responses(spec: NashSpec, k: np.ndarray) -> np.ndarray:
    b2 = np.asarray(spec.b2)
    total = spec.b1 + float(np.dot(b2, k))
    return np.array([
        best_response_gain(total - b2[i] * k[i], b2[i], spec.q[i], spec.r[i], spec.h)
        for i in range(spec.n_players)
    ])


def nash_player_cost(i: int, gains, spec: NashSpec) -> float:
    b = spec.b1 + float(np.dot(spec.b2, gains))
    if not b < 0:
        return INFINITE_COST
    return (spec.q[i] + spec.r[i] * gains[i] ** 2) * stationary_second_moment(b, spec.h)


def nash_fixed_point(spec: NashSpec, damping: float = 0.5, tol: float = 1e-12, max_iter: int = 10_000) -> NashSolution:
    """Damped simultaneous best-response iteration from the zero profile."""
    if not 0 < damping <= 1:
        raise DomainError("damping must lie in (0, 1]")
    k = np.zeros(spec.n_players)
    residual = math.inf
    for it in range(1, max_iter + 1):
        br = _best_responses(spec, k)
        residual = float(np.max(np.abs(br - k)))
        if residual < tol:
            k = br
            break
        k = (1 - damping) * k + damping * br
    else:
        raise ConvergenceError(f"best-response iteration did not converge in {max_iter} steps", residual)
    res = np.abs(_best_responses(spec, k) - k)
    loop = spec.b1 + float(np.dot(spec.b2, k))
    if not loop < 0:
        raise InadmissibleError(f"Nash profile is not jointly stabilizing: {loop}")
    return NashSolution(k.tolist(), res.tolist(), loop, it)
