"""Ergodic linear-quadratic control with Rosenblatt noise.

All costs are long-run averages of ``q x^2 + r u^2`` for stationary linear
feedback ``u = K x``. Under Rosenblatt noise of index H the stationary second
moment of a stable closed loop ``dx = b x dt + dR`` is
``Gamma(2H+1) / (2 (-b)^(2H))``, which gives every formula below.

The closed forms accept ``h`` in [1/2, 1); 1/2 is the Brownian limit (the
same gain also solves the deterministic problem).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List

from .errors import DomainError, InadmissibleError
from .numerics import HurstParam, gamma_fn

__all__ = [
    "ErgodicSolution",
    "MfErgodicSolution",
    "SurrogateResult",
    "closed_form_h",
    "optimal_gain",
    "ergodic_cost",
    "ergodic_cost_riccati_form",
    "riccati_residual",
    "stationary_second_moment",
    "surrogate_gain",
    "surrogate_sweep",
    "variance_aware_gains",
    "mean_part_cost",
]

INFINITE_COST = math.inf


def closed_form_h(h) -> float:
    """Validate an index for the closed forms: 1/2 <= h < 1."""
    h = float(h.h if isinstance(h, HurstParam) else h)
    if not 0.5 <= h < 1.0:
        raise DomainError(f"closed forms need 1/2 <= H < 1, got {h!r}")
    return h


def _check_weights(b2, q, r):
    if b2 == 0:
        raise DomainError("b2 must be nonzero")
    if q < 0 or not r > 0:
        raise DomainError("weights need q >= 0 and r > 0")


def _gain(b1, b2, q, r, h):
    root = math.sqrt(b1 * b1 + 4 * h * (1 - h) * b2 * b2 * q / r)
    return -(b1 + root) / (2 * b2 * (1 - h))


@dataclass(frozen=True)
class ErgodicSolution:
    gain: float
    cost: float
    riccati_p: float
    closed_loop: float
    cost_riccati_form: float


def stationary_second_moment(b: float, h) -> float:
    """Long-run ``E x^2`` of ``dx = b x dt + dR`` for ``b < 0``."""
    h = closed_form_h(h)
    if not b < 0:
        raise DomainError(f"closed loop must be stable (b < 0), got {b}")
    return gamma_fn(2 * h + 1) / (2 * (-b) ** (2 * h))


def ergodic_cost(k, b1, b2, q, r, h) -> float:
    """Long-run average cost of ``u = k x``; ``math.inf`` if ``b1 + b2 k >= 0``."""
    h = closed_form_h(h)
    b = b1 + b2 * k
    if not b < 0:
        return INFINITE_COST
    return (q + r * k * k) * stationary_second_moment(b, h)


def ergodic_cost_riccati_form(k, b1, b2, q, r, h) -> float:
    """``Gamma(2H) (-r k / b2) / (-(b1 + b2 k))^(2H-1)``, equal to the cost at the optimum."""
    h = closed_form_h(h)
    b = b1 + b2 * k
    if not b < 0:
        return INFINITE_COST
    return gamma_fn(2 * h) * (-r * k / b2) / (-b) ** (2 * h - 1)


def riccati_residual(p, b1, b2, q, r, h) -> float:
    h = closed_form_h(h)
    return (1 - h) * (b2 * b2 / r) * p * p + b1 * p - h * q


def optimal_gain(b1, b2, q, r, h) -> ErgodicSolution:
    """Optimal stationary feedback gain and its ergodic cost.

    The Riccati multiplier is ``P = r K / b2``, the root of
    ``(1-H)(b2^2/r) P^2 + b1 P - H q = 0`` matched to the stabilizing gain.
    """
    h = closed_form_h(h)
    _check_weights(b2, q, r)
    k = _gain(b1, b2, q, r, h)
    b = b1 + b2 * k
    if not b < 0:
        raise InadmissibleError(f"optimal closed loop is not stable: {b}")
    return ErgodicSolution(
        gain=k,
        cost=ergodic_cost(k, b1, b2, q, r, h),
        riccati_p=r * k / b2,
        closed_loop=b,
        cost_riccati_form=ergodic_cost_riccati_form(k, b1, b2, q, r, h),
    )


@dataclass(frozen=True)
class SurrogateResult:
    h_assumed: float
    gain: float
    true_cost: float
    optimal_cost: float
    gap: float


def surrogate_gain(h_true, h_assumed, b1, b2, q, r) -> SurrogateResult:
    """Cost of designing the gain for index ``h_assumed`` when the truth is ``h_true``."""
    h_true = closed_form_h(h_true)
    h_assumed = closed_form_h(h_assumed)
    best = optimal_gain(b1, b2, q, r, h_true)
    k = optimal_gain(b1, b2, q, r, h_assumed).gain
    true_cost = ergodic_cost(k, b1, b2, q, r, h_true)
    return SurrogateResult(h_assumed, k, true_cost, best.cost, true_cost - best.cost)


def surrogate_sweep(h_true, grid: Iterable[float], b1, b2, q, r) -> List[SurrogateResult]:
    return [surrogate_gain(h_true, ha, b1, b2, q, r) for ha in grid]


@dataclass(frozen=True)
class MfErgodicSolution:
    gain_dev: float
    gain_mean: float
    cost: float
    cost_dev: float
    cost_mean: float
    stability_dev: float
    stability_mean: float


def mean_part_cost(k_bar, b1, b2, bbar0, bbar1, bbar2, qbar, rbar) -> float:
    """Stationary cost of the mean dynamics ``(qbar + rbar K^2) bbar0^2 / (B + C K)^2``."""
    b_mean = b1 + bbar1 + (b2 + bbar2) * k_bar
    if not b_mean < 0:
        return INFINITE_COST
    return (qbar + rbar * k_bar * k_bar) * bbar0 ** 2 / b_mean ** 2


def variance_aware_gains(b1, b2, bbar0, bbar1, bbar2, q, qbar, r, rbar, h) -> MfErgodicSolution:
    """Gains for the state-deviation and state-mean parts of a mean-field cost.

    The deviation gain is the single-controller optimum. The mean gain is
    ``(b2 + bbar2) qbar / (rbar (b1 + bbar1))``; a non-stabilizing mean gain
    raises :class:`InadmissibleError`.
    """
    h = closed_form_h(h)
    big_b, big_c = b1 + bbar1, b2 + bbar2
    if big_b == 0:
        raise DomainError("b1 + bbar1 must be nonzero")
    if qbar < 0 or not rbar > 0:
        raise DomainError("mean weights need qbar >= 0 and rbar > 0")
    dev = optimal_gain(b1, b2, q, r, h)
    k_bar = big_c * qbar / (rbar * big_b)
    stab_mean = big_b + big_c * k_bar
    if not stab_mean < 0:
        raise InadmissibleError(
            f"mean closed loop b1+bbar1+(b2+bbar2)K = {stab_mean} is not negative"
        )
    cost_mean = bbar0 ** 2 * qbar * rbar / (big_b ** 2 * rbar + big_c ** 2 * qbar)
    return MfErgodicSolution(
        gain_dev=dev.gain,
        gain_mean=k_bar,
        cost=dev.cost_riccati_form + cost_mean,
        cost_dev=dev.cost_riccati_form,
        cost_mean=cost_mean,
        stability_dev=dev.closed_loop,
        stability_mean=stab_mean,
    )
