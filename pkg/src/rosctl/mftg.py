"""Finite-horizon mean-field-type games with Rosenblatt noise.

Players use ``u_i = -eta_i (x - xbar) - etabar_i xbar``. The deviation
multipliers ``lambda_i`` solve decoupled Riccati equations, the mean
multipliers ``lambdabar_i`` solve a coupled system handled by Jacobi sweeps,
and ``gamma_i`` collects the noise contribution through the kernel
functionals ``o(t)`` and ``v2(t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .errors import BlowUpError, CoefficientSignError, ConfigurationError, ConvergenceError, DomainError
from .numerics import as_hurst, quad_singular_1d, rosenblatt_constants

__all__ = [
    "MftgSpec",
    "MftgSolution",
    "calibrated_c3",
    "solve_lambda",
    "solve_lambda_bar",
    "compute_o_v2",
    "mftg_equilibrium",
    "cooperative_optimum",
]

BLOW_UP = 1e12
TimeFn = Union[float, Callable[[np.ndarray], np.ndarray]]


def _fn(v: TimeFn) -> Callable[[np.ndarray], np.ndarray]:
    if callable(v):
        return lambda t: np.broadcast_to(np.asarray(v(t), dtype=float), np.shape(t)).astype(float)
    c = float(v)
    return lambda t: np.full(np.shape(t), c)


def _uniform(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ConfigurationError("time grid needs at least two points")
    steps = np.diff(grid)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0) or steps[0] <= 0:
        raise ConfigurationError("time grid must be uniform and increasing")
    return grid


def calibrated_c3(h) -> float:
    """Kernel constant that makes the stationary ``v2`` equal ``Gamma(2H+1)/(2(-b)^2H)``."""
    h = as_hurst(h).h
    return h * (2 * h - 1) / rosenblatt_constants(h).c


def _rk4_backward(rhs, terminal: float, grid: np.ndarray, name: str) -> np.ndarray:
    """Integrate ``y' = rhs(t, y)`` from ``grid[-1]`` down to ``grid[0]``."""
    y = np.empty_like(grid)
    y[-1] = terminal
    for k in range(grid.size - 1, 0, -1):
        t1, t0 = grid[k], grid[k - 1]
        hstep = t0 - t1
        yk = y[k]
        k1 = rhs(t1, yk)
        k2 = rhs(t1 + 0.5 * hstep, yk + 0.5 * hstep * k1)
        k3 = rhs(t1 + 0.5 * hstep, yk + 0.5 * hstep * k2)
        k4 = rhs(t0, yk + hstep * k3)
        nxt = yk + hstep * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        if not math.isfinite(nxt) or nxt > BLOW_UP or nxt < 0:
            raise BlowUpError(f"{name} left the positive bounded region at t={t0:g} (value {nxt:g})")
        y[k - 1] = nxt
    return y


def _scalar(f):
    return lambda t: float(f(np.asarray(t, dtype=float)))


def solve_lambda(b1: TimeFn, b2i: TimeFn, q_i: TimeFn, r_i: TimeFn, q_terminal: float, grid) -> np.ndarray:
    """Backward RK4 for ``-lambda' = q + 2 b1 lambda - (b2^2/r) lambda^2``."""
    grid = _uniform(grid)
    if q_terminal < 0:
        raise DomainError("terminal weight must be nonnegative")
    b1f, b2f, qf, rf = (_scalar(_fn(v)) for v in (b1, b2i, q_i, r_i))

    def rhs(t, lam):
        return -(qf(t) + 2 * b1f(t) * lam - b2f(t) ** 2 / rf(t) * lam * lam)

    return _rk4_backward(rhs, float(q_terminal), grid, "lambda")


def _power(base: float, p: float) -> float:
    if base < 0:
        if float(p).is_integer():
            return base ** p
        raise CoefficientSignError(f"negative base {base:g} raised to non-integer power {p:g}")
    return base ** p


def _eta_bar(c_sum: float, lam_bar: float, rbar: float, kbar: int) -> float:
    return _power(c_sum * lam_bar / rbar, 1.0 / (2 * kbar - 1))


def _interp(grid: np.ndarray, values: np.ndarray):
    return lambda t: float(np.interp(t, grid, values))


def solve_lambda_bar(
    b1: TimeFn,
    bbar1: TimeFn,
    b2i: TimeFn,
    bbar2i: TimeFn,
    qbar_i: TimeFn,
    rbar_i: TimeFn,
    kbar: int,
    q_terminal: float,
    grid,
    others: Sequence[tuple] = (),
) -> np.ndarray:
    """Backward RK4 for the mean multiplier of one player.

    ``others`` lists ``(c_j, etabar_j)`` pairs, where ``c_j = b2j + bbar2j``
    (callable or constant) and ``etabar_j`` is that player's profile on the
    grid; it is interpolated linearly at RK4 half-steps.
    """
    grid = _uniform(grid)
    kbar = int(kbar)
    if kbar < 1:
        raise DomainError("kbar must be a positive integer")
    if q_terminal < 0:
        raise DomainError("terminal weight must be nonnegative")
    big_b = _scalar(_fn(lambda t: _fn(b1)(t) + _fn(bbar1)(t)))
    ci = _scalar(_fn(lambda t: _fn(b2i)(t) + _fn(bbar2i)(t)))
    qf, rf = _scalar(_fn(qbar_i)), _scalar(_fn(rbar_i))
    cross = [(_scalar(_fn(c)), _interp(grid, np.asarray(e, dtype=float))) for c, e in others]
    p = 2 * kbar / (2 * kbar - 1)

    def rhs(t, lb):
        coupling = sum(cj(t) * ej(t) for cj, ej in cross)
        return -(
            qf(t)
            + 2 * kbar * big_b(t) * lb
            - 2 * kbar * lb * coupling
            - (2 * kbar - 1) * rf(t) * _power(ci(t) * lb / rf(t), p)
        )

    return _rk4_backward(rhs, float(q_terminal), grid, "lambda_bar")


def compute_o_v2(b, h, c3: float, v2_init: float, grid, panels: int = 8, order: int = 24):
    """Kernel functionals along a closed-loop coefficient ``b(t)``.

    ``o(t) = c3 int_0^t (t-s)^(2H-2) exp(int_s^t b) ds`` uses the weakly
    singular rule. ``v2`` solves ``v2' = 2 b v2 + 2 c o`` exactly over each
    step for piecewise-linear ``o`` and stepwise-constant ``b``.
    """
    h = as_hurst(h).h
    grid = _uniform(grid)
    c = rosenblatt_constants(h).c
    b_vals = _fn(b)(grid) if not isinstance(b, np.ndarray) else np.asarray(b, dtype=float)
    if b_vals.shape != grid.shape:
        raise ConfigurationError("closed-loop coefficient does not match the grid")
    t0 = grid[0]
    b_int = cumulative_trapezoid(b_vals, grid, initial=0.0)
    spline = CubicSpline(grid, b_int)
    beta = 2 - 2 * h
    o = np.zeros_like(grid)
    if c3 != 0:
        for k in range(1, grid.size):
            tk = grid[k]
            bt = b_int[k]
            o[k] = c3 * quad_singular_1d(
                lambda u, bt=bt: np.exp(bt - spline(t0 + u)), tk - t0, beta, panels, order
            )
    v2 = np.empty_like(grid)
    v2[0] = v2_init
    dt = grid[1] - grid[0]
    for k in range(grid.size - 1):
        a = 2.0 * 0.5 * (b_vals[k] + b_vals[k + 1])
        e = math.exp(a * dt)
        # int_0^dt exp(a (dt - u)) (o_k + (o_{k+1} - o_k) u / dt) du
        if abs(a * dt) < 1e-8:
            w0, w1 = 0.5 * dt, 0.5 * dt
        else:
            phi1 = (e - 1.0) / a
            phi2 = (e - 1.0 - a * dt) / (a * a * dt)
            w0, w1 = phi1 - phi2, phi2
        v2[k + 1] = e * v2[k] + 2 * c * (w0 * o[k] + w1 * o[k + 1])
    return o, v2


# ---------------------------------------------------------------------------
# Equilibrium
# ---------------------------------------------------------------------------

def _as_list(v, n, name):
    if isinstance(v, (list, tuple)):
        if len(v) != n:
            raise ConfigurationError(f"{name} needs one entry per player")
        return list(v)
    return [v] * n


@dataclass
class MftgSpec:
    """Coefficients of the game; per-player fields take a scalar, a callable
    of time, or a list with one such entry per player."""

    n_players: int
    horizon: float
    n_steps: int
    b1: TimeFn
    bbar1: TimeFn
    b2: object
    bbar2: object
    q: object
    qbar: object
    r: object
    rbar: object
    q_terminal: object
    qbar_terminal: object
    kbar: object
    h: float
    var_x0: float = 0.0
    xbar0: float = 1.0
    v2_init: Optional[float] = None
    c3: Optional[float] = None
    c3_mode: str = "calibrated"
    epsilon: float = 1e-12

    def __post_init__(self):
        n = int(self.n_players)
        if n < 1 or self.horizon <= 0 or self.n_steps < 1:
            raise ConfigurationError("need n_players >= 1, horizon > 0 and n_steps >= 1")
        self.h = as_hurst(self.h).h
        for name in ("b2", "bbar2", "q", "qbar", "r", "rbar", "q_terminal", "qbar_terminal", "kbar"):
            setattr(self, name, _as_list(getattr(self, name), n, name))
        self.kbar = [int(k) for k in self.kbar]
        g = self.grid
        for i in range(n):
            for name in ("r", "rbar"):
                vals = _fn(getattr(self, name)[i])(g)
                if np.min(vals) < self.epsilon:
                    raise DomainError(f"{name}[{i}] must stay above epsilon on the grid")
            for name in ("q", "qbar"):
                if np.min(_fn(getattr(self, name)[i])(g)) < 0:
                    raise DomainError(f"{name}[{i}] must be nonnegative")
            for name in ("b2", "bbar2"):
                if np.all(_fn(getattr(self, name)[i])(g) == 0):
                    raise DomainError(f"{name}[{i}] must not vanish identically")
        if self.v2_init is None:
            self.v2_init = self.var_x0
        if self.c3 is None:
            if self.c3_mode == "calibrated":
                self.c3 = calibrated_c3(self.h)
            elif self.c3_mode == "c_tilde_h":
                self.c3 = rosenblatt_constants(self.h).c_tilde_h
            else:
                raise ConfigurationError(f"unknown c3_mode {self.c3_mode!r}")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)


@dataclass
class MftgSolution:
    t: np.ndarray
    lambda_i: List[np.ndarray]
    lambda_bar_i: List[np.ndarray]
    gamma_i: List[np.ndarray]
    eta_i: List[np.ndarray]
    eta_bar_i: List[np.ndarray]
    o: np.ndarray
    v2: np.ndarray
    equilibrium_cost_i: List[float]
    iterations: int = 0
    residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def table(self):
        """Header and rows for CSV export."""
        n = len(self.lambda_i)
        header = ["t"]
        cols = [self.t]
        for label, seq in (
            ("lambda", self.lambda_i),
            ("lambda_bar", self.lambda_bar_i),
            ("eta", self.eta_i),
            ("eta_bar", self.eta_bar_i),
        ):
            header += [f"{label}_{i}" for i in range(n)]
            cols += list(seq)
        header += ["o", "v2"]
        cols += [self.o, self.v2]
        header += [f"gamma_{i}" for i in range(n)]
        cols += list(self.gamma_i)
        return header, np.column_stack(cols)


def _gamma(integrand: np.ndarray, grid: np.ndarray) -> np.ndarray:
    # gamma(t) = int_t^T integrand, so gamma(T) = 0 exactly
    forward = cumulative_trapezoid(integrand, grid, initial=0.0)
    out = forward[-1] - forward
    out[-1] = 0.0
    return out


def mftg_equilibrium(spec: MftgSpec, tol: float = 1e-10, max_iter: int = 200) -> MftgSolution:
    """Nash equilibrium in linear state-and-mean feedback.

    ``eta_i = lambda_i b2i / r_i`` minimizes each player's quadratic ``f_i``;
    the mean multipliers are found by Jacobi sweeps until the ``etabar``
    profile moves less than ``tol``.
    """
    g = spec.grid
    n = spec.n_players
    c = rosenblatt_constants(spec.h).c
    fn = lambda v: _fn(v)(g)  # noqa: E731
    lam = [
        solve_lambda(spec.b1, spec.b2[i], spec.q[i], spec.r[i], spec.q_terminal[i], g)
        for i in range(n)
    ]
    b2 = [fn(spec.b2[i]) for i in range(n)]
    eta = [lam[i] * b2[i] / fn(spec.r[i]) for i in range(n)]
    csum = [lambda t, i=i: _fn(spec.b2[i])(t) + _fn(spec.bbar2[i])(t) for i in range(n)]
    rbar = [fn(spec.rbar[i]) for i in range(n)]

    eta_bar = [np.zeros_like(g) for _ in range(n)]
    lam_bar = [np.zeros_like(g) for _ in range(n)]
    residual = math.inf
    for it in range(1, max_iter + 1):
        new_lb = [
            solve_lambda_bar(
                spec.b1, spec.bbar1, spec.b2[i], spec.bbar2[i], spec.qbar[i], spec.rbar[i],
                spec.kbar[i], spec.qbar_terminal[i], g,
                others=[(csum[j], eta_bar[j]) for j in range(n) if j != i],
            )
            for i in range(n)
        ]
        new_eb = [
            np.array([
                _eta_bar(csum[i](np.asarray(t)), lb, rb, spec.kbar[i])
                for t, lb, rb in zip(g, new_lb[i], rbar[i])
            ])
            for i in range(n)
        ]
        residual = max(float(np.max(np.abs(a - b))) for a, b in zip(new_eb, eta_bar))
        lam_bar, eta_bar = new_lb, new_eb
        if residual < tol or n == 1:
            break
    else:
        raise ConvergenceError(f"mean-multiplier iteration did not converge in {max_iter} sweeps", residual)

    b_closed = fn(spec.b1) - sum(b2[j] * eta[j] for j in range(n))
    o, v2 = compute_o_v2(b_closed, spec.h, spec.c3, spec.v2_init, g)
    gammas, costs = [], []
    for i in range(n):
        ri = fn(spec.r[i])
        own = ri * (eta[i] - lam[i] * b2[i] / ri) ** 2 * v2
        cross = -2 * lam[i] * sum(b2[j] * eta[j] for j in range(n) if j != i) * v2
        gam = _gamma(own + cross + 2 * c * lam[i] * o, g)
        gammas.append(gam)
        k = spec.kbar[i]
        costs.append(
            float(lam[i][0] * spec.var_x0 + lam_bar[i][0] * spec.xbar0 ** (2 * k) / (2 * k) + gam[0])
        )
    return MftgSolution(g, lam, lam_bar, gammas, eta, eta_bar, o, v2, costs, it, residual,
                        meta={"c3": spec.c3, "v2_init": spec.v2_init})


def cooperative_optimum(spec: MftgSpec, weights: Sequence[float], tol: float = 1e-10) -> MftgSolution:
    """Weighted cooperative optimum with a common ``kbar``.

    Returned multipliers are the shared ``lambda``/``lambdabar`` repeated per
    player; ``equilibrium_cost_i`` holds the single weighted optimal cost.
    """
    g = spec.grid
    n = spec.n_players
    w = [float(x) for x in weights]
    if len(w) != n or min(w) <= 0:
        raise DomainError("need one positive weight per player")
    if len(set(spec.kbar)) != 1:
        raise ConfigurationError("cooperative optimum needs a common kbar")
    k = spec.kbar[0]
    c = rosenblatt_constants(spec.h).c
    fn = lambda v: _fn(v)(g)  # noqa: E731
    b2 = [_fn(spec.b2[i]) for i in range(n)]
    r = [_fn(spec.r[i]) for i in range(n)]
    q = [_fn(spec.q[i]) for i in range(n)]
    agg_q = lambda t: sum(w[i] * q[i](t) for i in range(n))  # noqa: E731
    # sum b2i^2/(w_i r_i) written as b2eff^2 / 1
    agg_b2 = lambda t: np.sqrt(sum(b2[i](t) ** 2 / (w[i] * r[i](t)) for i in range(n)))  # noqa: E731
    lam = solve_lambda(spec.b1, agg_b2, agg_q, 1.0, sum(w[i] * spec.q_terminal[i] for i in range(n)), g)

    big_b = lambda t: _fn(spec.b1)(t) + _fn(spec.bbar1)(t)  # noqa: E731
    csum = [lambda t, i=i: _fn(spec.b2[i])(t) + _fn(spec.bbar2[i])(t) for i in range(n)]
    rbar = [_fn(spec.rbar[i]) for i in range(n)]
    qbar = [_fn(spec.qbar[i]) for i in range(n)]
    p = 2 * k / (2 * k - 1)

    def rhs(t, lb):
        ta = np.asarray(t)
        total = sum(
            w[i] * float(rbar[i](ta)) * _power(float(csum[i](ta)) * lb / (w[i] * float(rbar[i](ta))), p)
            for i in range(n)
        )
        return -(sum(w[i] * float(qbar[i](ta)) for i in range(n)) + 2 * k * float(big_b(ta)) * lb - (2 * k - 1) * total)

    lam_bar = _rk4_backward(rhs, sum(w[i] * spec.qbar_terminal[i] for i in range(n)), g, "lambda_bar")
    eta = [lam * fn(spec.b2[i]) / (w[i] * fn(spec.r[i])) for i in range(n)]
    eta_bar = [
        np.array([
            _power(float(csum[i](np.asarray(t))) * lb / (w[i] * float(rbar[i](np.asarray(t)))), 1.0 / (2 * k - 1))
            for t, lb in zip(g, lam_bar)
        ])
        for i in range(n)
    ]
    b_closed = fn(spec.b1) - sum(fn(spec.b2[j]) * eta[j] for j in range(n))
    o, v2 = compute_o_v2(b_closed, spec.h, spec.c3, spec.v2_init, g)
    integrand = sum(
        w[i] * fn(spec.r[i]) * (eta[i] - lam * fn(spec.b2[i]) / (w[i] * fn(spec.r[i]))) ** 2 * v2
        for i in range(n)
    ) + 2 * c * lam * o
    gam = _gamma(integrand, g)
    cost = float(lam[0] * spec.var_x0 + lam_bar[0] * spec.xbar0 ** (2 * k) / (2 * k) + gam[0])
    return MftgSolution(g, [lam] * n, [lam_bar] * n, [gam] * n, eta, eta_bar, o, v2, [cost] * n,
                        1, 0.0, meta={"c3": spec.c3, "v2_init": spec.v2_init, "weights": w})
