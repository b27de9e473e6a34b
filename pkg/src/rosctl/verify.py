"""Acceptance checks, shared by the ``verify`` command and the test suite.

Every check uses fixed seeds and returns a :class:`Check` with the measured
quantities, so a failure is reported with its numbers rather than hidden.
"""
from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import control, cournot, diffusion, games, mftg, predict
from .harness import NoiseConfig, estimate_ergodic_cost, wasserstein1
from .noise import covariance_rosenblatt, gen_ensemble, self_similarity_stat
from .sde import LinearDynamics

SEED = 0
HS = (0.6, 0.75, 0.9)


@dataclass
class Check:
    number: int
    title: str
    passed: bool
    details: Dict[str, object] = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:>2}. {self.title}"


@lru_cache(maxsize=4)
def _hermite_ensemble(h: float, workers: Optional[int] = None):
    # grid 0, 0.25, ..., 2 covers R(0.5), R(1) and R(2)
    return gen_ensemble(f"rosenblatt({h})", 8, 2.0, 10_000, SEED, upsample=256, workers=workers)


def check_normalization(workers=None) -> Check:
    d = {}
    for h in HS:
        d[f"var_R1_H{h}"] = float(np.var(_hermite_ensemble(h, workers).at(1.0), ddof=1))
    ok = all(abs(v - 1.0) <= 0.05 for v in d.values())
    return Check(1, "Var(R(1)) = 1 +- 0.05 (10^4 hermite paths)", ok, d)


def check_covariance(workers=None) -> Check:
    d, ok = {}, True
    for h in HS:
        ens = _hermite_ensemble(h, workers)
        a, b = ens.at(1.0), ens.at(2.0)
        cov = float(np.mean(a * b) - np.mean(a) * np.mean(b))
        target = covariance_rosenblatt(1.0, 2.0, h)
        d[f"cov_H{h}"] = cov
        d[f"target_H{h}"] = target
        ok &= abs(cov / target - 1) <= 0.05
    return Check(2, "Cov(R(1), R(2)) = 2^(2H-1) +- 5%", bool(ok), d)


def check_self_similarity(workers=None) -> Check:
    d = {f"w1_H{h}": self_similarity_stat(_hermite_ensemble(h, workers), 2.0, 0.5) for h in HS}
    return Check(3, "W1(R(2t), 2^H R(t)) < 0.05 at t = 0.5", all(v < 0.05 for v in d.values()), d)


def check_methods(workers=None) -> Check:
    d = {}
    for h in HS:
        herm = gen_ensemble(f"rosenblatt({h})", 32, 1.0, 5000, SEED, workers=workers).at(1.0)
        dbl = gen_ensemble(f"rosenblatt({h})", 32, 1.0, 5000, SEED + 1, method="double_integral", workers=workers).at(1.0)
        d[f"w1_H{h}"] = wasserstein1(herm, dbl)
    return Check(4, "hermite vs double-integral W1 < 0.08 at t = 1", all(v < 0.08 for v in d.values()), d)


def _random_lq(rng):
    return dict(
        b1=rng.uniform(-2, 2),
        b2=rng.choice([-1, 1]) * rng.uniform(0.5, 2),
        q=rng.uniform(0.5, 2),
        r=rng.uniform(0.5, 2),
    )


def check_ergodic(workers=None, mc: bool = True) -> Check:
    rng = np.random.default_rng(SEED)
    d = {"argmin_ok": True, "forms_rel": 0.0, "riccati": 0.0, "gain_vs_p": 0.0}
    for _ in range(10):
        p = _random_lq(rng)
        h = rng.uniform(0.55, 0.95)
        sol = control.optimal_gain(p["b1"], p["b2"], p["q"], p["r"], h)
        half = 0.5 * abs(sol.gain) + 0.5
        grid = np.linspace(sol.gain - half, sol.gain + half, 1000)
        costs = np.array([control.ergodic_cost(k, p["b1"], p["b2"], p["q"], p["r"], h) for k in grid])
        step = grid[1] - grid[0]
        d["argmin_ok"] &= bool(abs(grid[int(np.argmin(costs))] - sol.gain) < step)
        d["forms_rel"] = max(d["forms_rel"], abs(sol.cost - sol.cost_riccati_form) / sol.cost)
        d["riccati"] = max(d["riccati"], abs(control.riccati_residual(sol.riccati_p, p["b1"], p["b2"], p["q"], p["r"], h)))
        d["gain_vs_p"] = max(d["gain_vs_p"], abs(sol.gain - p["b2"] * sol.riccati_p / p["r"]))
    ok = d["argmin_ok"] and d["forms_rel"] < 1e-10 and d["riccati"] < 1e-10 and d["gain_vs_p"] < 1e-10
    if mc:
        sol = control.optimal_gain(1, 1, 1, 1, 0.75)
        est = estimate_ergodic_cost(
            LinearDynamics(b1=1.0, b2=1.0), sol.gain, 1.0, 1.0, NoiseConfig.rosenblatt(0.75),
            horizon=200.0, dt=2.0 ** -7, n_paths=200, seed=SEED, workers=workers,
        )
        d["mc_cost"], d["mc_se"], d["closed_form"] = est.value, est.std_error, sol.cost
        d["mc_ratio"] = est.value / sol.cost
        ok &= abs(d["mc_ratio"] - 1) <= 0.10
    return Check(5, "ergodic control: argmin, cost forms, Riccati link, Monte Carlo", bool(ok), d)


def _h_grid(spec: str) -> List[float]:
    lo, hi, step = (float(v) for v in spec.split(":"))
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 12) for i in range(n + 1)]


def check_suboptimality(workers=None) -> Check:
    rng = np.random.default_rng(SEED)
    grid = _h_grid("0.5:0.95:0.05")
    d = {"min_gap": math.inf, "unique_zero": True}
    for _ in range(5):
        p = _random_lq(rng)
        h_true = float(rng.choice(grid[1:]))
        rows = control.surrogate_sweep(h_true, grid, p["b1"], p["b2"], p["q"], p["r"])
        zeros = [r.h_assumed for r in rows if r.gap <= 0]
        d["min_gap"] = min(d["min_gap"], min(r.gap for r in rows))
        d["unique_zero"] &= zeros == [h_true]
    ok = d["min_gap"] >= 0 and d["unique_zero"]
    return Check(6, "suboptimality gap >= 0 with a unique zero at the true H", bool(ok), d)


def check_variance_aware(workers=None) -> Check:
    rng = np.random.default_rng(SEED)
    d = {"gain_err": 0.0, "cost_rel": 0.0}
    for _ in range(5):
        b1, b2 = rng.uniform(-1, 1), rng.uniform(0.5, 2)
        bb0, bb1, bb2 = rng.uniform(0.5, 2), rng.uniform(-3, -1.5), rng.uniform(-0.3, 0.3)
        qb, rb = rng.uniform(0.5, 2), rng.uniform(0.5, 2)
        sol = control.variance_aware_gains(b1, b2, bb0, bb1, bb2, 1.0, qb, 1.0, rb, 0.75)
        ld = np.longdouble
        f = lambda k: control.mean_part_cost(ld(k), ld(b1), ld(b2), ld(bb0), ld(bb1), ld(bb2), ld(qb), ld(rb))  # noqa: E731
        # bracket on the stable side of the mean closed loop
        edge = -(b1 + bb1) / (b2 + bb2)
        lo, hi = sol.gain_mean - 2.0, sol.gain_mean + 2.0
        if b2 + bb2 > 0:
            hi = min(hi, edge - 1e-9)
        else:
            lo = max(lo, edge + 1e-9)
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
        d["gain_err"] = max(d["gain_err"], abs(float(res.x) - sol.gain_mean))
        direct = control.mean_part_cost(sol.gain_mean, b1, b2, bb0, bb1, bb2, qb, rb)
        d["cost_rel"] = max(d["cost_rel"], abs(direct - sol.cost_mean) / sol.cost_mean)
    ok = d["gain_err"] < 1e-8 and d["cost_rel"] < 1e-10
    return Check(7, "variance-aware mean gain and mean-part cost", bool(ok), d)


def check_zero_sum(workers=None) -> Check:
    spec = games.ZeroSumSpec(-1, 1, 1, 1, 1, 2, 0.75)
    sp = games.zero_sum_saddle(spec)
    deltas = np.linspace(-0.5, 0.5, 1001)
    v = sp.value
    min_side = min(games.zero_sum_value_at(sp.k + e, sp.l, spec) for e in deltas) - v
    max_side = max(
        val for val in (games.zero_sum_value_at(sp.k, sp.l + e, spec) for e in deltas) if math.isfinite(val)
    ) - v
    exact = sp.k == -(spec.b2 * spec.s / (spec.b3 * spec.r)) * sp.l
    big = games.zero_sum_saddle(games.ZeroSumSpec(-1, 1, 1, 1, 1, 1e4, 0.75))
    single = control.optimal_gain(-1, 1, 1, 1, 0.75).gain
    d = {
        "k": sp.k, "l": sp.l, "value": v,
        "min_improvement_minimizer": -min_side, "max_improvement_maximizer": max_side,
        "k_of_l_exact": exact, "large_s_gap": abs(big.k - single),
    }
    ok = min_side >= -1e-9 and max_side <= 1e-9 and exact and d["large_s_gap"] < 1e-3
    return Check(8, "zero-sum saddle, gain relation and large-s limit", bool(ok), d)


def check_nash(workers=None) -> Check:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for n in (2, 3, 5):
        spec = games.NashSpec(
            rng.uniform(-1, 1), list(rng.uniform(0.5, 2, n)), list(rng.uniform(0.5, 2, n)),
            list(rng.uniform(0.5, 2, n)), 0.75,
        )
        worst = max(worst, max(games.nash_fixed_point(spec).residuals))
    one = games.nash_fixed_point(games.NashSpec(1, [1], [1], [1], 0.75)).gains[0]
    ref = control.optimal_gain(1, 1, 1, 1, 0.75).gain
    d = {"max_residual": worst, "n1_gain": one, "single_gain": ref, "n1_rel": abs(one - ref) / abs(ref)}
    return Check(9, "Nash residual and one-player consistency", worst < 1e-10 and d["n1_rel"] <= 1e-12, d)


def _mftg_spec(**kw):
    base = dict(
        n_players=2, horizon=1.0, n_steps=200, b1=0.5, bbar1=-0.2, b2=1.0, bbar2=0.2,
        q=1.0, qbar=0.5, r=1.0, rbar=1.0, q_terminal=1.0, qbar_terminal=0.5, kbar=1, h=0.75,
    )
    base.update(kw)
    return mftg.MftgSpec(**base)


def check_mftg(workers=None) -> Check:
    grid = np.linspace(0.0, 2.0, 201)
    fine = np.linspace(0.0, 2.0, 200 * 16 + 1)
    lam = mftg.solve_lambda(0.5, 1.0, 1.0, 1.0, 1.0, grid)
    lam_ref = mftg.solve_lambda(0.5, 1.0, 1.0, 1.0, 1.0, fine)[::16]
    h = 0.75
    long_grid = np.linspace(0.0, 40.0, 4001)
    _, v2 = mftg.compute_o_v2(-1.0, h, mftg.calibrated_c3(h), 0.0, long_grid)
    target = control.stationary_second_moment(-1.0, h)
    sol = mftg.mftg_equilibrium(_mftg_spec())
    quiet = mftg.mftg_equilibrium(_mftg_spec(c3=0.0))
    d = {
        "lambda_ref_err": float(np.max(np.abs(lam - lam_ref))),
        "v2_stationary_rel": abs(v2[-1] - target) / target,
        "gamma_T": [float(g[-1]) for g in sol.gamma_i],
        "noise_off_gamma_max": max(float(np.max(np.abs(g))) for g in quiet.gamma_i),
    }
    ok = (
        d["lambda_ref_err"] < 1e-8
        and d["v2_stationary_rel"] < 1e-6
        and all(g == 0.0 for g in d["gamma_T"])
        and d["noise_off_gamma_max"] == 0.0
    )
    return Check(10, "MFTG lambda accuracy, stationary v2, gamma terminal and noise-off", bool(ok), d)


def check_cournot(workers=None) -> Check:
    spec = cournot.CournotSpec(5.0, 5.0, (1.0, 1.5, 0.5), (1.0, 2.0, 0.8), (0.5, 1.0, 0.3), 1.0, 0.75)
    eta = cournot.eta_star_fixed_point(spec)
    bar = cournot.bar_market_equilibrium(spec)
    pos0 = cournot.price_of_simplicity(5.0, 1.0, 1.2, 0.0)
    base = cournot.price_of_simplicity(5.0, 1.0, 1.2, 0.7)
    k = 3.0
    joint = cournot.price_of_simplicity(5.0 * k, 1.0 * k, 1.2 * k, 0.7 * k)
    p = np.random.default_rng(SEED).normal(5.0, 1.0, 1000)
    s1 = cournot.mfg_baseline(spec, p)
    s2 = cournot.mfg_baseline(cournot.CournotSpec(5.0, 5.0, spec.c, spec.r, (9.0, 0.0, 4.0), 1.0, 0.75), p)
    invariant = all(np.array_equal(a, b) for a, b in zip(s1.strategies, s2.strategies))
    d = {
        "foc_max": max(cournot.foc_residual(eta, spec)),
        "p_bar_residual": bar.consistency_residual,
        "pos_rbar0": pos0,
        "pos_scaled_ratio": joint / base,
        "mfg_invariant": invariant,
    }
    ok = (
        d["foc_max"] < 1e-10
        and d["p_bar_residual"] <= 1e-12
        and pos0 == 0.0
        and abs(d["pos_scaled_ratio"] - k) < 1e-12 * k
        and invariant
    )
    return Check(11, "Cournot FOC, mean price, price of simplicity, MFG invariance", bool(ok), d)


def check_diffusion(workers=None) -> Check:
    d = {}
    spec = diffusion.DiffusionSpec(1.0, 1.0, 0.0, 1.0)
    mean, var = diffusion.ou_forward_terminal_check(spec, 100_000, SEED)
    d["ou_mean"], d["ou_mean_se"], d["ou_var"], d["ou_var_se"] = mean.value, mean.std_error, var.value, var.std_error
    ok = mean.within(0.0) and var.within(1.0)
    fspec = diffusion.DiffusionSpec(1.0, 1.0, 0.3, 1.0, h=0.75, x0=0.5, driver="fbm")
    rel = max(
        abs(diffusion.frac_forward_mv(t, fspec)[1] - diffusion.frac_v2_quadrature(t, fspec)) / diffusion.frac_forward_mv(t, fspec)[1]
        for t in np.linspace(0.1, 1.0, 10)
    )
    d["v2_quadrature_rel"] = rel
    ok &= rel <= 1e-6
    rev = diffusion.frac_reverse_sample(fspec, 0.5, 256, 10_000, SEED)
    m_half = diffusion.frac_forward_mv(0.5, fspec)[0]
    se = float(np.std(rev.samples, ddof=1) / math.sqrt(rev.samples.size))
    d["reverse_mean"], d["reverse_se"], d["forward_mean"] = float(rev.samples.mean()), se, m_half
    ok &= abs(d["reverse_mean"] - m_half) <= 3 * se
    rspec = diffusion.DiffusionSpec(1.0, 1.0, 0.0, 1.0, h=0.75, driver="rosenblatt")
    sd = diffusion.rosenblatt_superdiffusion_sample(rspec, 10_000, SEED, n_steps=128, workers=workers)
    d["super_var"], d["super_formula"], d["super_skew"] = sd.variance.value, sd.variance_formula, sd.stats.skewness
    ok &= abs(sd.variance.value / sd.variance_formula - 1) <= 0.05
    w99 = diffusion.chi_square_limit_check(1.0, 0.0, 1.0, 0.0, 1.0, 0.99, 10_000, SEED, n_steps=128, workers=workers)
    w95 = diffusion.chi_square_limit_check(1.0, 0.0, 1.0, 0.0, 1.0, 0.95, 10_000, SEED, n_steps=128, workers=workers)
    d["chi2_w1_099"], d["chi2_w1_095"] = w99, w95
    ok &= w99 < 0.05 and w99 < w95
    return Check(12, "diffusion: OU matching, fractional v2, reverse mean, super-diffusion, chi-square limit", bool(ok), d)


def check_prediction(workers=None) -> Check:
    spec0 = predict.PredictorSpec(0.0, 1.0, 1.0, 0.75)
    analytic = (1.5 ** 0.5 - 0.5 ** 0.5) / 0.5
    f_rel = abs(predict.f_exp(0.5, spec0) - analytic) / analytic
    spec1 = predict.PredictorSpec(1.0, 1.0, 1.0, 0.75)
    g = [predict.g_exp(0.5, spec1, grid=n) for n in (128, 256)]
    g_rel = abs(g[1] - g[0]) / abs(g[1])
    mse = predict.predictor_mse(predict.PredictorSpec(-1.0, 1.0, 1.0, 0.75), 1000, SEED, workers=workers)
    d = {
        "f_exp_rel": f_rel, "g_exp_128": g[0], "g_exp_256": g[1], "g_exp_cauchy_rel": g_rel,
        "mse_linear": mse["linear"].value, "mse_martingale": mse["martingale"].value, "mse_zero": mse["zero"].value,
    }
    ok = f_rel <= 1e-8 and g_rel < 1e-4 and mse["linear"].value < mse["zero"].value
    return Check(13, "prediction: F_exp, G_exp refinement, linear beats zero predictor", bool(ok), d)


def check_reproducibility(workers=None) -> Check:
    from .cli import run

    cases = [
        ["simulate", "--kind", "rosenblatt", "--h", "0.75", "--n", "256", "--t", "1", "--paths", "20", "--seed", "42"],
        ["ergodic", "--b1", "1", "--b2", "1", "--q", "1", "--r", "1", "--h", "0.75",
         "--mc-paths", "4", "--horizon", "4", "--dt", "0.0625"],
        ["nash", "--b2", "1,2", "--q", "1,1", "--r", "1,0.5"],
    ]
    same = True
    with tempfile.TemporaryDirectory() as tmp:
        for i, argv in enumerate(cases):
            blobs = []
            for rep in range(2):
                out = Path(tmp) / f"case{i}_{rep}.csv"
                code = run(argv + ["--out", str(out), "--quiet"])
                same &= code == 0
                blobs.append((out.read_bytes(), Path(str(out) + ".json").read_bytes()))
            same &= blobs[0] == blobs[1]
    return Check(14, "identical seeds and configs give byte-identical artifacts", bool(same), {"cases": len(cases)})


CHECKS: Dict[int, Callable[..., Check]] = {
    1: check_normalization,
    2: check_covariance,
    3: check_self_similarity,
    4: check_methods,
    5: check_ergodic,
    6: check_suboptimality,
    7: check_variance_aware,
    8: check_zero_sum,
    9: check_nash,
    10: check_mftg,
    11: check_cournot,
    12: check_diffusion,
    13: check_prediction,
    14: check_reproducibility,
}


def run_checks(only: Optional[Sequence[int]] = None, workers=None, echo: bool = False) -> List[Check]:
    results = []
    for number in only or sorted(CHECKS):
        check = CHECKS[number](workers=workers)
        if echo:
            print(check.line(), flush=True)
        results.append(check)
    return results
