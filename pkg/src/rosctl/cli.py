"""Command-line front end: ``rosctl <command> [flags]``.

Parameters resolve as flags, then the ``[command]`` table (or top-level
keys) of a TOML config file, then built-in defaults. Every artifact embeds
the resolved configuration.

Exit codes: 0 success, 1 failed acceptance checks, 2 configuration or usage
error, 3 solver failure (non-convergence, blow-up, no admissible solution).
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import control, cournot, diffusion, games, mftg, predict
from .errors import BlowUpError, ConvergenceError, ExistenceError, InadmissibleError, RosctlError
from .harness import MCEstimate, NoiseConfig, estimate_ergodic_cost, summary_stats
from .io import json_text, paths_table, to_jsonable, write_csv, write_json
from .noise import NoiseKind, SamplePath, STATE, gen_ensemble
from .sde import LinearDynamics

SOLVER_ERRORS = (ConvergenceError, BlowUpError, InadmissibleError, ExistenceError)


def _floats(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _flag(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).lower() in ("1", "true", "yes", "on")


# name -> (converter, default, help)
Param = Tuple[Callable, object, str]

LQ = {
    "b1": (float, 1.0, "drift coefficient"),
    "b2": (float, 1.0, "control coefficient"),
    "q": (float, 1.0, "state weight"),
    "r": (float, 1.0, "control weight"),
    "h": (float, 0.75, "Hurst index"),
}

COMMANDS: Dict[str, Dict[str, Param]] = {
    "simulate": {
        "kind": (str, "rosenblatt", "brownian, fbm or rosenblatt"),
        "h": (float, 0.75, "Hurst index (fbm, rosenblatt)"),
        "n": (int, 1024, "grid steps"),
        "t": (float, 1.0, "horizon"),
        "paths": (int, 10, "number of paths"),
        "method": (str, "hermite", "hermite or double_integral"),
        "upsample": (int, 64, "hermite base points per step"),
    },
    "ergodic": {
        **LQ,
        "mc_paths": (int, 0, "Monte Carlo paths (0 skips the simulation)"),
        "horizon": (float, 200.0, "Monte Carlo horizon"),
        "dt": (float, 2.0 ** -7, "Monte Carlo step"),
        "upsample": (int, 64, "hermite base points per step"),
    },
    "suboptimality": {**LQ, "h_grid": (str, "0.5:0.95:0.05", "assumed-index grid lo:hi:step")},
    "variance-aware": {
        "b1": (float, 1.0, "drift"), "b2": (float, 1.0, "control coefficient"),
        "bbar0": (float, 0.5, "mean forcing"), "bbar1": (float, -2.0, "mean drift"),
        "bbar2": (float, 0.0, "mean control coefficient"),
        "q": (float, 1.0, "deviation weight"), "qbar": (float, 1.0, "mean weight"),
        "r": (float, 1.0, "control weight"), "rbar": (float, 1.0, "mean control weight"),
        "h": (float, 0.75, "Hurst index"),
    },
    "zero-sum": {
        "b1": (float, -1.0, "drift"), "b2": (float, 1.0, "minimizer coefficient"),
        "b3": (float, 1.0, "maximizer coefficient"), "q": (float, 1.0, "state weight"),
        "r": (float, 1.0, "minimizer weight"), "s": (float, 2.0, "maximizer weight"),
        "h": (float, 0.75, "Hurst index"),
    },
    "nash": {
        "b1": (float, 1.0, "drift"),
        "b2": (_floats, "1,1", "per-player control coefficients"),
        "q": (_floats, "1,1", "per-player state weights"),
        "r": (_floats, "1,1", "per-player control weights"),
        "h": (float, 0.75, "Hurst index"),
        "damping": (float, 0.5, "best-response damping"),
    },
    "mftg": {
        "n_players": (int, 2, "players"), "horizon": (float, 1.0, "horizon"),
        "n_steps": (int, 200, "time steps"),
        "b1": (float, 0.5, "drift"), "bbar1": (float, -0.2, "mean drift"),
        "b2": (_floats, "1", "control coefficients"), "bbar2": (_floats, "0.2", "mean control coefficients"),
        "q": (_floats, "1", "state weights"), "qbar": (_floats, "0.5", "mean weights"),
        "r": (_floats, "1", "control weights"), "rbar": (_floats, "1", "mean control weights"),
        "q_terminal": (_floats, "1", "terminal weights"), "qbar_terminal": (_floats, "0.5", "terminal mean weights"),
        "kbar": (_floats, "1", "mean-cost exponents"),
        "h": (float, 0.75, "Hurst index"), "var_x0": (float, 0.0, "initial variance"),
        "xbar0": (float, 1.0, "initial mean"), "c3_mode": (str, "calibrated", "calibrated or c_tilde_h"),
    },
    "cournot": {
        "a": (float, 5.0, "price intercept"), "demand": (float, 5.0, "demand level"),
        "c": (_floats, "1,1", "marginal costs"), "r": (_floats, "1,1", "quadratic cost weights"),
        "rbar": (_floats, "1,1", "mean cost weights"), "epsilon": (float, 1.0, "price adjustment time"),
        "h": (float, 0.75, "Hurst index"),
        "price_of_simplicity": (_flag, False, "report the price of simplicity"),
    },
    "diffusion": {
        "mode": (str, "forward", "forward, reverse, fractional, superdiffusion or limit-check"),
        "theta": (float, 1.0, "mean-reversion rate"), "horizon": (float, 1.0, "horizon T"),
        "target_mean": (float, 0.0, "mask mean"), "target_std": (float, 1.0, "mask std"),
        "x0": (float, 0.0, "start point"), "h": (float, 0.75, "Hurst index"),
        "paths": (int, 10000, "samples"), "steps": (int, 256, "time steps"),
        "t_stop": (float, 0.5, "fractional reverse stop time as a fraction of T"),
        "noise": (str, "fbm", "fractional reverse noise: fbm or matched"),
        "sigma": (float, 1.0, "volatility (limit-check)"),
    },
    "predict": {
        "b1": (float, -1.0, "drift"), "window": (float, 1.0, "observation window s"),
        "horizon": (float, 1.0, "prediction time t"), "h": (float, 0.75, "Hurst index"),
        "grid": (int, 128, "quadrature order"), "paths": (int, 1000, "Monte Carlo paths"),
        "dt": (float, 2.0 ** -6, "simulation step"), "burn_in": (float, 4.0, "burn-in time"),
        "input": (str, "", "CSV of history paths (t,path_0,...) ending at t = 0"),
    },
    "verify": {"only": (str, "", "comma-separated criterion numbers")},
}

def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rosctl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, params in COMMANDS.items():
        p = sub.add_parser(name)
        for key, (_, default, help_) in params.items():
            flag = "--" + key.replace("_", "-")
            if params[key][0] is _flag:
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None, help=help_)
            else:
                p.add_argument(flag, dest=key, default=None, help=f"{help_} (default {default})")
        p.add_argument("--config", default=None, help="TOML config file")
        p.add_argument("--seed", default=None, help="base seed (default 0)")
        p.add_argument("--workers", type=int, default=None, help="worker threads (env ROSCTL_WORKERS)")
        p.add_argument("--out", default=None, help="CSV output path; a JSON sidecar is written next to it")
        p.add_argument("--json", action="store_true", help="print the JSON result")
        p.add_argument("--quiet", action="store_true", help="print nothing on success")
    return parser


class UsageError(RosctlError, ValueError):
    pass


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge flags, config file and defaults into a typed config."""
    file_cfg = {}
    if args.config:
        try:
            data = tomllib.loads(Path(args.config).read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        table = data.get(command, {})
        top = {k: v for k, v in data.items() if not isinstance(v, dict)}
        file_cfg = {k.replace("-", "_"): v for k, v in {**top, **table}.items()}
    known = set(COMMANDS[command]) | {"seed"}
    unknown = set(file_cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg = {}
    for key, (conv, default, _) in COMMANDS[command].items():
        raw = getattr(args, key)
        if raw is None:
            raw = file_cfg.get(key, default)
        try:
            cfg[key] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key}: {raw!r}") from exc
    seed = args.seed if args.seed is not None else file_cfg.get("seed", 0)
    try:
        seed = int(seed)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad seed {seed!r}") from exc
    if not 0 <= seed < 2 ** 64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    cfg["seed"] = seed
    return cfg


# ---------------------------------------------------------------------------
# Commands: each returns (result dict, optional (header, rows))
# ---------------------------------------------------------------------------

def _simulate(cfg, workers):
    kind = cfg["kind"]
    if kind in ("fbm", "rosenblatt"):
        kind = NoiseKind(kind, cfg["h"])
    ens = gen_ensemble(kind, cfg["n"], cfg["t"], cfg["paths"], cfg["seed"],
                       method=cfg["method"], upsample=cfg["upsample"], workers=workers)
    end = ens.values[:, -1]
    result = {"kind": str(ens.kind), "dt": ens.dt, "terminal_mean": float(np.mean(end)),
              "terminal_var": float(np.var(end, ddof=1)) if end.size > 1 else math.nan,
              "path_seeds": ens.seeds}
    return result, paths_table(ens.times, ens.values)


def _ergodic(cfg, workers):
    sol = control.optimal_gain(cfg["b1"], cfg["b2"], cfg["q"], cfg["r"], cfg["h"])
    result = {"gain": sol.gain, "cost": sol.cost, "cost_riccati_form": sol.cost_riccati_form,
              "riccati_p": sol.riccati_p, "closed_loop": sol.closed_loop}
    if cfg["mc_paths"] > 0:
        est = estimate_ergodic_cost(
            LinearDynamics(b1=cfg["b1"], b2=cfg["b2"]), sol.gain, cfg["q"], cfg["r"],
            NoiseConfig.rosenblatt(cfg["h"], cfg["upsample"]), cfg["horizon"], cfg["dt"],
            cfg["mc_paths"], cfg["seed"], workers=workers,
        )
        result["monte_carlo"] = est.as_dict()
        return result, (["quantity", "value", "std_error"],
                        [("closed_form", sol.cost, 0.0), ("monte_carlo", est.value, est.std_error)])
    return result, None


def _h_grid(text: str) -> List[float]:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"h-grid must be lo:hi:step, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise UsageError("h-grid needs step > 0 and hi >= lo")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 12) for i in range(n + 1)]


def _suboptimality(cfg, workers):
    rows = control.surrogate_sweep(cfg["h"], _h_grid(cfg["h_grid"]), cfg["b1"], cfg["b2"], cfg["q"], cfg["r"])
    best = min(rows, key=lambda r: r.gap)
    result = {"h_true": cfg["h"], "argmin_h_assumed": best.h_assumed, "min_gap": best.gap,
              "max_gap": max(r.gap for r in rows)}
    return result, (["h_assumed", "gain", "true_cost", "gap"],
                    [(r.h_assumed, r.gain, r.true_cost, r.gap) for r in rows])


def _variance_aware(cfg, workers):
    keys = ("b1", "b2", "bbar0", "bbar1", "bbar2", "q", "qbar", "r", "rbar", "h")
    return control.variance_aware_gains(*(cfg[k] for k in keys)), None


def _zero_sum(cfg, workers):
    spec = games.ZeroSumSpec(*(cfg[k] for k in ("b1", "b2", "b3", "q", "r", "s", "h")))
    sp = games.zero_sum_saddle(spec)
    return sp, (["player", "gain"], [("minimizer", sp.k), ("maximizer", sp.l)])


def _nash(cfg, workers):
    spec = games.NashSpec(cfg["b1"], cfg["b2"], cfg["q"], cfg["r"], cfg["h"])
    sol = games.nash_fixed_point(spec, damping=cfg["damping"])
    costs = [games.nash_player_cost(i, sol.gains, spec) for i in range(spec.n_players)]
    result = {"gains": sol.gains, "residuals": sol.residuals, "costs": costs,
              "closed_loop": sol.closed_loop, "stable": sol.closed_loop < 0, "iterations": sol.iterations}
    return result, (["player", "gain", "residual"],
                    [(i, g, r) for i, (g, r) in enumerate(zip(sol.gains, sol.residuals))])


def _per_player(values, n, name):
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise UsageError(f"{name} needs 1 or {n} values")
    return values


def _mftg(cfg, workers):
    n = cfg["n_players"]
    per = {k: _per_player(cfg[k], n, k) for k in
           ("b2", "bbar2", "q", "qbar", "r", "rbar", "q_terminal", "qbar_terminal", "kbar")}
    per["kbar"] = [int(k) for k in per["kbar"]]
    spec = mftg.MftgSpec(n_players=n, horizon=cfg["horizon"], n_steps=cfg["n_steps"], b1=cfg["b1"],
                         bbar1=cfg["bbar1"], h=cfg["h"], var_x0=cfg["var_x0"], xbar0=cfg["xbar0"],
                         c3_mode=cfg["c3_mode"], **per)
    sol = mftg.mftg_equilibrium(spec)
    result = {"equilibrium_cost": sol.equilibrium_cost_i, "iterations": sol.iterations,
              "residual": sol.residual, "c3": spec.c3, "v2_T": float(sol.v2[-1]), "o_T": float(sol.o[-1])}
    return result, sol.table()


def _cournot(cfg, workers):
    spec = cournot.CournotSpec(cfg["a"], cfg["demand"], cfg["c"], cfg["r"], cfg["rbar"], cfg["epsilon"], cfg["h"])
    eq = cournot.full_equilibrium(spec)
    result = {"p_bar_star": eq.p_bar_star, "eta": eq.eta, "eta_bar": eq.eta_bar, "rho": eq.rho,
              "payoffs": eq.payoffs, "payoffs_dev": eq.payoffs_dev, "payoffs_mean": eq.payoffs_mean,
              "stability": list(eq.stability)}
    if cfg["price_of_simplicity"]:
        result["price_of_simplicity"] = [
            cournot.price_of_simplicity(eq.p_bar_star, c, r, rb) for c, r, rb in zip(spec.c, spec.r, spec.rbar)
        ]
    return result, (["i", "eta", "eta_bar", "rho", "payoff"], eq.rows())


def _diffusion(cfg, workers):
    mode = cfg["mode"]
    driver = {"fractional": "fbm", "superdiffusion": "rosenblatt"}.get(mode, "brownian")
    if mode == "limit-check":
        d = diffusion.chi_square_limit_check(cfg["theta"], cfg["target_mean"], cfg["sigma"], cfg["x0"],
                                             cfg["horizon"], cfg["h"], cfg["paths"], cfg["seed"],
                                             n_steps=cfg["steps"], workers=workers)
        return {"wasserstein1": d}, None
    spec = diffusion.DiffusionSpec(cfg["theta"], cfg["horizon"], cfg["target_mean"], cfg["target_std"],
                                   h=cfg["h"] if driver != "brownian" else 0.5, x0=cfg["x0"], driver=driver)
    if mode == "forward":
        m, sigma = diffusion.ou_bridge_params(spec)
        x = diffusion.ou_forward_terminal(spec, cfg["paths"], cfg["seed"])
        mean, var = MCEstimate.from_samples(x, cfg["seed"]), MCEstimate.variance_from_samples(x, cfg["seed"])
        result = {"m": m, "sigma": sigma, "terminal_mean": mean.as_dict(), "terminal_var": var.as_dict()}
    elif mode == "reverse":
        mask = np.random.default_rng(cfg["seed"]).normal(cfg["target_mean"], cfg["target_std"], cfg["paths"])
        rev = diffusion.ou_reverse_sample(spec, mask, cfg["steps"], seed=cfg["seed"])
        x = rev.samples
        result = {"t_end": rev.t_end, "clamp_dt": rev.clamp_dt, **rev.meta, "stats": summary_stats(x)._asdict()}
    elif mode == "fractional":
        t_stop = cfg["t_stop"] * cfg["horizon"]
        rev = diffusion.frac_reverse_sample(spec, t_stop, cfg["steps"], cfg["paths"], cfg["seed"], noise=cfg["noise"])
        x = rev.samples
        m, v2 = diffusion.frac_forward_mv(t_stop, spec)
        result = {"t_stop": t_stop, "forward_mean": m, "forward_v2": v2, **rev.meta,
                  "stats": summary_stats(x)._asdict()}
    elif mode == "superdiffusion":
        sd = diffusion.rosenblatt_superdiffusion_sample(spec, cfg["paths"], cfg["seed"], n_steps=cfg["steps"],
                                                        workers=workers)
        x = sd.samples
        result = {"m": sd.m, "sigma": sd.sigma, "variance": sd.variance.as_dict(),
                  "variance_formula": sd.variance_formula, "stats": sd.stats._asdict()}
    else:
        raise UsageError(f"unknown diffusion mode {mode!r}")
    return result, (["sample"], [(v,) for v in x])


def _predict(cfg, workers):
    spec = predict.PredictorSpec(cfg["b1"], cfg["window"], cfg["horizon"], cfg["h"])
    if cfg["input"]:
        data = np.loadtxt(cfg["input"], delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0]
        dt = float(t[1] - t[0])
        preds = [
            predict.predict_linear_ou(SamplePath(dt, data[:, j], STATE, t0=float(t[0])), spec, cfg["grid"])
            for j in range(1, data.shape[1])
        ]
        return {"predictions": preds}, (["path", "prediction"], list(enumerate(preds)))
    mse = predict.predictor_mse(spec, cfg["paths"], cfg["seed"], dt=cfg["dt"], burn_in=cfg["burn_in"],
                                grid=cfg["grid"], workers=workers)
    result = {k: v.as_dict() for k, v in mse.items()}
    return result, (["predictor", "mse", "std_error"], [(k, v.value, v.std_error) for k, v in mse.items()])


def _verify(cfg, workers):
    from .verify import CHECKS, run_checks

    only = [int(v) for v in cfg["only"].split(",") if v.strip()] or None
    if only and not set(only) <= set(CHECKS):
        raise UsageError(f"unknown criteria {sorted(set(only) - set(CHECKS))}")
    checks = run_checks(only, workers=workers, echo=not cfg.get("_quiet", False))
    result = {"all_passed": all(c.passed for c in checks),
              "checks": [{"number": c.number, "title": c.title, "passed": c.passed, "details": c.details}
                         for c in checks]}
    return result, (["criterion", "passed"], [(c.number, c.passed) for c in checks])


HANDLERS = {
    "simulate": _simulate, "ergodic": _ergodic, "suboptimality": _suboptimality,
    "variance-aware": _variance_aware, "zero-sum": _zero_sum, "nash": _nash, "mftg": _mftg,
    "cournot": _cournot, "diffusion": _diffusion, "predict": _predict, "verify": _verify,
}


def run(argv: Optional[List[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args.command, args)
        if args.command == "verify":
            cfg["_quiet"] = args.quiet or args.json
        result, table = HANDLERS[args.command](cfg, args.workers)
        cfg.pop("_quiet", None)
    except SOLVER_ERRORS as exc:
        print(f"rosctl: solver failure: {exc}", file=sys.stderr)
        return 3
    except (RosctlError, ValueError) as exc:
        print(f"rosctl: configuration error: {exc}", file=sys.stderr)
        return 2
    report = {"command": args.command, "config": cfg, "result": result}
    if args.out:
        if table is not None:
            write_csv(args.out, *table)
        write_json(str(args.out) + ".json", report)
    if args.json:
        sys.stdout.write(json_text(report))
    elif not args.quiet:
        _print_summary(report)
    if args.command == "verify" and not result["all_passed"]:
        return 1
    return 0


def _print_summary(report):
    res = to_jsonable(report["result"])
    if not isinstance(res, dict):
        print(res)
        return
    for key, value in res.items():
        if key in ("checks", "path_seeds"):
            continue
        print(f"{key} = {value}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
