"""A Cournot market with a Rosenblatt-driven price.

Compares the mean-field-type equilibrium with the simpler mean-field-game
baseline and reports how much each producer gives up by simplifying.
"""
import numpy as np

from rosctl.cournot import CournotSpec, full_equilibrium, mfg_baseline, mftg_table_payoff, price_of_simplicity

spec = CournotSpec(a_intercept=5.0, demand=5.0, c=(1.0, 1.5), r=(1.0, 2.0), rbar=(0.5, 1.0), epsilon=1.0, h=0.75)
eq = full_equilibrium(spec)
print(f"long-run mean price {eq.p_bar_star:.4f}")
for i, eta, eta_bar, rho, pay in eq.rows():
    print(f"producer {i}: eta {eta:.4f}  etabar {eta_bar:.4f}  rho {rho:+.4f}  payoff {pay:.4f}")

prices = np.random.default_rng(0).normal(eq.p_bar_star, 0.5, 2000)
mftg = mftg_table_payoff(spec, prices)
mfg = mfg_baseline(spec, prices).payoffs
for i in range(spec.n_producers):
    pos = price_of_simplicity(prices.mean(), spec.c[i], spec.r[i], spec.rbar[i])
    print(f"producer {i}: MFTG {mftg[i]:.4f}  MFG {mfg[i]:.4f}  price of simplicity {pos:.4f}")
