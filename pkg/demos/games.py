"""Two players, one state: a zero-sum duel, a Nash game and a mean-field-type game."""
import numpy as np

from rosctl.games import NashSpec, ZeroSumSpec, nash_fixed_point, zero_sum_saddle
from rosctl.mftg import MftgSpec, mftg_equilibrium

saddle = zero_sum_saddle(ZeroSumSpec(b1=-1.0, b2=1.0, b3=1.0, q=1.0, r=1.0, s=2.0, h=0.75))
print(f"zero-sum: K = {saddle.k:.5f}, L = {saddle.l:.5f}, value = {saddle.value:.5f} ({saddle.selected})")

nash = nash_fixed_point(NashSpec(b1=1.0, b2=[1.0, 2.0], q=[1.0, 1.0], r=[1.0, 0.5], h=0.75))
print(f"Nash gains {np.round(nash.gains, 6).tolist()} after {nash.iterations} sweeps, closed loop {nash.closed_loop:.4f}")

spec = MftgSpec(
    n_players=2, horizon=1.0, n_steps=200, b1=0.5, bbar1=-0.2, b2=1.0, bbar2=0.2,
    q=1.0, qbar=0.5, r=[1.0, 2.0], rbar=1.0, q_terminal=1.0, qbar_terminal=0.5, kbar=1, h=0.75,
)
sol = mftg_equilibrium(spec)
for i in range(2):
    print(f"MFTG player {i}: eta(0) = {sol.eta_i[i][0]:.4f}, etabar(0) = {sol.eta_bar_i[i][0]:.4f}, "
          f"cost = {sol.equilibrium_cost_i[i]:.4f}")
