# %% [markdown]
# # Firm exit under entropic risk
#
# A firm observes productivity x on a Tauchen grid, receives x each period
# it stays, and can exit for a scrap value s.  Future values are aggregated
# with an entropic certainty equivalent, so a more negative theta means a
# more cautious firm.  The question: where is the exit cutoff, and how does
# it move with theta?

# %%
import time

import numpy as np

from ordered_dp import (
    FirmExitParams,
    IterationControl,
    build_firm_exit_model,
    continuation_values,
    exit_threshold,
    value_function_iteration,
)

params = FirmExitParams()
model = build_firm_exit_model(params)
print(f"grid: {params.n} points on [{model.grid[0]:.4f}, {model.grid[-1]:.4f}]")
print(f"scrap value s = {params.s}, theta = {params.theta}")

# %% [markdown]
# Value iteration from zero.  Rewards are nonnegative, so the iterates
# climb monotonically towards the fixed point.

# %%
t0 = time.perf_counter()
res = value_function_iteration(model, np.zeros(model.value_size), IterationControl(tol=1e-8))
print(f"converged={res.converged} after {res.iterations} iterations "
      f"({time.perf_counter() - t0:.2f}s)")

h = continuation_values(model, res.value)
gap = np.max(np.abs(res.value - np.maximum(params.s, h)))
print(f"max |v - max(s, h)| = {gap:.2e}")

x_bar = exit_threshold(model, res.value, res.policy)
print(f"exit below x = {x_bar:.5f}, continue above")

# %% [markdown]
# Sweep theta.  The cutoff should fall (weakly) as the firm becomes less
# risk averse.

# %%
for theta in np.linspace(-2.0, -0.1, 6):
    m = build_firm_exit_model(FirmExitParams(theta=float(theta)))
    r = value_function_iteration(m, np.zeros(m.value_size), IterationControl(tol=1e-8))
    print(f"theta = {theta:6.3f}   cutoff = {exit_threshold(m, r.value, r.policy):.5f}")
