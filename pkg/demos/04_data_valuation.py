# %% [markdown]
# # Valuing a data stream with state-dependent discounting
#
# Value solves v = pi + K v, where K mixes a discount-factor chain with a
# data-state chain.  K need not be a contraction in the sup norm; what
# matters is a drift function e with K e <= rho e for some rho < 1.

# %%
import numpy as np

from ordered_dp import apply_K, check_drift, solve_data_valuation
from ordered_dp.instances import random_data_valuation

model = random_data_valuation(np.random.default_rng(4), nb=3, ns=5)
drift = check_drift(model)
print(f"drift holds: {drift.passed}, rho = {drift.rho:.4f}")
print(f"max(Ke - rho e) = {np.max(apply_K(model, drift.e) - drift.rho * drift.e):.2e}")

# %%
v_direct = solve_data_valuation(model, "direct")
steps = []
v_iter = solve_data_valuation(model, "iterate",
                              callback=lambda k, new, old: steps.append(np.max(new - old)))
print(f"direct vs iterated: {np.max(np.abs(v_direct - v_iter)):.1e}")
print(f"iterations: {len(steps)}, last step {steps[-1]:.1e}")
print("values (rows: discount state, cols: data state)")
print(np.round(v_direct.reshape(model.shape), 3))
