# %% [markdown]
# # Quantile objectives and nonlinear discounting
#
# Two models where the aggregator is not an expectation.  The quantile
# model replaces the conditional mean with a tau-quantile; the nonlinear
# model discounts the continuation value through a concave map b.

# %%
import numpy as np

from ordered_dp import IterationControl, value_function_iteration, howard_policy_iteration
from ordered_dp.instances import random_nonlinear_discount, random_quantile

rng = np.random.default_rng(5)
q = random_quantile(rng)
print(f"quantile model: tau = {q.tau:.3f}, beta = {q.beta:.3f}, {q.value_size} Q-factors")

# %% [markdown]
# Shifting Q-factors by a constant shifts the image by beta times it.

# %%
sigma = np.array([q.space.actions_at(x)[0] for x in range(q.space.n_states)])
f = rng.normal(size=q.value_size)
shift = q.policy_operator(sigma, f + 3.0) - q.policy_operator(sigma, f)
print("shift / 3 =", np.round(shift / 3.0, 12))

# %%
ctrl = IterationControl(tol=1e-10)
for label, adp in (("quantile", q), ("nonlinear discount", random_nonlinear_discount(rng))):
    a = value_function_iteration(adp, adp.default_initial(), ctrl)
    b = howard_policy_iteration(adp, adp.default_initial(), ctrl)
    print(f"{label:20s} VFI {a.iterations:3d} it, HPI {b.iterations:2d} it, "
          f"agreement {np.max(np.abs(a.value - b.value)):.1e}")
