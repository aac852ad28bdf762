# %% [markdown]
# # VFI, Howard and optimistic policy iteration
#
# All three algorithms reach the same fixed point.  They differ in how much
# work each iteration does.  Here we track the sup distance to v* over the
# first few iterations on the firm exit model, then time full solves.

# %%
import time

import numpy as np

from ordered_dp import (
    FirmExitParams,
    IterationControl,
    build_firm_exit_model,
    howard_policy_iteration,
    optimistic_policy_iteration,
    value_function_iteration,
)

model = build_firm_exit_model(FirmExitParams())
v0 = np.zeros(model.value_size)
v_star = value_function_iteration(model, v0, IterationControl(tol=1e-11)).value


def first_distances(run, k=3):
    out = []
    run(lambda i, new, old: out.append(np.max(np.abs(new - v_star))))
    return out[:k]


ctrl = IterationControl(tol=1e-8)
print("distance to v* after iterations 1..3")
print("VFI     ", np.round(first_distances(lambda cb: value_function_iteration(model, v0, ctrl, cb)), 4))
print("HPI     ", np.round(first_distances(lambda cb: howard_policy_iteration(model, v0, ctrl, callback=cb)), 4))
print("OPI(10) ", np.round(first_distances(lambda cb: optimistic_policy_iteration(model, v0, 10, ctrl, cb)), 4))

# %% [markdown]
# OPI with m = 1 is value iteration; larger m moves towards Howard.

# %%
for m in (1, 2, 5, 10, 50):
    t0 = time.perf_counter()
    r = optimistic_policy_iteration(model, v0, m, ctrl)
    dt = time.perf_counter() - t0
    print(f"OPI m={m:3d}: {r.iterations:4d} iterations, {dt:.3f}s, "
          f"sup diff to v* {np.max(np.abs(r.value - v_star)):.1e}")
t0 = time.perf_counter()
r = howard_policy_iteration(model, v0, ctrl)
print(f"HPI      : {r.iterations:4d} iterations, {time.perf_counter() - t0:.3f}s")
