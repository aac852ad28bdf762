# %% [markdown]
# # Checking optimality by brute force
#
# On small instances we can evaluate every policy and read off the
# optimum directly.  Then compare with what the iterative solvers return,
# and see what the property checkers say when a hypothesis is broken.

# %%
import numpy as np

from ordered_dp import (
    IterationControl,
    brute_force_optimality,
    enumerate_policies,
    check_discount_assumptions,
    check_order_preserving,
    affine_discount,
    howard_policy_iteration,
)
from ordered_dp.instances import FAMILIES
from ordered_dp.oracle import interval_pair_sampler

rng = np.random.default_rng(3)
ctrl = IterationControl(tol=1e-12, max_iter=1_000_000)
for name, make in sorted(FAMILIES.items()):
    adp = make(rng)
    while len(enumerate_policies(adp.space)) < 4:  # skip trivial draws
        adp = make(rng)
    rep = brute_force_optimality(adp)
    hpi = howard_policy_iteration(adp, adp.default_initial(), ctrl)
    print(f"{name:20s} {rep.n_policies:3d} policies  B1-B3 {rep.b1_b2_b3}  "
          f"|v_hpi - v_brute| = {np.max(np.abs(hpi.value - rep.v_star_brute)):.1e}")

# %% [markdown]
# A discount map that decreases in v breaks order preservation.  The
# checkers return the first counterexample they find.

# %%
report = check_discount_assumptions(affine_discount(5.0, -0.5, 0.9))
print("order preserving passed:", report.order_preserving.passed)
print("witness:", report.order_preserving.to_dict()["witness"])

flip = check_order_preserving(lambda v: -v, interval_pair_sampler(np.zeros(2), np.ones(2)), 50)
print(f"v -> -v: {flip.failures}/{flip.trials} sampled pairs reversed")
