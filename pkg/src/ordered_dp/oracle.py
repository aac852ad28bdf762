"""
Brute-force and sampled verification.

:func:`brute_force_optimality` enumerates every feasible policy, evaluates
it, and checks the fundamental optimality properties directly:

* B1 -- some policy attains the pointwise maximum of all policy values,
* B2 -- that maximum solves the Bellman equation,
* B3 -- optimal policies are exactly the greedy ones at the maximum.

The ``check_*`` functions probe operator hypotheses (monotonicity, concavity,
contraction, perimeter avoidance) on seeded random samples and report the
first counterexample they meet.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .algorithms import IterationControl, policy_evaluation
from .errors import EnumerationSizeError

__all__ = [
    "PropertyReport",
    "OptimalityReport",
    "enumerate_policies",
    "brute_force_optimality",
    "interval_pair_sampler",
    "interval_sampler",
    "check_order_preserving",
    "check_concavity",
    "estimate_contraction_modulus",
    "check_lower_perimeter",
    "write_report_json",
]

MAX_POLICIES = 10**6


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass
class PropertyReport:
    name: str
    trials: int
    failures: int = 0
    witness: dict | None = None
    seed: int | None = None

    @property
    def passed(self):
        return self.failures == 0

    @classmethod
    def from_mask(cls, name, bad, seed, describe):
        bad = np.asarray(bad)
        idx = np.flatnonzero(bad)
        witness = describe(int(idx[0])) if idx.size else None
        return cls(name, int(bad.size), int(idx.size), witness, seed)

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return _jsonable(d)


@dataclass
class OptimalityReport:
    v_star_brute: np.ndarray
    optimal_policies: list
    greedy_policies: list
    b1: bool
    b2: bool
    b3: bool
    n_policies: int
    bellman_residual: float
    policy_values: dict = field(default_factory=dict, repr=False)

    @property
    def b1_b2_b3(self):
        return (self.b1, self.b2, self.b3)

    @property
    def passed(self):
        return self.b1 and self.b2 and self.b3

    def to_dict(self):
        return _jsonable({
            "v_star_brute": self.v_star_brute,
            "optimal_policies": self.optimal_policies,
            "greedy_policies": self.greedy_policies,
            "b1": self.b1,
            "b2": self.b2,
            "b3": self.b3,
            "n_policies": self.n_policies,
            "bellman_residual": self.bellman_residual,
        })


def write_report_json(report, path):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def enumerate_policies(space, limit=MAX_POLICIES):
    """All feasible policies in lexicographic order, as tuples of action indices."""
    choices = [tuple(int(a) for a in space.actions_at(x)) for x in range(space.n_states)]
    count = int(np.prod([len(c) for c in choices], dtype=object))
    if count > limit:
        raise EnumerationSizeError(f"{count} policies exceed the enumeration guard {limit}")
    return list(itertools.product(*choices))


def brute_force_optimality(adp, ctrl=IterationControl(tol=1e-12, max_iter=1_000_000,
                                                      record_trace=False)):
    """
    Evaluate every policy and test B1-B3 by direct comparison.

    Policy values are compared with slack ``10 * ctrl.tol`` (scaled by the
    magnitude of the values).
    """
    policies = enumerate_policies(adp.space)
    values = {}
    for sigma in policies:
        values[sigma] = policy_evaluation(adp, np.array(sigma), ctrl)
    stacked = np.array([values[s] for s in policies])
    v_star = stacked.max(axis=0)
    slack = 10 * ctrl.tol * max(1.0, float(np.max(np.abs(v_star))))

    optimal = [s for s in policies if np.all(values[s] >= v_star - slack)]
    tv = adp.bellman(v_star)
    greedy = [
        s for s in policies
        if np.all(adp.policy_operator(np.array(s), v_star) >= tv - slack)
    ]
    residual = float(np.max(np.abs(tv - v_star)))
    b1 = bool(optimal)
    b2 = residual <= slack
    b3 = set(optimal) == set(greedy)
    return OptimalityReport(v_star, optimal, greedy, b1, b2, b3, len(policies), residual,
                            values)


def interval_sampler(lower, upper):
    """Uniform draws from the order interval ``[lower, upper]``."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)

    def sample(rng):
        return lower + rng.random(lower.shape) * (upper - lower)

    return sample


def interval_pair_sampler(lower, upper):
    """Comparable pairs ``v <= w`` inside ``[lower, upper]``."""
    single = interval_sampler(lower, upper)

    def sample(rng):
        a, b = single(rng), single(rng)
        return np.minimum(a, b), np.maximum(a, b)

    return sample


def check_order_preserving(op, sampler, trials=500, seed=0, slack=1e-12):
    """Check ``op(v) <= op(w)`` on sampled comparable pairs ``v <= w``."""
    rng = np.random.default_rng(seed)
    failures, witness = 0, None
    for _ in range(trials):
        v, w = sampler(rng)
        ov, ow = op(v), op(w)
        bad = ov > ow + slack
        if bad.any():
            failures += 1
            if witness is None:
                i = int(np.argmax(ov - ow))
                witness = {"v": v, "w": w, "index": i, "op(v)[i]": ov[i], "op(w)[i]": ow[i]}
    return PropertyReport("order preserving", trials, failures, _jsonable(witness), seed)


def check_concavity(op, sampler, trials=500, seed=0, slack=1e-10):
    """Check ``op(l v + (1-l) w) >= l op(v) + (1-l) op(w)`` for random ``l`` in (0, 1)."""
    rng = np.random.default_rng(seed)
    failures, witness = 0, None
    for _ in range(trials):
        v, w = sampler(rng)
        lam = rng.uniform(0.0, 1.0)
        lhs = op(lam * v + (1 - lam) * w)
        rhs = lam * op(v) + (1 - lam) * op(w)
        bad = lhs < rhs - slack
        if bad.any():
            failures += 1
            if witness is None:
                i = int(np.argmin(lhs - rhs))
                witness = {"v": v, "w": w, "lambda": lam, "index": i,
                           "op(mix)[i]": lhs[i], "mix(op)[i]": rhs[i]}
    return PropertyReport("concavity", trials, failures, _jsonable(witness), seed)


def estimate_contraction_modulus(op, sampler, trials=500, seed=0):
    """
    Largest sampled ratio ``||op(v) - op(w)|| / ||v - w||`` in the sup norm.

    The accompanying report counts ratios ``>= 1`` as failures.  This is a
    sampled certificate, not a proof.
    """
    rng = np.random.default_rng(seed)
    rho_hat, failures, witness, used = 0.0, 0, None, 0
    for _ in range(trials):
        v, w = sampler(rng)
        den = float(np.max(np.abs(v - w)))
        if den == 0:
            continue
        used += 1
        ratio = float(np.max(np.abs(op(v) - op(w)))) / den
        if ratio >= 1:
            failures += 1
            if witness is None:
                witness = {"v": v, "w": w, "ratio": ratio}
        rho_hat = max(rho_hat, ratio)
    report = PropertyReport("contraction modulus < 1", used, failures, _jsonable(witness), seed)
    return rho_hat, report


def check_lower_perimeter(adp, b, r_lower, sampler, trials=500, seed=0, slack=1e-12):
    """
    Check ``min_x (T_sigma v)(x) >= r_lower`` for random policies and ``v`` in ``[0, b]``.

    ``r_lower`` may be a scalar or a per-state vector of bounds.
    """
    rng = np.random.default_rng(seed)
    space = adp.space
    r_lower = np.broadcast_to(np.asarray(r_lower, dtype=float), (space.n_states,))
    failures, witness = 0, None
    for _ in range(trials):
        v = sampler(rng)
        sigma = np.array([rng.choice(space.actions_at(x)) for x in range(space.n_states)])
        tv = adp.policy_operator(sigma, v)
        bad = tv < r_lower - slack
        if bad.any():
            failures += 1
            if witness is None:
                x = int(np.argmin(tv - r_lower))
                witness = {"v": v, "sigma": sigma, "state": x, "Tv[x]": tv[x],
                           "bound[x]": r_lower[x]}
    return PropertyReport("lower perimeter avoidance", trials, failures,
                          _jsonable(witness), seed)
