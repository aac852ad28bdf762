"""
Decision processes with a nonlinear discount operator on continuation values.

The Bellman equation reads

    v(x) = max_a { r(x, a) + sum_z' P(z, z') * b(v(H(y, a, z'), z')) }

where ``b`` is a nonnegative scalar map applied pointwise.  The map must be
order preserving, subadditive and dominated by ``delta(z) * t``; these are
checked by sampling before a model is built.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import markov
from .algorithms import IterationControl, successive_approximation
from .core import ActionValueProgram, StateActionSpace, as_value_vector
from .errors import NumericalDomainError, ParameterError, StabilityAssumptionError
from .oracle import PropertyReport

__all__ = [
    "DiscountMap",
    "linear_discount",
    "capped_linear_discount",
    "sqrt_tail_discount",
    "affine_discount",
    "power_discount",
    "NonlinearDiscountModel",
    "nd_action_value",
    "DiscountCheckReport",
    "check_discount_assumptions",
    "default_value_sampler",
    "compute_nd_upper_bound",
]

_SLACK = 1e-12


@dataclass(frozen=True)
class DiscountMap:
    """
    Scalar discount map ``b`` together with its domination bound ``delta``.

    ``func`` must accept and return numpy arrays elementwise.
    ``linear_coef`` is set when ``b(t) = c * t`` exactly, which makes the
    policy operators affine.
    """

    func: Callable[[np.ndarray], np.ndarray]
    delta: np.ndarray
    name: str = "custom"
    linear_coef: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.delta, dtype=float))
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ParameterError("delta must be finite and nonnegative")
        object.__setattr__(self, "delta", d)

    def __call__(self, t):
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=float)


def linear_discount(c, delta=None):
    return DiscountMap(lambda t: c * t, c if delta is None else delta, "linear", float(c),
                       {"scale": c})


def capped_linear_discount(c, cap, delta=None):
    """``b(t) = c * min(t, cap)``."""
    return DiscountMap(lambda t: c * np.minimum(t, cap), c if delta is None else delta,
                       "capped_linear", params={"scale": c, "cap": cap})


def sqrt_tail_discount(c, delta=None):
    """``b(t) = c * t`` below one and ``c * sqrt(t)`` above."""
    def func(t):
        return np.where(t < 1, c * t, c * np.sqrt(np.maximum(t, 1.0)))

    return DiscountMap(func, c if delta is None else delta, "sqrt_tail", params={"scale": c})


def affine_discount(intercept, slope, delta):
    """``b(t) = max(0, intercept + slope * t)``; a negative slope breaks monotonicity."""
    return DiscountMap(lambda t: np.maximum(0.0, intercept + slope * t), delta, "affine",
                       params={"intercept": intercept, "slope": slope})


def power_discount(c, power, delta):
    """``b(t) = c * t ** power``."""
    return DiscountMap(lambda t: c * np.power(t, power), delta, "power",
                       params={"scale": c, "power": power})


def default_value_sampler(upper=100.0):
    """Nonnegative draws mixing a uniform range with log-uniform magnitudes."""
    def sample(rng, size):
        uni = rng.uniform(0.0, upper, size)
        logu = 10.0 ** rng.uniform(-4, np.log10(upper), size)
        return np.where(rng.random(size) < 0.5, uni, logu)

    return sample


@dataclass
class DiscountCheckReport:
    order_preserving: PropertyReport
    subadditive: PropertyReport
    dominated: PropertyReport

    @property
    def passed(self):
        return all(r.passed for r in (self.order_preserving, self.subadditive, self.dominated))

    def to_dict(self):
        return {
            "passed": self.passed,
            "checks": [r.to_dict() for r in (self.order_preserving, self.subadditive,
                                             self.dominated)],
        }


def check_discount_assumptions(discount, sampler=None, trials=2000, seed=0):
    """
    Sampled check of order preservation, subadditivity and delta-domination.

    Each check reports its first witness.  Nonnegativity of ``b`` is folded
    into the order-preservation check (``b`` must map into the positive cone).
    """
    sampler = sampler or default_value_sampler()
    rng = np.random.default_rng(seed)
    s = sampler(rng, trials)
    t = sampler(rng, trials)
    lo, hi = np.minimum(s, t), np.maximum(s, t)
    b_lo, b_hi = discount(lo), discount(hi)

    bad = (b_lo > b_hi + _SLACK) | (b_lo < 0) | (b_hi < 0)
    order = PropertyReport.from_mask(
        "discount order preserving", bad, seed,
        lambda i: {"s": lo[i], "t": hi[i], "b(s)": b_lo[i], "b(t)": b_hi[i]},
    )

    b_sum = discount(s + t)
    b_s, b_t = discount(s), discount(t)
    bad = b_sum > b_s + b_t + _SLACK
    sub = PropertyReport.from_mask(
        "discount subadditive", bad, seed,
        lambda i: {"s": s[i], "t": t[i], "b(s+t)": b_sum[i], "b(s)+b(t)": b_s[i] + b_t[i]},
    )

    z = rng.integers(0, len(discount.delta), trials)
    bound = discount.delta[z] * s
    bad = b_s > bound + _SLACK
    dom = PropertyReport.from_mask(
        "discount dominated by delta", bad, seed,
        lambda i: {"t": s[i], "z": int(z[i]), "b(t)": b_s[i], "delta(z)*t": bound[i]},
    )
    return DiscountCheckReport(order, sub, dom)


class NonlinearDiscountModel(ActionValueProgram):
    """
    Parameters
    ----------
    structure : MarkovStructure
    reward : array_like, shape (n_states, n_actions)
        Nonnegative bounded rewards.
    discount : DiscountMap
        ``delta`` has one entry per exogenous state (or a single entry).
    feasible : array_like of bool, optional
    check_assumptions : bool
        Run :func:`check_discount_assumptions` and the drift check on
        ``delta``; a failure raises unless this is False.
    """

    def __init__(self, structure, reward, discount, feasible=None, labels=None,
                 check_assumptions=True, drift_horizon=10_000, seed=0):
        self.structure = structure
        shape = (structure.n_states, structure.n_actions)
        if feasible is None:
            feasible = np.ones(shape, dtype=bool)
        self.space = StateActionSpace(feasible, labels=labels)
        if self.space.feasible.shape != shape:
            raise ParameterError(f"feasible mask must have shape {shape}")
        pairs = self.space.pairs
        reward = np.asarray(reward, dtype=float)
        if reward.shape != shape:
            raise ParameterError(f"reward must have shape {shape}")
        self.reward = reward[pairs[:, 0], pairs[:, 1]]
        if not np.all(np.isfinite(self.reward)) or self.reward.min() < 0:
            raise ParameterError("rewards must be finite and nonnegative")
        delta = np.broadcast_to(discount.delta, (structure.n_exo,)).astype(float)
        self.delta = delta
        self.discount = discount

        self.assumption_report = None
        self.drift = markov.discount_drift_check(structure.P, delta, drift_horizon)
        if check_assumptions:
            self.assumption_report = check_discount_assumptions(discount, seed=seed)
            if not self.assumption_report.passed:
                failed = [r.name for r in (self.assumption_report.order_preserving,
                                           self.assumption_report.subadditive,
                                           self.assumption_report.dominated) if not r.passed]
                raise ParameterError(f"discount map fails: {', '.join(failed)}")
            if not self.drift.passed:
                raise StabilityAssumptionError(
                    f"sup_z E prod delta(Z_t) >= 1 for every horizon up to {drift_horizon}"
                )

        self._kernel = structure.pair_matrix(self.space)
        self._dominating = structure.pair_matrix(self.space, exo_weights=delta)

    def validate_values(self, v):
        if v.min() < 0:
            x = int(v.argmin())
            raise NumericalDomainError(f"v[{x}] = {v[x]} is negative; value space is [0, b]")
        return v

    def pair_values(self, v, rows):
        return self.reward[rows] + self._kernel[rows] @ self.discount(v)

    def affine_parts(self, sigma):
        c = self.discount.linear_coef
        if c is None:
            return None
        rows = self.space.policy_rows(sigma)
        return self.reward[rows], c * self._kernel[rows].toarray()

    def dominating_operator(self, sigma):
        """Matrix of ``(K f)(x) = sum_z' P(z, z') delta(z') f(x')`` under ``sigma``."""
        return self._dominating[self.space.policy_rows(sigma)].toarray()


def nd_action_value(model, x, a, v):
    return model.action_value(x, a, v)


def compute_nd_upper_bound(model, ctrl=None):
    """
    Fixed point of ``(S v)(x) = sup r + sum_z' P(z, z') delta(z') v(Hbar(y, z'), z')``.

    Uses the global supremum of rewards, the larger of the two readings of
    the bound, so every ``T_sigma`` maps ``[0, b]`` into itself.
    """
    if not model.drift.passed:
        raise StabilityAssumptionError("delta fails the drift condition")
    ctrl = ctrl or IterationControl(tol=1e-10, max_iter=1_000_000, record_trace=False,
                                    divergence_window=10_000)
    envelope = model.structure.envelope_matrix(exo_weights=model.delta)
    r_sup = float(model.reward.max())

    def step(v):
        return r_sup + envelope @ v

    res = successive_approximation(step, np.zeros(model.space.n_states), ctrl,
                                   what="nonlinear-discount upper bound")
    return as_value_vector(res.value, model.space.n_states, "b")
