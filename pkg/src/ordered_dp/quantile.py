"""
Quantile-preference decision processes in Q-factor form.

Q-factors live on the feasible pairs ``G``.  The policy operator is

    (S_sigma q)(x, a) = r(x, a) + beta * Quantile_tau[ q(x', sigma(x')) ]

with ``x' = (H(y, a, z'), z')`` and ``z' ~ P(z, .)``; the Bellman operator
replaces ``q(x', sigma(x'))`` by ``max_a' q(x', a')``.
"""
from __future__ import annotations

import numpy as np

from .core import DynamicProgram, StateActionSpace, as_value_vector, check_policy
from .errors import NumericalDomainError, ParameterError

__all__ = [
    "quantile",
    "QuantileModel",
    "q_policy_operator",
    "q_bellman",
    "greedy_from_q",
]

_CUM_SLACK = 1e-15


def quantile(atoms, weights, tau):
    """
    ``min{k : sum_i w_i 1{atom_i <= k} >= tau}`` for a finite distribution.

    The answer is always one of the atoms.  Cumulative weights are compared
    against ``tau - 1e-15`` so one-ulp accumulation noise cannot move it.
    """
    a = np.asarray(atoms, dtype=float)
    w = np.asarray(weights, dtype=float)
    if a.size == 0:
        raise NumericalDomainError("quantile of an empty distribution")
    if a.shape != w.shape or a.ndim != 1:
        raise ParameterError("atoms and weights must be 1-d arrays of equal length")
    if not 0 < tau < 1:
        raise ParameterError(f"tau must lie in (0, 1), got {tau}")
    order = np.argsort(a, kind="stable")
    cum = np.cumsum(w[order])
    hit = np.flatnonzero(cum >= tau - _CUM_SLACK)
    idx = hit[0] if hit.size else len(a) - 1
    return float(a[order[idx]])


def _row_quantiles(vals, probs, tau):
    """Row-wise quantile of padded ``(rows, width)`` arrays (padding has prob 0, value +inf)."""
    order = np.argsort(vals, axis=1, kind="stable")
    sv = np.take_along_axis(vals, order, axis=1)
    cum = np.cumsum(np.take_along_axis(probs, order, axis=1), axis=1)
    real = np.isfinite(sv)
    hit = (cum >= tau - _CUM_SLACK) & real
    n_real = real.sum(axis=1)
    idx = np.where(hit.any(axis=1), hit.argmax(axis=1), n_real - 1)
    return sv[np.arange(len(sv)), idx]


class QuantileModel(DynamicProgram):
    """
    Q-factor quantile model.

    Parameters
    ----------
    structure : MarkovStructure
    reward : array_like, shape (n_states, n_actions)
    beta : float in (0, 1)
    tau : float in (0, 1)
    feasible : array_like of bool, optional
    """

    def __init__(self, structure, reward, beta, tau, feasible=None, labels=None,
                 check_bounds=False):
        if not 0 < beta < 1:
            raise ParameterError(f"beta must lie in (0, 1), got {beta}")
        if not 0 < tau < 1:
            raise ParameterError(f"tau must lie in (0, 1), got {tau}")
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
        if not np.all(np.isfinite(self.reward)):
            raise ParameterError("rewards at feasible pairs must be finite")
        self.beta = float(beta)
        self.tau = float(tau)
        self.r_lower = float(self.reward.min())
        self.r_upper = float(self.reward.max())
        self.check_bounds = check_bounds

        kernel = structure.pair_matrix(self.space)
        width = int(np.diff(kernel.indptr).max())
        self._succ = np.zeros((self.space.n_pairs, width), dtype=np.intp)
        self._prob = np.zeros((self.space.n_pairs, width))
        self._pad = np.ones((self.space.n_pairs, width), dtype=bool)
        for i in range(self.space.n_pairs):
            lo, hi = kernel.indptr[i], kernel.indptr[i + 1]
            self._succ[i, : hi - lo] = kernel.indices[lo:hi]
            self._prob[i, : hi - lo] = kernel.data[lo:hi]
            self._pad[i, : hi - lo] = False

    @property
    def value_size(self):
        return self.space.n_pairs

    @property
    def bounds(self):
        """Value space ``[r_lower / (1 - beta), r_upper / (1 - beta)]``."""
        return self.r_lower / (1 - self.beta), self.r_upper / (1 - self.beta)

    def default_initial(self):
        return np.full(self.value_size, self.bounds[0])

    def validate_values(self, q):
        if self.check_bounds:
            lo, hi = self.bounds
            slack = 1e-9 * max(1.0, abs(lo), abs(hi))
            if q.min() < lo - slack or q.max() > hi + slack:
                raise NumericalDomainError(
                    f"Q-factor outside the value space [{lo}, {hi}]: "
                    f"range [{q.min()}, {q.max()}]"
                )
        return q

    def _apply(self, state_values):
        vals = np.where(self._pad, np.inf, state_values[self._succ])
        return self.reward + self.beta * _row_quantiles(vals, self._prob, self.tau)

    def state_values(self, q, sigma=None):
        """``q(x, sigma(x))``, or ``max_a q(x, a)`` when sigma is None."""
        sp = self.space
        if sigma is None:
            dense = np.full((sp.n_states, sp.n_actions), -np.inf)
            dense[sp.pairs[:, 0], sp.pairs[:, 1]] = q
            return dense.max(axis=1)
        return q[sp.policy_rows(sigma)]

    def policy_operator(self, sigma, q):
        return self._apply(self.state_values(q, sigma))

    def greedy(self, q):
        sp = self.space
        dense = np.full((sp.n_states, sp.n_actions), -np.inf)
        dense[sp.pairs[:, 0], sp.pairs[:, 1]] = q
        return np.argmax(dense, axis=1)

    def bellman_greedy(self, q):
        sigma = self.greedy(q)
        return self.policy_operator(sigma, q), sigma


def _prep(model, q):
    return model.validate_values(as_value_vector(q, model.value_size, "q"))


def q_policy_operator(model, sigma, q):
    return model.policy_operator(check_policy(model.space, sigma), _prep(model, q))


def q_bellman(model, q):
    return model.bellman(_prep(model, q))


def greedy_from_q(model, q):
    return model.greedy(as_value_vector(q, model.value_size, "q"))
