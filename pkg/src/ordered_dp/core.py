"""
Abstract dynamic programs on finite value spaces.

A dynamic program here is a family of order-preserving policy operators
``T_sigma`` acting on real vectors with the pointwise order.  Concrete model
families subclass :class:`ActionValueProgram` and supply a single vectorised
method, :meth:`ActionValueProgram.pair_values`, which returns
``(T_sigma v)(x)`` for feasible state-action pairs ``(x, sigma(x))``.  Greedy
selection, the Bellman operator and policy operators are all derived from it.

Value vectors and policies are plain numpy arrays: a value vector is a 1-d
float array indexed by states (or by feasible pairs for Q-factor models) and a
policy is a 1-d integer array holding one action index per state.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ContractError, FeasibilityError, NumericalDomainError, ParameterError

__all__ = [
    "StateActionSpace",
    "MarkovStructure",
    "DynamicProgram",
    "ActionValueProgram",
    "FiniteMDP",
    "as_value_vector",
    "check_policy",
    "pointwise_le",
    "apply_policy_operator",
    "greedy_policy",
    "apply_bellman",
]


class StateActionSpace:
    """
    Finite states, finite actions and the feasibility correspondence.

    Parameters
    ----------
    feasible : array_like of bool, shape (n_states, n_actions)
        ``feasible[x, a]`` is True iff action ``a`` is admissible at state ``x``.
    labels : array_like, optional
        Per-state coordinates (length ``n_states`` along the first axis).
    """

    def __init__(self, feasible, labels=None):
        mask = np.array(feasible, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
            raise ParameterError("feasible must be a nonempty (n_states, n_actions) mask")
        empty = np.flatnonzero(~mask.any(axis=1))
        if empty.size:
            raise ParameterError(f"state {int(empty[0])} has no feasible action")
        mask.setflags(write=False)
        self.feasible = mask
        self.n_states, self.n_actions = mask.shape

        if labels is not None:
            labels = np.asarray(labels, dtype=float)
            if labels.shape[0] != self.n_states:
                raise ParameterError(
                    f"labels has length {labels.shape[0]}, expected {self.n_states}"
                )
            labels.setflags(write=False)
        self.labels = labels

        # row-major: state-major, action-minor ascending
        self.pairs = np.argwhere(mask)
        self.pairs.setflags(write=False)
        self.n_pairs = len(self.pairs)
        index = np.full(mask.shape, -1, dtype=np.intp)
        index[self.pairs[:, 0], self.pairs[:, 1]] = np.arange(self.n_pairs)
        index.setflags(write=False)
        self.pair_index = index
        self.pair_state = self.pairs[:, 0]

    @classmethod
    def full(cls, n_states, n_actions, labels=None):
        """Every action feasible at every state."""
        return cls(np.ones((n_states, n_actions), dtype=bool), labels=labels)

    def actions_at(self, x):
        return np.flatnonzero(self.feasible[x])

    def policy_rows(self, sigma):
        """Pair indices ``(x, sigma(x))`` for every state."""
        return self.pair_index[np.arange(self.n_states), sigma]

    def __repr__(self):
        return (
            f"StateActionSpace(n_states={self.n_states}, n_actions={self.n_actions}, "
            f"n_pairs={self.n_pairs})"
        )


def as_value_vector(v, size, name="v"):
    """Validate and return ``v`` as a finite float vector of length ``size``."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != size:
        raise ContractError(f"{name} has shape {arr.shape}, expected ({size},)")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise NumericalDomainError(f"{name}[{bad}] = {arr[bad]} is not finite")
    return arr


def check_policy(space, sigma):
    """Return ``sigma`` as an int array after checking ``sigma(x)`` is in Gamma(x)."""
    s = np.asarray(sigma)
    if s.ndim != 1 or s.shape[0] != space.n_states:
        raise ContractError(f"policy has shape {s.shape}, expected ({space.n_states},)")
    if not np.issubdtype(s.dtype, np.integer):
        if not np.all(np.equal(np.mod(s, 1), 0)):
            raise FeasibilityError("policy entries must be integer action indices")
        s = s.astype(np.intp)
    out_of_range = (s < 0) | (s >= space.n_actions)
    if out_of_range.any():
        x = int(np.flatnonzero(out_of_range)[0])
        raise FeasibilityError(f"action {int(s[x])} at state {x} is out of range")
    ok = space.feasible[np.arange(space.n_states), s]
    if not ok.all():
        x = int(np.flatnonzero(~ok)[0])
        raise FeasibilityError(f"action {int(s[x])} is not feasible at state {x}")
    return s.astype(np.intp, copy=False)


@dataclass(frozen=True)
class MarkovStructure:
    """
    Exogenous Markov chain plus an endogenous law of motion.

    States are pairs ``x = (y, z)`` stored y-major, ``x = y * n_exo + z``.
    Next period ``z'`` is drawn from ``P[z]`` and ``y' = next_endo[y, a, z']``.
    A model with no endogenous component has ``n_endo == 1``.
    """

    P: np.ndarray
    next_endo: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        nxt = np.asarray(self.next_endo, dtype=np.intp)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ParameterError("P must be square")
        if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12, rtol=0):
            raise ParameterError("P must be a stochastic matrix")
        if nxt.ndim != 3 or nxt.shape[2] != P.shape[0]:
            raise ParameterError("next_endo must have shape (n_endo, n_actions, n_exo)")
        if np.any(nxt < 0) or np.any(nxt >= nxt.shape[0]):
            raise ParameterError("next_endo entries must index endogenous states")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "next_endo", nxt)

    @classmethod
    def exogenous_only(cls, P, n_actions):
        P = np.asarray(P, dtype=float)
        return cls(P, np.zeros((1, n_actions, P.shape[0]), dtype=np.intp))

    @property
    def n_exo(self):
        return self.P.shape[0]

    @property
    def n_endo(self):
        return self.next_endo.shape[0]

    @property
    def n_actions(self):
        return self.next_endo.shape[1]

    @property
    def n_states(self):
        return self.n_endo * self.n_exo

    def exo_of(self, x):
        return np.asarray(x) % self.n_exo

    def endo_of(self, x):
        return np.asarray(x) // self.n_exo

    def successors(self, x, a):
        """Next-state index for every ``z'``."""
        y, z = divmod(int(x), self.n_exo)
        return self.next_endo[y, a] * self.n_exo + np.arange(self.n_exo)

    def pair_matrix(self, space, exo_weights=None):
        """
        CSR matrix with one row per feasible pair and one column per state.

        Row ``(x, a)`` holds ``P(z, z') * w(z')`` at column ``(next_endo[y, a, z'], z')``.
        Zero-probability successors are dropped.
        """
        pairs = space.pairs
        y, z = np.divmod(pairs[:, 0], self.n_exo)
        cols = self.next_endo[y, pairs[:, 1], :] * self.n_exo + np.arange(self.n_exo)
        data = self.P[z, :]
        if exo_weights is not None:
            data = data * np.asarray(exo_weights, dtype=float)[None, :]
        return _csr_from_dense_rows(data, cols, self.n_states)

    def envelope_matrix(self, exo_weights=None):
        """Like :meth:`pair_matrix` but per state, using the action-maximal successor."""
        upper = self.next_endo.max(axis=1)  # (n_endo, n_exo)
        x = np.arange(self.n_states)
        y, z = np.divmod(x, self.n_exo)
        cols = upper[y, :] * self.n_exo + np.arange(self.n_exo)
        data = self.P[z, :]
        if exo_weights is not None:
            data = data * np.asarray(exo_weights, dtype=float)[None, :]
        return _csr_from_dense_rows(data, cols, self.n_states)


def _csr_from_dense_rows(data, cols, n_cols):
    keep = data != 0
    indptr = np.concatenate([[0], np.cumsum(keep.sum(axis=1))])
    m = sparse.csr_matrix(
        (data[keep], cols[keep], indptr), shape=(data.shape[0], n_cols)
    )
    m.sort_indices()
    return m


class DynamicProgram(abc.ABC):
    """
    A family of policy operators on a finite value space.

    Subclasses set ``self.space`` and implement the three operator methods.
    ``value_size`` is the length of value vectors (``n_states`` unless the
    program works on Q-factors).
    """

    space: StateActionSpace

    @property
    def value_size(self):
        return self.space.n_states

    @abc.abstractmethod
    def policy_operator(self, sigma, v):
        """Return ``T_sigma v``; ``sigma`` is already validated."""

    @abc.abstractmethod
    def bellman_greedy(self, v):
        """Return ``(Tv, sigma)`` with sigma v-greedy and ``T_sigma v == Tv`` exactly."""

    def bellman(self, v):
        return self.bellman_greedy(v)[0]

    def greedy(self, v):
        return self.bellman_greedy(v)[1]

    def affine_parts(self, sigma):
        """``(r_sigma, K_sigma)`` with ``T_sigma v = r_sigma + K_sigma v``, or None."""
        return None

    def policy_jacobian(self, sigma, v):
        """Jacobian of ``T_sigma`` at ``v`` for smooth models, or None."""
        return None

    def default_initial(self):
        return np.zeros(self.value_size)

    def validate_values(self, v):
        """Hook for models whose value space is an order interval."""
        return v


class ActionValueProgram(DynamicProgram):
    """
    Dynamic program defined through per-pair action values.

    ``pair_values(v, rows)`` must evaluate each row independently of the
    others so that greedy and policy evaluation share one arithmetic path.
    """

    @abc.abstractmethod
    def pair_values(self, v, rows):
        """Action values for the feasible pairs ``rows`` (indices into ``space.pairs``)."""

    def _checked_pair_values(self, v, rows):
        out = self.pair_values(v, rows)
        bad = ~np.isfinite(out)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            x, a = self.space.pairs[rows[i]]
            raise NumericalDomainError(
                f"action value at state {int(x)}, action {int(a)} is {out[i]}"
            )
        return out

    def action_value(self, x, a, v):
        """``(T_sigma v)(x)`` for any sigma with ``sigma(x) == a``."""
        row = self.space.pair_index[x, a]
        if row < 0:
            raise FeasibilityError(f"action {a} is not feasible at state {x}")
        v = self.validate_values(as_value_vector(v, self.value_size))
        return float(self._checked_pair_values(v, np.array([row]))[0])

    def action_values(self, v):
        """Dense ``(n_states, n_actions)`` matrix with ``-inf`` at infeasible pairs."""
        sp = self.space
        vals = self._checked_pair_values(v, np.arange(sp.n_pairs))
        q = np.full((sp.n_states, sp.n_actions), -np.inf)
        q[sp.pairs[:, 0], sp.pairs[:, 1]] = vals
        return q

    def policy_operator(self, sigma, v):
        return self._checked_pair_values(v, self.space.policy_rows(sigma))

    def bellman_greedy(self, v):
        q = self.action_values(v)
        sigma = np.argmax(q, axis=1)  # first maximiser = lowest index
        return q[np.arange(self.space.n_states), sigma], sigma


class FiniteMDP(ActionValueProgram):
    """
    Discounted Markov decision process with finite states and actions.

    Parameters
    ----------
    reward : array_like, shape (n_states, n_actions)
        Reward ``r(x, a)``; entries at infeasible pairs are ignored.
    transitions : array_like, shape (n_states, n_actions, n_states)
        ``P(x, a, x')``; rows at feasible pairs must be probability vectors.
    beta : float
        Discount factor in (0, 1).
    feasible : array_like of bool, optional
        Feasibility mask; defaults to all actions feasible.
    """

    def __init__(self, reward, transitions, beta, feasible=None, labels=None):
        reward = np.asarray(reward, dtype=float)
        P = np.asarray(transitions, dtype=float)
        if reward.ndim != 2 or P.shape != reward.shape + (reward.shape[0],):
            raise ParameterError("transitions must have shape (n_states, n_actions, n_states)")
        if feasible is None:
            feasible = np.ones(reward.shape, dtype=bool)
        if not 0 < beta < 1:
            raise ParameterError(f"beta must lie in (0, 1), got {beta}")
        self.space = StateActionSpace(feasible, labels=labels)
        pairs = self.space.pairs
        rows = P[pairs[:, 0], pairs[:, 1]]
        if np.any(rows < 0) or not np.allclose(rows.sum(axis=1), 1.0, atol=1e-12, rtol=0):
            raise ParameterError("transition rows at feasible pairs must be probability vectors")
        r = reward[pairs[:, 0], pairs[:, 1]]
        if not np.all(np.isfinite(r)):
            raise ParameterError("rewards at feasible pairs must be finite")
        self.beta = float(beta)
        self.reward = r
        self.transitions = sparse.csr_matrix(rows)
        self.transitions.sort_indices()

    def pair_values(self, v, rows):
        return self.reward[rows] + self.beta * (self.transitions[rows] @ v)

    def affine_parts(self, sigma):
        rows = self.space.policy_rows(sigma)
        return self.reward[rows], self.beta * self.transitions[rows].toarray()

    def default_initial(self):
        if self.reward.min() >= 0:
            return np.zeros(self.value_size)
        return np.full(self.value_size, self.reward.min() / (1 - self.beta))


def pointwise_le(v, w):
    """True iff ``v[i] <= w[i]`` for every index."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise ContractError(f"length mismatch: {v.shape} vs {w.shape}")
    return bool(np.all(v <= w))


def _prepare(adp, v):
    v = as_value_vector(v, adp.value_size)
    return adp.validate_values(v)


def apply_policy_operator(adp, sigma, v):
    """Return ``T_sigma v``."""
    sigma = check_policy(adp.space, sigma)
    return adp.policy_operator(sigma, _prepare(adp, v))


def greedy_policy(adp, v):
    """The v-greedy policy, ties broken towards the lowest feasible action index."""
    return adp.greedy(_prepare(adp, v))


def apply_bellman(adp, v):
    """Return ``Tv``, the pointwise maximum of ``T_sigma v`` over policies."""
    return adp.bellman(_prepare(adp, v))
