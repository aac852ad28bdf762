"""
Risk-sensitive decision processes with state-dependent discounting.

Lifetime value follows ``V = R + (beta(Z) / theta) * ln E exp(theta V')`` with
``theta < 0``.  The firm exit problem with an AR(1) discount factor process is
built by :func:`build_firm_exit_model`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import markov
from .core import ActionValueProgram, MarkovStructure, StateActionSpace, as_value_vector
from .errors import (
    NumericalDomainError,
    ParameterError,
    StabilityAssumptionError,
    StructureError,
)

__all__ = [
    "entropic_ce",
    "RiskSensitiveModel",
    "rs_action_value",
    "compute_upper_bound_b",
    "FirmExitParams",
    "FirmExitModel",
    "build_firm_exit_model",
    "continuation_values",
    "exit_threshold",
    "EXIT",
    "CONTINUE",
]

EXIT = 0
CONTINUE = 1

# exp(theta * (v - shift)) below this is treated as at risk of underflow
_UNDERFLOW_GUARD = 1e-250


def entropic_ce(values, probs, theta):
    """
    Entropic certainty equivalent ``(1/theta) * ln sum_i p_i exp(theta * v_i)``.

    Evaluated with the exponent shifted by the minimum value carrying positive
    probability, so every exponent is ``<= 0`` and nothing overflows.  The
    result is clipped into ``[min v, max v]`` over the support to absorb
    rounding.

    Works row-wise when ``values`` and ``probs`` are 2-d.
    """
    v = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    if v.size == 0:
        raise NumericalDomainError("entropic_ce of an empty distribution")
    if v.shape != p.shape:
        raise ParameterError("values and probs must have equal shapes")
    if not theta < 0:
        raise ParameterError(f"theta must be negative, got {theta}")
    if np.any(p < 0) or np.max(np.abs(p.sum(axis=-1) - 1)) > 1e-12:
        raise ParameterError("probs must be nonnegative and sum to 1 within 1e-12")
    support = p > 0
    lo = np.where(support, v, np.inf).min(axis=-1)
    hi = np.where(support, v, -np.inf).max(axis=-1)
    expo = np.where(support, theta * (v - np.expand_dims(lo, -1)), -np.inf)
    total = np.sum(p * np.exp(expo), axis=-1)
    out = lo + np.log(total) / theta
    return np.clip(out, lo, hi)


class RiskSensitiveModel(ActionValueProgram):
    """
    Risk-sensitive model on states ``x = (y, z)``.

    Parameters
    ----------
    structure : MarkovStructure
        Exogenous kernel ``P`` and endogenous law ``y' = H(y, a, z')``.
    reward : array_like, shape (n_states, n_actions)
        ``r(x, a)``; ignored at infeasible pairs.
    beta : array_like, shape (n_exo,)
        State-dependent discount factor ``beta(z) > 0``.
    theta : float
        Risk parameter, strictly negative.
    feasible : array_like of bool, optional
    terminal : array_like of bool, optional
        Pairs whose action value is the constant reward, independent of the
        continuation value (absorbing stopping actions such as exit).
    upper_bound : array_like, optional
        Upper end ``b`` of the value space ``[0, b]``; when present, values
        outside it are rejected.
    enforce_reward_bounds : bool
        Require ``r > 0`` at non-terminal pairs.
    """

    def __init__(
        self,
        structure,
        reward,
        beta,
        theta,
        feasible=None,
        terminal=None,
        labels=None,
        upper_bound=None,
        enforce_reward_bounds=True,
    ):
        if not theta < 0:
            raise ParameterError(f"theta must be negative, got {theta}")
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

        if terminal is None:
            terminal = np.zeros(shape, dtype=bool)
        self.terminal = np.asarray(terminal, dtype=bool)[pairs[:, 0], pairs[:, 1]]

        beta = np.broadcast_to(np.asarray(beta, dtype=float), (structure.n_exo,)).copy()
        if not np.all(np.isfinite(beta)) or np.any(beta <= 0):
            raise ParameterError("beta must be finite and positive")
        self.beta = beta
        self.theta = float(theta)

        live = ~self.terminal
        if enforce_reward_bounds and live.any() and self.reward[live].min() <= 0:
            raise ParameterError("rewards must be strictly positive at non-terminal pairs")
        self.r_lower = float(self.reward.min())
        self.r_upper = float(self.reward.max())

        self._pair_beta = np.where(live, beta[structure.exo_of(pairs[:, 0])], 0.0)
        self._kernel = structure.pair_matrix(self.space)
        # terminal rows carry no continuation
        self._kernel = self._kernel.multiply(live[:, None]).tocsr()
        self._kernel.eliminate_zeros()
        self._kernel.sort_indices()

        self.upper_bound = None if upper_bound is None else as_value_vector(
            upper_bound, self.space.n_states, "upper_bound"
        )

    @property
    def n_exo(self):
        return self.structure.n_exo

    def validate_values(self, v):
        scale = 1e-9 * max(1.0, float(np.max(np.abs(v))))
        if v.min() < -scale:
            x = int(v.argmin())
            raise NumericalDomainError(f"v[{x}] = {v[x]} lies below the value space [0, b]")
        if self.upper_bound is not None:
            over = v - self.upper_bound
            if over.max() > scale:
                x = int(over.argmax())
                raise NumericalDomainError(f"v[{x}] = {v[x]} exceeds b[{x}] = {self.upper_bound[x]}")
        return v

    def certainty_equivalents(self, v, rows):
        """Entropic CE of next-period value for each pair in ``rows``."""
        theta = self.theta
        kernel = self._kernel[rows]
        shift = v.min()
        total = kernel @ np.exp(theta * (v - shift))
        ce = shift + np.log(np.maximum(total, np.finfo(float).tiny)) / theta
        risky = np.flatnonzero((total < _UNDERFLOW_GUARD) & (kernel.getnnz(axis=1) > 0))
        for i in risky:
            start, end = kernel.indptr[i], kernel.indptr[i + 1]
            ce[i] = entropic_ce(v[kernel.indices[start:end]], kernel.data[start:end], theta)
        return ce

    def pair_values(self, v, rows):
        ce = self.certainty_equivalents(v, rows)
        return self.reward[rows] + self._pair_beta[rows] * ce

    def policy_jacobian(self, sigma, v):
        """Derivative of ``T_sigma`` at ``v``: ``beta(z)`` times exponential-tilt weights."""
        rows = self.space.policy_rows(sigma)
        kernel = self._kernel[rows]
        w = np.exp(self.theta * (v - v.min()))
        tilted = kernel.multiply(w[None, :]).tocsr()
        sums = np.asarray(tilted.sum(axis=1)).ravel()
        scale = np.divide(
            self._pair_beta[rows], sums, out=np.zeros_like(sums), where=sums > 0
        )
        return tilted.multiply(scale[:, None]).toarray()

    def linear_majorant(self, sigma, v):
        """``S_sigma v = r_sigma + beta(z) * E v'``, the risk-neutral operator dominating ``T_sigma``."""
        rows = self.space.policy_rows(sigma)
        return self.reward[rows] + self._pair_beta[rows] * (self._kernel[rows] @ v)


def rs_action_value(model, x, a, v):
    return model.action_value(x, a, v)


def compute_upper_bound_b(model, ctrl=None, horizon=10_000, method="direct"):
    """
    Fixed point ``b`` of ``(S v)(x) = r_max + beta(z) * E v(Hbar(y, z'), z')``.

    Parameters
    ----------
    method : {"direct", "iterate"}
        ``direct`` solves the linear system; ``iterate`` runs successive
        approximation with ``ctrl``.

    Raises
    ------
    StabilityAssumptionError
        If no horizon up to ``horizon`` gives ``sup_z E prod beta(Z_t) < 1``.
    """
    from .algorithms import IterationControl, successive_approximation

    st = model.structure
    report = markov.discount_drift_check(st.P, model.beta, horizon)
    if not report.passed:
        raise StabilityAssumptionError(
            f"sup_z E prod beta(Z_t) >= 1 for every horizon up to {horizon}"
        )
    ctrl = ctrl or IterationControl(tol=1e-8, max_iter=1_000_000, record_trace=False)
    beta_x = model.beta[st.exo_of(np.arange(st.n_states))]
    envelope = st.envelope_matrix()
    r_max = model.r_upper

    def step(v):
        return r_max + beta_x * (envelope @ v)

    if method == "direct":
        A = np.eye(st.n_states) - beta_x[:, None] * envelope.toarray()
        b = linalg.solve(A, np.full(st.n_states, r_max))
    elif method == "iterate":
        res = successive_approximation(step, np.full(st.n_states, r_max), ctrl)
        b = res.value
    else:
        raise ParameterError(f"unknown method {method!r}")
    resid = np.max(np.abs(step(b) - b))
    if resid > ctrl.tol * max(1.0, np.max(np.abs(b))):
        raise NumericalDomainError(f"upper bound residual {resid:.3g} exceeds tolerance")
    return b


@dataclass(frozen=True)
class FirmExitParams:
    """Parameters of the firm exit problem; defaults reproduce the published study."""

    rho: float = 0.85
    alpha: float = 0.0062
    kappa: float = 0.99875
    n: int = 400
    s: float = 100.0
    theta: float = -1.0
    m_std: float = 3.0

    def __post_init__(self):
        if not self.theta < 0:
            raise ParameterError(f"theta must be negative, got {self.theta}")
        if not self.kappa > 0:
            raise ParameterError("kappa must be positive")
        if self.s < 0:
            raise ParameterError("scrap value s must be nonnegative")


class FirmExitModel(RiskSensitiveModel):
    """Risk-sensitive firm exit model with grid and stationary distribution attached."""

    def __init__(self, params, chain, stationary, **kwargs):
        super().__init__(**kwargs)
        self.params = params
        self.grid = chain.grid
        self.chain = chain
        self.stationary = stationary


def build_firm_exit_model(params=FirmExitParams(), drift_horizon=10_000):
    """
    Firm exit problem on a Tauchen grid for productivity ``x``.

    Action 0 (EXIT) pays the scrap value ``s`` and ends the problem; action 1
    (CONTINUE) pays profit ``pi(x) = x`` and discounts next-period value at
    ``beta(x) = kappa * x`` through the entropic certainty equivalent.
    """
    spec = markov.Ar1Spec(
        rho=params.rho, alpha=params.alpha, mu=1 - params.rho, n=params.n, m_std=params.m_std
    )
    chain = markov.tauchen(spec)
    grid = chain.grid
    if grid.min() <= 0:
        raise ParameterError("productivity grid must be strictly positive")
    beta = params.kappa * grid
    drift = markov.discount_drift_check(chain, beta, drift_horizon)
    if not drift.passed:
        raise StabilityAssumptionError(
            f"discount process fails the drift condition up to horizon {drift_horizon}"
        )
    n = params.n
    reward = np.column_stack([np.full(n, params.s), grid])
    terminal = np.column_stack([np.ones(n, bool), np.zeros(n, bool)])
    structure = MarkovStructure.exogenous_only(chain.p, 2)
    kwargs = dict(
        structure=structure,
        reward=reward,
        beta=beta,
        theta=params.theta,
        terminal=terminal,
        labels=grid,
        enforce_reward_bounds=True,
    )
    stationary = markov.stationary_distribution(chain)
    model = FirmExitModel(params, chain, stationary, **kwargs)
    b = compute_upper_bound_b(model, horizon=drift_horizon)
    model.upper_bound = b
    model.drift = drift
    return model


def continuation_values(model, v):
    """Value of continuing one more period at every state, ``h(x) = pi(x) + beta(x) CE(v)``."""
    rows = model.space.pair_index[:, CONTINUE]
    return model.pair_values(np.asarray(v, dtype=float), rows)


def exit_threshold(model, v_star, sigma_star):
    """
    Smallest productivity at which the firm continues.

    Returns None when the firm exits everywhere.  Raises StructureError when
    the policy is not a cutoff rule (exit strictly below some index, continue
    at and above it).
    """
    sigma = np.asarray(sigma_star)
    cont = np.flatnonzero(sigma == CONTINUE)
    if cont.size == 0:
        return None
    first = int(cont[0])
    if not np.all(sigma[first:] == CONTINUE):
        gap = first + int(np.flatnonzero(sigma[first:] != CONTINUE)[0])
        raise StructureError(
            f"policy is not a cutoff rule: continue at index {first} but exit at {gap}"
        )
    return float(model.grid[first])
