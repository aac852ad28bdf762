"""Seeded random instances of every model family, sized for brute-force checks."""
from __future__ import annotations

import numpy as np

from .core import FiniteMDP, MarkovStructure
from .data_valuation import DataValuationModel
from .nonlinear_discount import (
    NonlinearDiscountModel,
    capped_linear_discount,
    linear_discount,
    sqrt_tail_discount,
)
from .quantile import QuantileModel
from .risk_sensitive import RiskSensitiveModel

__all__ = [
    "random_stochastic_matrix",
    "random_feasible_mask",
    "random_structure",
    "random_mdp",
    "random_risk_sensitive",
    "random_quantile",
    "random_nonlinear_discount",
    "random_data_valuation",
    "FAMILIES",
]


def random_stochastic_matrix(rng, n, sparsity=0.0):
    p = rng.random((n, n)) ** 2
    if sparsity:
        p *= rng.random((n, n)) >= sparsity
        p[np.arange(n), rng.integers(0, n, n)] += 0.1
    return p / p.sum(axis=1, keepdims=True)


def random_feasible_mask(rng, n_states, n_actions):
    mask = rng.random((n_states, n_actions)) < 0.7
    mask[np.arange(n_states), rng.integers(0, n_actions, n_states)] = True
    return mask


def random_structure(rng, n_endo, n_exo, n_actions):
    P = random_stochastic_matrix(rng, n_exo, sparsity=0.3)
    nxt = rng.integers(0, n_endo, (n_endo, n_actions, n_exo))
    return MarkovStructure(P, nxt)


def _sizes(rng, max_states=4, max_actions=3):
    n_exo = int(rng.integers(1, 3))
    n_endo = int(rng.integers(1, max_states // n_exo + 1))
    n_actions = int(rng.integers(1, max_actions + 1))
    return n_endo, n_exo, n_actions


def random_mdp(rng, max_states=4, max_actions=3):
    n = int(rng.integers(1, max_states + 1))
    k = int(rng.integers(1, max_actions + 1))
    P = rng.random((n, k, n)) ** 2
    P /= P.sum(axis=2, keepdims=True)
    reward = rng.uniform(0.0, 2.0, (n, k))
    beta = float(rng.uniform(0.5, 0.95))
    return FiniteMDP(reward, P, beta, feasible=random_feasible_mask(rng, n, k))


def random_risk_sensitive(rng, max_states=4, max_actions=3):
    n_endo, n_exo, k = _sizes(rng, max_states, max_actions)
    st = random_structure(rng, n_endo, n_exo, k)
    reward = rng.uniform(0.3, 2.0, (st.n_states, k))
    beta = rng.uniform(0.5, 0.95, n_exo)
    theta = float(rng.uniform(-2.0, -0.2))
    return RiskSensitiveModel(st, reward, beta, theta,
                              feasible=random_feasible_mask(rng, st.n_states, k))


def random_quantile(rng, max_states=4, max_actions=3):
    n_endo, n_exo, k = _sizes(rng, max_states, max_actions)
    st = random_structure(rng, n_endo, n_exo, k)
    reward = rng.uniform(0.0, 2.0, (st.n_states, k))
    return QuantileModel(st, reward, float(rng.uniform(0.5, 0.9)), float(rng.uniform(0.05, 0.95)),
                         feasible=random_feasible_mask(rng, st.n_states, k))


def random_nonlinear_discount(rng, max_states=4, max_actions=3):
    n_endo, n_exo, k = _sizes(rng, max_states, max_actions)
    st = random_structure(rng, n_endo, n_exo, k)
    reward = rng.uniform(0.0, 2.0, (st.n_states, k))
    c = float(rng.uniform(0.5, 0.9))
    kind = int(rng.integers(0, 3))
    if kind == 0:
        discount = linear_discount(c)
    elif kind == 1:
        discount = capped_linear_discount(c, float(rng.uniform(1.0, 5.0)))
    else:
        discount = sqrt_tail_discount(c)
    return NonlinearDiscountModel(st, reward, discount,
                                  feasible=random_feasible_mask(rng, st.n_states, k))


def random_data_valuation(rng, nb=3, ns=4):
    """
    Random fixture satisfying the drift assumption by construction.

    ``lambda`` is the smallest positive constant making the drift inequality
    hold on the grid for the drawn ``alpha``; the discount grid is then scaled
    so that ``b2 (alpha + lambda / pi0) < 1``.
    """
    s_grid = np.arange(ns, dtype=float)
    P = random_stochastic_matrix(rng, ns)
    Q = random_stochastic_matrix(rng, nb)
    profit = rng.uniform(0.5, 1.5, ns)
    alpha = float(rng.uniform(0.2, 0.8))
    lam = max(float(np.max(P @ profit - alpha * profit)), 0.0) + 1e-3
    target = 1.0 / (alpha + lam / profit.min())
    b2 = float(rng.uniform(0.3, 0.95)) * target
    b_grid = np.sort(rng.uniform(0.3, 1.0, nb)) * b2
    b_grid[-1] = b2
    return DataValuationModel(b_grid, s_grid, Q, P, profit, alpha, lam)


FAMILIES = {
    "mdp": random_mdp,
    "risk_sensitive": random_risk_sensitive,
    "quantile": random_quantile,
    "nonlinear_discount": random_nonlinear_discount,
}
