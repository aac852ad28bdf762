"""
Valuation of firm-specific data as an affine fixed point problem.

The firm's value on the grid ``(b, s)`` of discount factors and data stocks
solves ``v = pi + K v`` with

    (K f)(b, s) = sum_{b', s'} b' f(b', s') Q(b, b') P(s, s').

Value vectors are flattened b-major: index ``i * n_s + j`` is ``(b_i, s_j)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .algorithms import IterationControl, successive_approximation
from .errors import NumericalDomainError, ParameterError, StabilityAssumptionError
from .markov import StochasticMatrix

__all__ = [
    "ProfitTechnology",
    "static_profit",
    "DataValuationModel",
    "apply_K",
    "DriftCheck",
    "check_drift",
    "solve_data_valuation",
    "load_model_json",
    "model_to_dict",
    "model_from_dict",
]

DIRECT_SOLVE_LIMIT = 4096


@dataclass(frozen=True)
class ProfitTechnology:
    """Cobb-Douglas technology ``a(s) k^a1 l^a2`` with factor prices ``w`` and ``r_rental``."""

    a_of_s: np.ndarray
    alpha1: float
    alpha2: float
    w: float
    r_rental: float

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.alpha2 > 0 and self.alpha1 + self.alpha2 < 1):
            raise ParameterError("need alpha1, alpha2 > 0 and alpha1 + alpha2 < 1")
        if not (self.w > 0 and self.r_rental > 0):
            raise ParameterError("factor prices must be positive")
        object.__setattr__(self, "a_of_s", np.asarray(self.a_of_s, dtype=float))


def static_profit(tech, s=None):
    """
    Maximised flow profit ``max_{k,l} a(s) k^a1 l^a2 - w l - r k``.

    Closed form: ``(1 - a1 - a2) * (a(s) (a1/r)^a1 (a2/w)^a2) ** (1 / (1 - a1 - a2))``.
    Returns the full vector over the grid when ``s`` is None.
    """
    a = tech.a_of_s if s is None else tech.a_of_s[s]
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise NumericalDomainError("productivity a(s) must be positive")
    a1, a2 = tech.alpha1, tech.alpha2
    scale = 1 - a1 - a2
    core = a * (a1 / tech.r_rental) ** a1 * (a2 / tech.w) ** a2
    out = scale * core ** (1 / scale)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DataValuationModel:
    """
    Parameters
    ----------
    b_grid : discount factors, all in ``(0, inf)``
    s_grid : data stock grid
    Q, P : StochasticMatrix or array over ``b_grid`` / ``s_grid``
    profit : per-s profits, strictly positive
    alpha_drift, lambda_drift : constants with ``E[pi(s') | s] <= alpha pi(s) + lambda``
    """

    b_grid: np.ndarray
    s_grid: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    profit: np.ndarray
    alpha_drift: float
    lambda_drift: float

    def __post_init__(self):
        b = np.asarray(self.b_grid, dtype=float)
        s = np.asarray(self.s_grid, dtype=float)
        Q = StochasticMatrix(getattr(self.Q, "p", self.Q)).p
        P = StochasticMatrix(getattr(self.P, "p", self.P)).p
        pi = np.asarray(self.profit, dtype=float)
        if Q.shape[0] != b.size or P.shape[0] != s.size or pi.shape != s.shape:
            raise ParameterError("grid, kernel and profit sizes disagree")
        if b.min() <= 0:
            raise ParameterError("discount grid must lie in (0, inf)")
        if pi.min() <= 0:
            raise ParameterError("profits must be strictly positive")
        if not (self.alpha_drift > 0 and self.lambda_drift > 0):
            raise ParameterError("alpha_drift and lambda_drift must be positive")
        gap = P @ pi - (self.alpha_drift * pi + self.lambda_drift)
        if gap.max() > 1e-12 * max(1.0, pi.max()):
            raise ParameterError(
                f"drift inequality fails at s index {int(gap.argmax())} by {gap.max():.3g}"
            )
        for name, val in (("b_grid", b), ("s_grid", s), ("Q", Q), ("P", P), ("profit", pi)):
            object.__setattr__(self, name, val)

    @property
    def b1(self):
        return float(self.b_grid.min())

    @property
    def b2(self):
        return float(self.b_grid.max())

    @property
    def pi0(self):
        return float(self.profit.min())

    @property
    def shape(self):
        return self.b_grid.size, self.s_grid.size

    @property
    def size(self):
        return self.b_grid.size * self.s_grid.size

    def profit_flat(self):
        return np.tile(self.profit, self.b_grid.size)

    def K_matrix(self):
        return np.kron(self.Q * self.b_grid[None, :], self.P)


def apply_K(model, v):
    """``(K v)(b, s) = sum b' v(b', s') Q(b, b') P(s, s')`` on the flattened grid."""
    nb, ns = model.shape
    F = np.asarray(v, dtype=float).reshape(nb, ns)
    return ((model.Q * model.b_grid[None, :]) @ F @ model.P.T).ravel()


@dataclass(frozen=True)
class DriftCheck:
    rho: float
    e: np.ndarray
    passed: bool
    inequality_holds: bool
    max_violation: float


def check_drift(model):
    """
    Build ``e(b, s) = (b2 / b) pi(s)`` and ``rho = b2 (alpha + lambda / pi0)``,
    and verify ``K e <= rho e`` pointwise.  ``passed`` requires ``rho < 1`` too.
    """
    e = np.outer(model.b2 / model.b_grid, model.profit).ravel()
    rho = model.b2 * (model.alpha_drift + model.lambda_drift / model.pi0)
    excess = apply_K(model, e) - rho * e
    holds = bool(excess.max() <= 1e-12 * max(1.0, e.max()))
    return DriftCheck(float(rho), e, bool(holds and rho < 1), holds, float(excess.max()))


def solve_data_valuation(model, method=None, ctrl=IterationControl(tol=1e-12, max_iter=1_000_000),
                         callback=None):
    """
    Solve ``v = pi + K v``.

    ``method="direct"`` solves ``(I - K) v = pi``; ``"iterate"`` runs
    successive approximation from zero, whose iterates increase monotonically.
    The default is direct up to ``DIRECT_SOLVE_LIMIT`` unknowns.

    Raises
    ------
    StabilityAssumptionError
        If the drift check fails.
    """
    drift = check_drift(model)
    if not drift.passed:
        raise StabilityAssumptionError(
            f"drift check fails: rho = {drift.rho:.6g}, Ke <= rho e holds: {drift.inequality_holds}"
        )
    if method is None:
        method = "direct" if model.size <= DIRECT_SOLVE_LIMIT else "iterate"
    pi = model.profit_flat()
    if method == "direct":
        A = np.eye(model.size) - model.K_matrix()
        try:
            v = linalg.solve(A, pi)
        except linalg.LinAlgError as exc:
            raise NumericalDomainError(f"singular system: {exc}") from exc
    elif method == "iterate":
        res = successive_approximation(
            lambda f: pi + apply_K(model, f), np.zeros(model.size), ctrl, callback,
            what="data valuation",
        )
        v = res.value
    else:
        raise ParameterError(f"unknown method {method!r}")
    return v


def model_to_dict(model):
    return {
        "b_grid": model.b_grid.tolist(),
        "s_grid": model.s_grid.tolist(),
        "Q": model.Q.tolist(),
        "P": model.P.tolist(),
        "profit": model.profit.tolist(),
        "alpha_drift": model.alpha_drift,
        "lambda_drift": model.lambda_drift,
    }


_FIXTURE_KEYS = {"b_grid", "s_grid", "Q", "P", "profit", "technology", "alpha_drift",
                 "lambda_drift"}
_TECH_KEYS = {"a_of_s", "alpha1", "alpha2", "w", "r_rental"}


def model_from_dict(data):
    """Build a model from a fixture mapping; ``profit`` or ``technology`` must be given."""
    unknown = set(data) - _FIXTURE_KEYS
    if unknown:
        raise ParameterError(f"unknown data valuation fields: {sorted(unknown)}")
    if ("profit" in data) == ("technology" in data):
        raise ParameterError("give exactly one of 'profit' or 'technology'")
    if "technology" in data:
        tech = data["technology"]
        bad = set(tech) - _TECH_KEYS
        if bad:
            raise ParameterError(f"unknown technology fields: {sorted(bad)}")
        profit = static_profit(ProfitTechnology(**tech))
    else:
        profit = data["profit"]
    try:
        return DataValuationModel(
            b_grid=data["b_grid"], s_grid=data["s_grid"], Q=data["Q"], P=data["P"],
            profit=profit, alpha_drift=data["alpha_drift"], lambda_drift=data["lambda_drift"],
        )
    except KeyError as exc:
        raise ParameterError(f"missing data valuation field {exc.args[0]!r}") from exc


def load_model_json(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
