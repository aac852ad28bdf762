"""
Finite Markov chain utilities: Tauchen discretisation, stochastic matrix
checks, stationary distributions and discount drift diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import ConvergenceError, ParameterError

__all__ = [
    "StochasticMatrix",
    "Ar1Spec",
    "tauchen",
    "stationary_distribution",
    "discount_drift_check",
    "DriftReport",
]


@dataclass(frozen=True)
class StochasticMatrix:
    """Row-stochastic matrix ``p`` with an optional grid of state values."""

    p: np.ndarray
    grid: np.ndarray | None = None

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] == 0:
            raise ParameterError(f"stochastic matrix must be square, got shape {p.shape}")
        if np.any(p < 0):
            raise ParameterError("stochastic matrix has a negative entry")
        dev = np.abs(p.sum(axis=1) - 1.0)
        if dev.max() > 1e-12:
            raise ParameterError(
                f"row {int(dev.argmax())} sums to {p[dev.argmax()].sum()!r}, not 1"
            )
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        if self.grid is not None:
            g = np.array(self.grid, dtype=float)
            if g.shape != (p.shape[0],):
                raise ParameterError("grid length must match the matrix size")
            g.setflags(write=False)
            object.__setattr__(self, "grid", g)

    @property
    def n(self):
        return self.p.shape[0]


@dataclass(frozen=True)
class Ar1Spec:
    """
    AR(1) law ``X' = mu + rho * X + alpha * eps`` with standard normal shocks,
    to be discretised on ``n`` evenly spaced points spanning ``m_std``
    unconditional standard deviations either side of the mean.
    """

    rho: float
    alpha: float
    mu: float = 0.0
    n: int = 7
    m_std: float = 3.0

    def __post_init__(self):
        if not -1 < self.rho < 1:
            raise ParameterError(f"rho must satisfy |rho| < 1, got {self.rho}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if int(self.n) != self.n or self.n < 3:
            raise ParameterError(f"n must be an integer >= 3, got {self.n}")
        if not self.m_std > 0:
            raise ParameterError(f"m_std must be positive, got {self.m_std}")

    @property
    def mean(self):
        return self.mu / (1 - self.rho)

    @property
    def std(self):
        return self.alpha / np.sqrt(1 - self.rho**2)


def tauchen(spec: Ar1Spec) -> StochasticMatrix:
    """
    Tauchen (1986) discretisation of an AR(1) process.

    Interior cells receive the normal mass between grid midpoints; the two
    boundary columns absorb the tails.  Rows are renormalised afterwards so
    the row-sum invariant holds to machine precision.
    """
    n = int(spec.n)
    half_width = spec.m_std * spec.std
    grid = np.linspace(spec.mean - half_width, spec.mean + half_width, n)
    step = grid[1] - grid[0]
    cond_mean = spec.mu + spec.rho * grid

    upper = (grid[None, :] + step / 2 - cond_mean[:, None]) / spec.alpha
    lower = (grid[None, :] - step / 2 - cond_mean[:, None]) / spec.alpha
    p = np.empty((n, n))
    p[:, 1:-1] = norm.cdf(upper[:, 1:-1]) - norm.cdf(lower[:, 1:-1])
    p[:, 0] = norm.cdf(upper[:, 0])
    p[:, -1] = norm.sf(lower[:, -1])
    p /= p.sum(axis=1, keepdims=True)
    return StochasticMatrix(p, grid)


def stationary_distribution(P, tol=1e-12, max_sweeps=100_000):
    """
    Stationary distribution by power iteration from the uniform vector.

    Raises
    ------
    ConvergenceError
        If ``||pi P - pi||_inf > tol`` after ``max_sweeps`` sweeps, which
        usually signals a periodic or reducible chain.
    """
    p = P.p if isinstance(P, StochasticMatrix) else np.asarray(P, dtype=float)
    pi = np.full(p.shape[0], 1.0 / p.shape[0])
    for _ in range(max_sweeps):
        new = pi @ p
        new /= new.sum()
        if np.max(np.abs(new - pi)) <= tol:
            return new
        pi = new
    raise ConvergenceError(
        f"power iteration did not reach tol={tol} in {max_sweeps} sweeps"
    )


@dataclass(frozen=True)
class DriftReport:
    """Result of :func:`discount_drift_check`.

    ``values[k - 1]`` is ``sup_z E_z prod_{t<k} delta(Z_t)``; ``n_star`` is the
    first horizon with value below one, or None.
    """

    n_star: int | None
    values: np.ndarray

    @property
    def passed(self):
        return self.n_star is not None


def discount_drift_check(P, delta, horizon=10_000) -> DriftReport:
    """
    Horizon-wise sup of expected discount products along the chain.

    Iterates ``(L f)(z) = delta(z) * sum_z' P(z, z') f(z')`` on ``f = 1`` so
    that ``(L^k 1)(z) = E_z prod_{t=0}^{k-1} delta(Z_t)``.
    """
    p = P.p if isinstance(P, StochasticMatrix) else np.asarray(P, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (p.shape[0],):
        raise ParameterError("delta must have one entry per chain state")
    if np.any(delta < 0):
        raise ParameterError("delta must be nonnegative")
    if horizon < 1:
        raise ParameterError("horizon must be >= 1")
    f = np.ones(p.shape[0])
    values = np.empty(horizon)
    n_star = None
    for k in range(horizon):
        f = delta * (p @ f)
        values[k] = f.max()
        if n_star is None and values[k] < 1:
            n_star = k + 1
    values.setflags(write=False)
    return DriftReport(n_star, values)
