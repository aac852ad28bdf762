"""
Solution algorithms: successive approximation, value function iteration
(VFI), Howard policy iteration (HPI) and optimistic policy iteration (OPI).

All algorithms stop on the sup-norm distance between successive iterates.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .core import as_value_vector, check_policy
from .errors import DivergenceError, NumericalDomainError, ParameterError

__all__ = [
    "IterationControl",
    "FixedPointResult",
    "SolveResult",
    "successive_approximation",
    "value_function_iteration",
    "policy_evaluation",
    "howard_policy_iteration",
    "optimistic_policy_iteration",
    "TimingRow",
    "run_timing_comparison",
]


@dataclass(frozen=True)
class IterationControl:
    tol: float = 1e-8
    max_iter: int = 100_000
    record_trace: bool = True
    # consecutive strictly increasing distances tolerated before giving up
    divergence_window: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ParameterError(f"max_iter must be a positive integer, got {self.max_iter}")
        if self.divergence_window < 1:
            raise ParameterError("divergence_window must be >= 1")


@dataclass
class FixedPointResult:
    value: np.ndarray
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    elapsed_seconds: float = 0.0


@dataclass
class SolveResult(FixedPointResult):
    policy: np.ndarray | None = None


def _sup(a, b):
    return float(np.max(np.abs(a - b)))


class _DivergenceMonitor:
    def __init__(self, window, what):
        self.window = window
        self.what = what
        self.last = np.inf
        self.run = 0

    def update(self, d, k):
        self.run = self.run + 1 if d > self.last else 0
        self.last = d
        if self.run >= self.window:
            raise DivergenceError(
                f"{self.what}: iterate distance increased for {self.run} consecutive "
                f"steps (now {d:.3g} at iteration {k})"
            )


def successive_approximation(step, v0, ctrl=IterationControl(), callback=None, what="iteration"):
    """
    Iterate ``v <- step(v)`` until ``||v_new - v||_inf <= ctrl.tol``.

    Parameters
    ----------
    step : callable
        Self-map on 1-d float arrays.
    v0 : array_like
        Initial condition.
    callback : callable, optional
        Called as ``callback(k, v_new, v_old)`` after every step.

    Returns
    -------
    FixedPointResult
        ``converged`` is False if ``max_iter`` steps were taken first.

    Raises
    ------
    NumericalDomainError
        If an iterate has a non-finite entry.
    DivergenceError
        If the distance grows for ``ctrl.divergence_window`` consecutive steps.
    """
    start = time.perf_counter()
    v = np.array(v0, dtype=float)
    trace = []
    monitor = _DivergenceMonitor(ctrl.divergence_window, what)
    converged = False
    k = 0
    while k < ctrl.max_iter:
        new = np.asarray(step(v), dtype=float)
        k += 1
        if not np.all(np.isfinite(new)):
            bad = int(np.flatnonzero(~np.isfinite(new))[0])
            raise NumericalDomainError(f"{what}: iterate {k} has entry {bad} = {new[bad]}")
        d = _sup(new, v)
        if ctrl.record_trace:
            trace.append(d)
        if callback is not None:
            callback(k, new, v)
        v = new
        if d <= ctrl.tol:
            converged = True
            break
        monitor.update(d, k)
    return FixedPointResult(v, k, converged, trace, time.perf_counter() - start)


def value_function_iteration(adp, v0=None, ctrl=IterationControl(), callback=None):
    """Iterate the Bellman operator; the returned policy is greedy at the final value."""
    start = time.perf_counter()
    v0 = adp.default_initial() if v0 is None else v0
    v0 = adp.validate_values(as_value_vector(v0, adp.value_size, "v0"))
    res = successive_approximation(adp.bellman, v0, ctrl, callback, what="VFI")
    return SolveResult(
        res.value,
        res.iterations,
        res.converged,
        res.trace,
        time.perf_counter() - start,
        policy=adp.greedy(res.value),
    )


def policy_evaluation(adp, sigma, ctrl=IterationControl(), exact_affine=True, v0=None,
                      method="auto"):
    """
    Fixed point ``v_sigma`` of ``T_sigma``.

    Parameters
    ----------
    exact_affine : bool
        Solve the linear system directly when the model declares ``T_sigma``
        affine.  The residual is then at most ``1e-12 * (1 + ||v_sigma||)``.
    method : {"auto", "iterate", "newton"}
        For non-affine operators, ``newton`` uses the model's Jacobian (when
        available) and finishes with plain iteration; ``auto`` picks Newton
        whenever a Jacobian exists.

    Raises
    ------
    DivergenceError
        If the iterate distance keeps increasing; the message names ``sigma``.
    """
    sigma = check_policy(adp.space, sigma)
    label = f"policy evaluation for sigma={_short(sigma)}"
    if exact_affine:
        parts = adp.affine_parts(sigma)
        if parts is not None:
            r, K = parts
            v = linalg.solve(np.eye(len(r)) - K, r)
            # one refinement step polishes the linear-solve residual
            resid = r + K @ v - v
            v = v + linalg.solve(np.eye(len(r)) - K, resid)
            return v

    v = adp.default_initial() if v0 is None else np.array(v0, dtype=float)
    v = adp.validate_values(as_value_vector(v, adp.value_size, "v0"))

    def step(w):
        return adp.policy_operator(sigma, w)

    if method in ("auto", "newton"):
        v = _newton_polish(adp, sigma, v, ctrl.tol)
    elif method != "iterate":
        raise ParameterError(f"unknown method {method!r}")
    res = successive_approximation(step, v, ctrl, what=label)
    return res.value


def _newton_polish(adp, sigma, v, tol, max_steps=50):
    """Newton steps on ``v = T_sigma v``; returns the best iterate found."""
    if adp.policy_jacobian(sigma, v) is None:
        return v
    n = len(v)
    tv = adp.policy_operator(sigma, v)
    best, best_res = v, _sup(tv, v)
    for _ in range(max_steps):
        if best_res <= tol:
            break
        J = adp.policy_jacobian(sigma, v)
        try:
            delta = linalg.solve(np.eye(n) - J, tv - v)
        except linalg.LinAlgError:
            break
        cand = v + delta
        try:
            cand = adp.validate_values(cand)
            tc = adp.policy_operator(sigma, cand)
        except NumericalDomainError:
            break
        res = _sup(tc, cand)
        if not res < best_res:
            break
        v, tv, best, best_res = cand, tc, cand, res
    return best


def _short(sigma, limit=12):
    s = np.asarray(sigma)
    body = ",".join(str(int(a)) for a in s[:limit])
    return f"[{body}{',...' if len(s) > limit else ''}]"


def howard_policy_iteration(adp, v0=None, ctrl=IterationControl(), eval_ctrl=None,
                            callback=None):
    """
    Alternate greedy selection and policy evaluation.

    Stops when the greedy policy repeats or successive values are within
    ``ctrl.tol``.  ``iterations`` counts policy evaluations; the trace holds
    ``||v_{k+1} - v_k||_inf``.
    """
    start = time.perf_counter()
    eval_ctrl = eval_ctrl or IterationControl(tol=ctrl.tol, max_iter=ctrl.max_iter,
                                              record_trace=False)
    v = adp.default_initial() if v0 is None else v0
    v = adp.validate_values(as_value_vector(v, adp.value_size, "v0"))
    sigma = adp.greedy(v)
    trace = []
    converged = False
    k = 0
    while k < ctrl.max_iter:
        new = policy_evaluation(adp, sigma, eval_ctrl, v0=v)
        k += 1
        d = _sup(new, v)
        if ctrl.record_trace:
            trace.append(d)
        if callback is not None:
            callback(k, new, v)
        v = new
        new_sigma = adp.greedy(v)
        if d <= ctrl.tol or np.array_equal(new_sigma, sigma):
            sigma = new_sigma
            converged = True
            break
        sigma = new_sigma
    return SolveResult(v, k, converged, trace, time.perf_counter() - start, policy=sigma)


def optimistic_policy_iteration(adp, v0=None, m=10, ctrl=IterationControl(), callback=None):
    """
    Iterate ``v <- T_sigma^m v`` with ``sigma`` greedy at ``v``.

    The first of the ``m`` applications is the Bellman step itself, so
    ``m = 1`` reproduces the VFI iterates exactly.
    """
    if int(m) != m or m < 1:
        raise ParameterError(f"m must be a positive integer, got {m}")
    start = time.perf_counter()
    v0 = adp.default_initial() if v0 is None else v0
    v0 = adp.validate_values(as_value_vector(v0, adp.value_size, "v0"))

    def step(v):
        w, sigma = adp.bellman_greedy(v)
        for _ in range(m - 1):
            w = adp.policy_operator(sigma, w)
        return w

    res = successive_approximation(step, v0, ctrl, callback, what=f"OPI(m={m})")
    return SolveResult(
        res.value,
        res.iterations,
        res.converged,
        res.trace,
        time.perf_counter() - start,
        policy=adp.greedy(res.value),
    )


@dataclass(frozen=True)
class TimingRow:
    algorithm: str
    m: int
    seconds: float
    iterations: int
    converged: bool


def _best_of(fn, repeats):
    best, result = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def run_timing_comparison(adp, v0, m_values, ctrl=IterationControl(), repeats=3):
    """
    Time VFI, HPI and OPI(m) from a shared ``v0``; best of ``repeats`` runs.

    VFI and HPI do not depend on ``m``; they are timed once and their rows
    are repeated for every ``m``.
    """
    m_values = list(m_values)
    if not m_values:
        raise ParameterError("m_values must be nonempty")
    v0 = np.array(v0, dtype=float)
    t_vfi, vfi = _best_of(lambda: value_function_iteration(adp, v0, ctrl), repeats)
    t_hpi, hpi = _best_of(lambda: howard_policy_iteration(adp, v0, ctrl), repeats)
    rows = []
    for m in m_values:
        t_opi, opi = _best_of(lambda: optimistic_policy_iteration(adp, v0, m, ctrl), repeats)
        rows.append(TimingRow("vfi", m, t_vfi, vfi.iterations, vfi.converged))
        rows.append(TimingRow("hpi", m, t_hpi, hpi.iterations, hpi.converged))
        rows.append(TimingRow("opi", m, t_opi, opi.iterations, opi.converged))
    return rows
