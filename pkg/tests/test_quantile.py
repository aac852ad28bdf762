import numpy as np
import pytest

from ordered_dp import (
    IterationControl,
    MarkovStructure,
    NumericalDomainError,
    ParameterError,
    QuantileModel,
    estimate_contraction_modulus,
    greedy_from_q,
    q_bellman,
    q_policy_operator,
    quantile,
    value_function_iteration,
)
from ordered_dp.instances import random_quantile
from ordered_dp.oracle import interval_pair_sampler


def brute_quantile(atoms, weights, tau):
    """Smallest atom k with P(X <= k) >= tau, by exhaustive search."""
    best = None
    for k in atoms:
        mass = sum(w for a, w in zip(atoms, weights) if a <= k)
        if mass >= tau - 1e-15 and (best is None or k < best):
            best = k
    return best


def test_quantile_examples():
    assert quantile([1.0, 2.0, 3.0], [1 / 3] * 3, 0.5) == 2.0
    assert quantile([4.5], [1.0], 0.01) == 4.5
    assert quantile([3.0, 1.0, 2.0], [0.2, 0.5, 0.3], 1 - 1e-12) == 3.0


def test_quantile_against_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        k = rng.integers(1, 7)
        atoms = rng.integers(0, 5, k).astype(float)  # repeated atoms on purpose
        w = rng.dirichlet(np.ones(k))
        tau = rng.uniform(0.001, 0.999)
        assert quantile(atoms, w, tau) == brute_quantile(atoms, w, tau)


def test_quantile_errors():
    with pytest.raises(NumericalDomainError):
        quantile([], [], 0.5)
    with pytest.raises(ParameterError):
        quantile([1.0], [1.0], 1.0)


def _one_state(tau=0.3):
    return QuantileModel(MarkovStructure.exogenous_only(np.eye(1), 2), [[1.0, 2.0]], 0.5, tau)


def test_one_state_fixed_point():
    for tau in (0.1, 0.5, 0.9):
        m = _one_state(tau)
        res = value_function_iteration(m, np.zeros(2), IterationControl(tol=1e-13))
        np.testing.assert_allclose(res.value, [3.0, 4.0], atol=1e-12)
        assert greedy_from_q(m, res.value).tolist() == [1]
        np.testing.assert_allclose(q_bellman(m, res.value), res.value, atol=1e-12)


def test_constant_q():
    rng = np.random.default_rng(1)
    m = random_quantile(rng)
    sigma = m.greedy(np.zeros(m.value_size))
    out = q_policy_operator(m, sigma, np.full(m.value_size, 2.5))
    np.testing.assert_allclose(out, m.reward + m.beta * 2.5, rtol=0, atol=1e-15)


def test_deterministic_kernel():
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    m = QuantileModel(MarkovStructure.exogenous_only(P, 2), [[1.0, 0.0], [0.5, 2.0]], 0.9, 0.4)
    q = np.array([1.0, 5.0, -2.0, 3.0])  # pairs (0,0) (0,1) (1,0) (1,1)
    sigma = np.array([1, 0])
    out = q_policy_operator(m, sigma, q)
    # successor of state 0 is 1 (value q(1, 0) = -2); of state 1 is 0 (q(0, 1) = 5)
    np.testing.assert_allclose(out, [1.0 - 1.8, 0.0 - 1.8, 0.5 + 4.5, 2.0 + 4.5])


def test_single_action_bellman_equals_policy_operator():
    rng = np.random.default_rng(2)
    P = rng.dirichlet(np.ones(3), 3)
    m = QuantileModel(MarkovStructure.exogenous_only(P, 1), rng.random((3, 1)), 0.8, 0.6)
    q = rng.normal(size=3)
    np.testing.assert_array_equal(q_bellman(m, q), q_policy_operator(m, [0, 0, 0], q))


def test_greedy_ties_and_strict():
    m = random_quantile(np.random.default_rng(3))
    sp = m.space
    lowest = [int(sp.actions_at(x)[0]) for x in range(sp.n_states)]
    assert greedy_from_q(m, np.zeros(m.value_size)).tolist() == lowest
    q = np.zeros(m.value_size)
    last = sp.pair_index[np.arange(sp.n_states), [sp.actions_at(x)[-1] for x in range(sp.n_states)]]
    q[last] = 1.0
    assert greedy_from_q(m, q).tolist() == [int(sp.actions_at(x)[-1]) for x in range(sp.n_states)]


def test_shift_identity_and_contraction():
    rng = np.random.default_rng(4)
    for _ in range(100):
        m = random_quantile(rng)
        sp = m.space
        sigma = np.array([rng.choice(sp.actions_at(x)) for x in range(sp.n_states)])
        q = rng.normal(0, 5, m.value_size)
        f = rng.normal(0, 5, m.value_size)
        base = m.policy_operator(sigma, q)
        for lam in (-3.0, 0.5, 7.25):
            assert np.max(np.abs(m.policy_operator(sigma, q + lam) - base - m.beta * lam)) <= 1e-12
        lhs = np.max(np.abs(base - m.policy_operator(sigma, f)))
        assert lhs <= m.beta * np.max(np.abs(q - f)) + 1e-12


def test_monotone_and_closed():
    rng = np.random.default_rng(5)
    for _ in range(100):
        m = random_quantile(rng)
        sp = m.space
        sigma = np.array([rng.choice(sp.actions_at(x)) for x in range(sp.n_states)])
        lo, hi = m.bounds
        q = rng.uniform(lo, hi, m.value_size)
        f = q + rng.uniform(0, 1, m.value_size)
        assert np.all(m.policy_operator(sigma, q) <= m.policy_operator(sigma, f))
        out = m.policy_operator(sigma, q)
        assert np.all(out >= lo - 1e-12) and np.all(out <= hi + 1e-12)


def test_contraction_estimate_below_beta():
    m = QuantileModel(MarkovStructure.exogenous_only(np.full((3, 3), 1 / 3), 2),
                      np.random.default_rng(6).random((3, 2)), 0.9, 0.5)
    sigma = np.array([0, 1, 0])
    lo, hi = m.bounds
    rho, rep = estimate_contraction_modulus(
        lambda q: m.policy_operator(sigma, q),
        interval_pair_sampler(np.full(6, lo), np.full(6, hi)), 500, seed=0)
    assert rho <= 0.9 + 1e-9 and rep.passed


def test_q_and_state_bellman_consistent():
    rng = np.random.default_rng(7)
    for _ in range(20):
        m = random_quantile(rng)
        res = value_function_iteration(m, ctrl=IterationControl(tol=1e-12))
        v = m.state_values(res.value)
        st = m.structure
        for x in range(st.n_states):
            best = -np.inf
            for a in m.space.actions_at(x):
                succ = st.successors(x, a)
                p = st.P[st.exo_of(x)]
                best = max(best, m.reward[m.space.pair_index[x, a]]
                           + m.beta * quantile(v[succ], p, m.tau))
            assert abs(v[x] - best) <= 1e-9


def test_parameter_checks():
    st = MarkovStructure.exogenous_only(np.eye(1), 1)
    with pytest.raises(ParameterError, match="tau"):
        QuantileModel(st, [[1.0]], 0.5, 1.5)
    with pytest.raises(ParameterError, match="beta"):
        QuantileModel(st, [[1.0]], 1.0, 0.5)


def test_bounds_check_optional():
    m = QuantileModel(MarkovStructure.exogenous_only(np.eye(1), 1), [[1.0]], 0.5, 0.5,
                      check_bounds=True)
    with pytest.raises(NumericalDomainError):
        q_bellman(m, [10.0])
