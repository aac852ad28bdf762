import numpy as np
import pytest

from ordered_dp import (
    DivergenceError,
    FiniteMDP,
    IterationControl,
    MarkovStructure,
    ParameterError,
    RiskSensitiveModel,
    howard_policy_iteration,
    optimistic_policy_iteration,
    policy_evaluation,
    run_timing_comparison,
    successive_approximation,
    value_function_iteration,
)
from ordered_dp.instances import FAMILIES, random_mdp


def test_successive_approximation_geometric():
    res = successive_approximation(lambda v: 1 + 0.5 * v, np.zeros(1), IterationControl(tol=1e-10))
    assert res.converged
    assert abs(res.value[0] - 2.0) <= 1e-9


def test_identity_converges_in_one_step():
    v0 = np.array([3.0, -1.0])
    res = successive_approximation(lambda v: v.copy(), v0)
    assert res.converged and res.iterations == 1
    np.testing.assert_array_equal(res.value, v0)


def test_divergence_detected():
    ctrl = IterationControl(tol=1e-8, max_iter=1000, divergence_window=50)
    with pytest.raises(DivergenceError, match="50"):
        successive_approximation(lambda v: 2 * v + 1, np.zeros(2), ctrl)


def test_max_iter_reports_nonconvergence():
    res = successive_approximation(lambda v: 1 + 0.99 * v, np.zeros(1),
                                   IterationControl(tol=1e-12, max_iter=5))
    assert not res.converged and res.iterations == 5 and len(res.trace) == 5


def test_bad_control_rejected():
    with pytest.raises(ParameterError):
        IterationControl(tol=0)
    with pytest.raises(ParameterError):
        IterationControl(max_iter=0)


def test_vfi_one_state(one_state_mdp):
    res = value_function_iteration(one_state_mdp, [0.0], IterationControl(tol=1e-12))
    assert res.converged
    assert abs(res.value[0] - 4.0) < 1e-11
    assert res.policy.tolist() == [1]


def test_vfi_zero_reward_one_iteration():
    mdp = FiniteMDP(np.zeros((3, 2)), np.full((3, 2, 3), 1 / 3), 0.9)
    res = value_function_iteration(mdp, np.zeros(3))
    assert res.iterations == 1
    np.testing.assert_array_equal(res.value, 0.0)


def test_policy_evaluation_one_state(one_state_mdp):
    assert policy_evaluation(one_state_mdp, [0])[0] == pytest.approx(2.0, abs=1e-14)
    assert policy_evaluation(one_state_mdp, [1])[0] == pytest.approx(4.0, abs=1e-14)


def test_policy_evaluation_residual_contract():
    rng = np.random.default_rng(3)
    for _ in range(20):
        mdp = random_mdp(rng)
        sigma = np.array([rng.choice(mdp.space.actions_at(x)) for x in range(mdp.space.n_states)])
        v = policy_evaluation(mdp, sigma)
        resid = np.max(np.abs(mdp.policy_operator(sigma, v) - v))
        assert resid <= 1e-12 * (1 + np.max(np.abs(v)))


def test_risk_sensitive_constant_reward_closed_form():
    P = np.array([[0.3, 0.7], [0.6, 0.4]])
    st = MarkovStructure.exogenous_only(P, 2)
    model = RiskSensitiveModel(st, np.full((2, 2), 1.5), 0.8, -1.3)
    v = policy_evaluation(model, [1, 0], IterationControl(tol=1e-13))
    np.testing.assert_allclose(v, 1.5 / (1 - 0.8), atol=1e-10)


def test_hpi_one_state(one_state_mdp):
    res = howard_policy_iteration(one_state_mdp, [0.0])
    assert res.converged and res.iterations <= 2
    assert res.value[0] == pytest.approx(4.0, abs=1e-12)


def test_hpi_from_fixed_point_single_evaluation(one_state_mdp):
    res = howard_policy_iteration(one_state_mdp, [4.0])
    assert res.iterations == 1 and res.policy.tolist() == [1]


def test_opi_large_m_one_state(one_state_mdp):
    res = optimistic_policy_iteration(one_state_mdp, [0.0], m=1000)
    assert res.converged and res.iterations <= 2
    assert abs(res.value[0] - 4.0) < 1e-6


def test_opi_rejects_bad_m(one_state_mdp):
    with pytest.raises(ParameterError):
        optimistic_policy_iteration(one_state_mdp, m=0)


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_opi_one_matches_vfi_bitwise(family):
    rng = np.random.default_rng(11)
    for _ in range(5):
        adp = FAMILIES[family](rng)
        v0 = adp.default_initial()
        a = value_function_iteration(adp, v0)
        b = optimistic_policy_iteration(adp, v0, m=1)
        assert a.trace == b.trace
        np.testing.assert_array_equal(a.value, b.value)


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_algorithms_agree(family):
    rng = np.random.default_rng(5)
    ctrl = IterationControl(tol=1e-10)
    for _ in range(10):
        adp = FAMILIES[family](rng)
        v0 = adp.default_initial()
        vals = [value_function_iteration(adp, v0, ctrl).value,
                howard_policy_iteration(adp, v0, ctrl).value,
                optimistic_policy_iteration(adp, v0, 5, ctrl).value]
        for v in vals[1:]:
            assert np.max(np.abs(v - vals[0])) <= 1e-8


def test_hpi_policy_values_increase_on_affine_models():
    rng = np.random.default_rng(8)
    for _ in range(20):
        mdp = random_mdp(rng)
        seen = []
        howard_policy_iteration(mdp, mdp.default_initial(),
                                callback=lambda k, new, old: seen.append(new))
        for a, b in zip(seen, seen[1:]):
            assert np.all(a <= b + 1e-12)


def test_mdp_trace_ratio_bounded_by_beta():
    # each distance carries rounding of a few ulps of ||v||, which no ratio
    # slack can absorb once the distances themselves are that small
    rng = np.random.default_rng(2)
    for _ in range(10):
        mdp = random_mdp(rng)
        res = value_function_iteration(mdp, np.zeros(mdp.value_size), IterationControl(tol=1e-9))
        fp = 4 * np.finfo(float).eps * np.max(np.abs(res.value))
        tr = res.trace
        for d0, d1 in zip(tr, tr[1:]):
            assert d1 <= (mdp.beta + 1e-9) * d0 + fp


def test_callback_sees_every_iterate(one_state_mdp):
    seen = []
    res = value_function_iteration(one_state_mdp, [0.0],
                                   callback=lambda k, new, old: seen.append((k, new[0], old[0])))
    assert len(seen) == res.iterations
    assert seen[0] == (1, 2.0, 0.0)


def test_timing_rows_shape(one_state_mdp):
    rows = run_timing_comparison(one_state_mdp, [0.0], [1, 3], repeats=1)
    assert [(r.algorithm, r.m) for r in rows] == [
        ("vfi", 1), ("hpi", 1), ("opi", 1), ("vfi", 3), ("hpi", 3), ("opi", 3)]
    by = {(r.algorithm, r.m): r for r in rows}
    assert by["vfi", 1].seconds == by["vfi", 3].seconds
    assert by["vfi", 1].iterations == by["vfi", 3].iterations
    assert by["hpi", 1].iterations == by["hpi", 3].iterations
    assert all(r.converged for r in rows)
    with pytest.raises(ParameterError):
        run_timing_comparison(one_state_mdp, [0.0], [])
