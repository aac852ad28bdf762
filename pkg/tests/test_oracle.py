import json

import numpy as np
import pytest

from ordered_dp import (
    EnumerationSizeError,
    FiniteMDP,
    IterationControl,
    MarkovStructure,
    RiskSensitiveModel,
    StateActionSpace,
    brute_force_optimality,
    check_concavity,
    check_lower_perimeter,
    check_order_preserving,
    compute_upper_bound_b,
    enumerate_policies,
    estimate_contraction_modulus,
    value_function_iteration,
)
from ordered_dp.instances import random_quantile
from ordered_dp.oracle import interval_pair_sampler, interval_sampler, write_report_json


def test_enumeration_counts():
    assert len(enumerate_policies(StateActionSpace.full(2, 2))) == 4
    assert enumerate_policies(StateActionSpace.full(1, 1)) == [(0,)]
    mask = [[True, False, False], [True, True, False], [True, True, True]]
    pols = enumerate_policies(StateActionSpace(mask))
    assert len(pols) == 6 and pols[0] == (0, 0, 0) and pols[-1] == (0, 1, 2)


def test_enumeration_guard():
    with pytest.raises(EnumerationSizeError, match="guard"):
        enumerate_policies(StateActionSpace.full(21, 2))


def test_brute_force_one_state(one_state_mdp):
    rep = brute_force_optimality(one_state_mdp)
    np.testing.assert_allclose(rep.v_star_brute, [4.0])
    assert rep.optimal_policies == [(1,)]
    assert rep.b1_b2_b3 == (True, True, True)
    np.testing.assert_allclose(rep.policy_values[(0,)], [2.0])


def test_brute_force_identical_operators():
    mdp = FiniteMDP(np.ones((2, 2)), np.full((2, 2, 2), 0.5), 0.9)
    rep = brute_force_optimality(mdp)
    assert len(rep.optimal_policies) == 4
    assert set(rep.greedy_policies) == set(rep.optimal_policies)
    assert rep.passed


def test_random_quantile_vfi_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(10):
        m = random_quantile(rng, max_states=4)
        rep = brute_force_optimality(m)
        v = value_function_iteration(m, ctrl=IterationControl(tol=1e-12)).value
        assert np.max(np.abs(v - rep.v_star_brute)) <= 1e-9
        assert rep.passed


def test_report_json(tmp_path, one_state_mdp):
    path = tmp_path / "report.json"
    write_report_json(brute_force_optimality(one_state_mdp), path)
    data = json.loads(path.read_text())
    assert data["b1"] and data["optimal_policies"] == [[1]]


# sampled checkers: positive fixtures

def test_mdp_operator_checks():
    mdp = FiniteMDP(np.random.default_rng(1).random((3, 2)), np.full((3, 2, 3), 1 / 3), 0.5)
    sampler = interval_pair_sampler(np.zeros(3), np.full(3, 2.0))
    op = lambda v: mdp.policy_operator(np.array([0, 1, 0]), v)  # noqa: E731
    assert check_order_preserving(op, sampler, 500, seed=3).passed
    rho, rep = estimate_contraction_modulus(op, sampler, 500, seed=3)
    assert rho <= 0.5 + 1e-9 and rep.passed and rep.seed == 3
    assert check_concavity(op, sampler, 500, seed=3).passed


def test_risk_sensitive_checks_pass():
    P = np.array([[0.7, 0.3], [0.2, 0.8]])
    m = RiskSensitiveModel(MarkovStructure.exogenous_only(P, 2),
                           [[0.3, 0.5], [0.9, 0.4]], [0.9, 0.8], -1.5)
    b = compute_upper_bound_b(m)
    pairs = interval_pair_sampler(np.zeros(2), b)
    op = lambda v: m.policy_operator(np.array([1, 0]), v)  # noqa: E731
    assert check_order_preserving(op, pairs, 500).passed
    assert check_concavity(op, pairs, 500).passed
    assert check_lower_perimeter(m, b, 0.3, interval_sampler(np.zeros(2), b), 500).passed


# planted failures: every checker must produce a witness

def test_planted_order_failure():
    rep = check_order_preserving(lambda v: -v, interval_pair_sampler(np.zeros(3), np.ones(3)),
                                 50, seed=7)
    assert not rep.passed and rep.witness is not None and rep.seed == 7
    assert rep.witness["op(v)[i]"] > rep.witness["op(w)[i]"]


def test_planted_concavity_failure():
    op = lambda v: np.maximum(v, 2 * v - 1)  # noqa: E731
    rep = check_concavity(op, interval_pair_sampler(np.zeros(2), np.full(2, 2.0)), 200, seed=1)
    assert not rep.passed and rep.witness is not None
    assert rep.witness["op(mix)[i]"] < rep.witness["mix(op)[i]"]


def test_planted_contraction_failure():
    rho, rep = estimate_contraction_modulus(lambda v: v.copy(),
                                            interval_pair_sampler(np.zeros(2), np.ones(2)), 50)
    assert rho == 1.0 and not rep.passed and rep.witness["ratio"] == 1.0


def test_planted_lower_perimeter_failure():
    P = np.array([[0.5, 0.5], [0.5, 0.5]])
    m = RiskSensitiveModel(MarkovStructure.exogenous_only(P, 1), [[0.0], [1.0]], 0.5, -1.0,
                           enforce_reward_bounds=False)
    b = compute_upper_bound_b(m)
    rep = check_lower_perimeter(m, b, 0.3, interval_sampler(np.zeros(2), b), 200, seed=2)
    assert not rep.passed and rep.witness["Tv[x]"] < 0.3


def test_report_dict_is_json():
    rep = check_order_preserving(lambda v: -v, interval_pair_sampler(np.zeros(2), np.ones(2)), 5)
    json.dumps(rep.to_dict())
