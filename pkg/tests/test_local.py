"""Budget-augmented local dynamic programming."""

from __future__ import annotations

import numpy as np
import pytest

from hiermdp.analysis import Verdict, check_assumptions, check_value_monotone
from hiermdp.instances import monotone_instance, random_instance
from hiermdp.local import reachable_entries, solve_local, t_myopic_policy_vector
from hiermdp.models import SystemModel, validate_system
from hiermdp.oracle import brute_force_local


def test_example1_single_unit(example1) -> None:
    result = solve_local(example1.subprocesses[0], 1, 1, example1.gamma)
    assert result.policy.first_actions() == (1, 1)
    np.testing.assert_allclose(result.epoch_value(), [0.5, 1.0])


def test_example1_two_steps_matches_enumeration(example1) -> None:
    sub = example1.subprocesses[0]
    dp = solve_local(sub, 1, 2, 0.99)
    oracle = brute_force_local(sub, 1, 2, 0.99)
    np.testing.assert_allclose(dp.epoch_value(), oracle.epoch_value(), atol=1e-10)


def test_zero_budget_is_idle(rng) -> None:
    sub = random_instance(rng, N=1, n_states=3, n_actions=3, T=2, K=3, B=1).subprocesses[0]
    result = solve_local(sub, 0, 3, 0.9)
    assert not result.policy.actions.any()
    np.testing.assert_allclose(result.value, 0.0)


def test_zero_reward_prefers_smallest_action(zero_reward_model) -> None:
    result = solve_local(zero_reward_model.subprocesses[0], 1, 2, 0.9)
    assert not result.policy.actions.any()
    np.testing.assert_allclose(result.value, 0.0)


def test_value_is_max_of_q(rng) -> None:
    sub = random_instance(rng, N=1, n_states=3, n_actions=3, T=3, K=3, B=1).subprocesses[0]
    result = solve_local(sub, 2, 3, 0.9)
    np.testing.assert_allclose(result.value[:-1], result.q_values.max(axis=-1))
    np.testing.assert_allclose(result.value[-1], 0.0)
    # infeasible actions are never chosen
    assert np.all(result.policy.actions <= np.arange(3)[None, None, :])


def test_more_budget_never_hurts(rng) -> None:
    sub = random_instance(rng, N=1, n_states=3, n_actions=3, T=3, K=3, B=1).subprocesses[0]
    values = np.stack([solve_local(sub, b, 3, 0.9).epoch_value() for b in range(4)])
    assert np.all(np.diff(values, axis=0) >= -1e-12)


@pytest.mark.parametrize("n, m, T", [(2, 2, 1), (2, 2, 3), (3, 2, 2), (2, 3, 2), (3, 3, 1), (2, 3, 3)])
def test_matches_enumeration_on_tiny_instances(n: int, m: int, T: int) -> None:
    rng = np.random.default_rng(100 * n + 10 * m + T)
    sub = random_instance(rng, N=1, n_states=n, n_actions=m, T=T, K=3, B=1).subprocesses[0]
    for budget in range(3):
        dp = solve_local(sub, budget, T, 0.9)
        oracle = brute_force_local(sub, budget, T, 0.9)
        np.testing.assert_allclose(dp.epoch_value(), oracle.epoch_value(), atol=1e-10)


def test_example2_myopic_vector(example2) -> None:
    (policy,) = t_myopic_policy_vector(example2, (1,))
    assert policy.first_actions() == (1, 1)


def test_myopic_vector_is_separable(example1) -> None:
    sub = example1.subprocesses[0]
    twin = validate_system(SystemModel(
        (sub, sub), K=2, B=2, T=2, beta=0.99, gamma=0.99, budget_mode="exactly", allow_idle_reward=True,
    ))
    single = solve_local(sub, 1, 2, 0.99).policy
    for policy in t_myopic_policy_vector(twin, (1, 1)):
        np.testing.assert_array_equal(policy.actions, single.actions)


def test_zero_allocation_vector_is_idle(zero_reward_model) -> None:
    for policy in t_myopic_policy_vector(zero_reward_model, (0, 0)):
        assert not policy.actions.any()


def test_reachable_entries_follow_budget(example1) -> None:
    policy = solve_local(example1.subprocesses[0], 1, 2, 0.99).policy
    entries = reachable_entries(example1.subprocesses[0], policy)
    assert {(0, 0, 1), (0, 1, 1)} <= entries
    assert all(t in (0, 1) and b in (0, 1) for t, _, b in entries)
    assert not any(t == 0 and b == 0 for t, _, b in entries)


@pytest.mark.parametrize("T", [2, 3])
def test_value_is_monotone_in_state_on_monotone_instances(T: int) -> None:
    rng = np.random.default_rng(50 + T)
    checked = 0
    for k in range(60):
        model = monotone_instance(rng, N=1, n_states=3, n_actions=3, T=T, K=3, name=f"monotone-{k}")
        # policy_cap=1 skips the policy enumeration; only A1, A2 and A5 matter here
        report = check_assumptions(model, policy_cap=1)
        if any(report[name].verdict is not Verdict.HOLDS for name in ("A1", "A2", "A5")):
            continue
        sub, order = model.subprocesses[0], model.state_orders[0]
        for budget in range(model.K):
            result = solve_local(sub, budget, T, model.gamma)
            for t in range(T + 1):
                for b in range(budget + 1):
                    holds, witness = check_value_monotone(result.value[t, :, b], order)
                    assert holds, (model.name, budget, t, b, witness)
        checked += 1
    assert checked >= 20
