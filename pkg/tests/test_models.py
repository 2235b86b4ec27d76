"""Model validation, indexing and policy tables."""

from __future__ import annotations

import numpy as np
import pytest

from hiermdp.errors import InfeasiblePolicyError, ModelValidationError
from hiermdp.models import BudgetMode, JointLocalPolicy, LocalPolicy, SubProcessModel, SystemModel, validate_system


def _sub(transition=None, reward=None) -> SubProcessModel:
    if transition is None:
        transition = [[[0.5, 0.5], [0.5, 0.5]], [[0.2, 0.8], [0.2, 0.8]]]
    if reward is None:
        reward = [[0.0, 0.5], [0.0, 1.0]]
    return SubProcessModel(np.array(transition), np.array(reward))


def _violations(model: SystemModel) -> list[str]:
    with pytest.raises(ModelValidationError) as info:
        validate_system(model)
    return info.value.violations


def test_bundled_examples_are_valid(example1, example2) -> None:
    assert validate_system(example1) is example1
    assert validate_system(example2) is example2
    assert example1.budget_mode is BudgetMode.EXACTLY
    assert example1.allow_idle_reward


def test_row_sum_reported() -> None:
    sub = _sub(transition=[[[0.5, 0.6], [0.5, 0.5]], [[0.2, 0.8], [0.2, 0.8]]])
    problems = _violations(SystemModel((sub,), K=2, B=0, T=1, beta=0.9, gamma=0.9))
    assert any("row sum 1.1" in p for p in problems)


def test_budget_bound_at_most() -> None:
    problems = _violations(SystemModel((_sub(), _sub()), K=2, B=2, T=1, beta=0.9, gamma=0.9))
    assert any("B < N(K−1) violated" in p for p in problems)


def test_budget_bound_exactly_allows_full_budget() -> None:
    model = SystemModel((_sub(), _sub()), K=2, B=2, T=1, beta=0.9, gamma=0.9, budget_mode="exactly")
    assert validate_system(model) is model


def test_every_violation_is_listed() -> None:
    sub = _sub(reward=[[0.3, 0.5], [0.0, -1.0]])
    problems = _violations(SystemModel((sub,), K=2, B=1, T=1, beta=1.0, gamma=0.0))
    assert any("beta" in p for p in problems)
    assert any("gamma" in p for p in problems)
    assert any("negative reward" in p for p in problems)
    assert any("idle reward must be 0" in p for p in problems)
    assert any("B < N(K−1)" in p for p in problems)


def test_idle_reward_accepted_with_flag() -> None:
    sub = _sub(reward=[[0.25, 0.5], [0.75, 1.0]])
    model = SystemModel((sub,), K=2, B=1, T=1, beta=0.9, gamma=0.9, budget_mode="exactly", allow_idle_reward=True)
    assert validate_system(model) is model


def test_global_reward_zero_allocation_must_vanish() -> None:
    table = np.ones((2, 2))
    problems = _violations(SystemModel((_sub(),), K=2, B=1, T=1, beta=0.9, gamma=0.9,
                                       budget_mode="exactly", global_reward=table))
    assert any("zero allocation" in p for p in problems)


def test_subprocess_shape_checked_at_construction() -> None:
    with pytest.raises(ModelValidationError):
        SubProcessModel(np.ones((2, 2, 3)) / 3, np.zeros((2, 2)))
    with pytest.raises(ModelValidationError):
        SubProcessModel(np.ones((2, 2, 2)) / 2, np.zeros((3, 2)))


def test_joint_indexing_is_row_major(zero_reward_model) -> None:
    model = zero_reward_model
    assert model.joint_states() == [(0, 0), (0, 1), (1, 0), (1, 1)]
    for k, components in enumerate(model.joint_states()):
        assert model.joint_index(components) == k
        assert model.joint_state(k) == components


def test_feasibility_by_mode(zero_reward_model) -> None:
    assert zero_reward_model.is_feasible((0, 0))
    assert zero_reward_model.is_feasible((1, 0))
    assert not zero_reward_model.is_feasible((1, 1))
    assert not zero_reward_model.is_feasible((2, 0))
    assert not zero_reward_model.is_feasible((0,))


def test_action_kernel_is_product(zero_reward_model) -> None:
    sub = zero_reward_model.subprocesses[0]
    kernel = zero_reward_model.action_kernel((1, 0))
    # P((x0', x1') | (x0, x1)) = P_1(x0'|x0) * P_0(x1'|x1)
    assert kernel[0, 3] == pytest.approx(sub.transition[1, 0, 1] * sub.transition[0, 0, 1])
    np.testing.assert_allclose(kernel.sum(axis=1), 1.0)


def test_local_policy_rejects_overspending() -> None:
    actions = np.zeros((1, 2, 2), dtype=np.int64)
    actions[0, 1, 0] = 1
    with pytest.raises(InfeasiblePolicyError):
        LocalPolicy(1, actions)


def test_local_policy_shape_must_match_budget() -> None:
    with pytest.raises(InfeasiblePolicyError):
        LocalPolicy(2, np.zeros((1, 2, 2), dtype=np.int64))


def test_idle_policy() -> None:
    policy = LocalPolicy.idle(3, 2, 1)
    assert policy.horizon == 2
    assert policy.first_actions() == (0, 0, 0)


def test_joint_policy_from_components(zero_reward_model) -> None:
    model = zero_reward_model
    spend = np.zeros((2, 2, 2), dtype=np.int64)
    spend[:, 1, 1] = 1
    policies = [LocalPolicy(1, spend), LocalPolicy.idle(2, 2, 0)]
    joint = JointLocalPolicy.from_components(model, policies)
    assert joint.allocation == (1, 0)
    assert joint.first_action(model.joint_index((1, 0))) == (1, 0)
    assert joint.first_action(model.joint_index((0, 1))) == (0, 0)
    # component 0 with no budget left never spends
    assert joint.actions[0, model.joint_index((1, 1)), 0, 0, 0] == 0


def test_joint_policy_rejects_overspending() -> None:
    actions = np.zeros((1, 2, 1, 2, 2), dtype=np.int64)
    actions[0, 0, 0, 0, 0] = 1
    with pytest.raises(InfeasiblePolicyError):
        JointLocalPolicy((0, 1), actions)
