# hiermdp/epoch.py
# Slow-timescale epoch kernel
# - local_epoch_marginal: T-step behaviour of one sub-process under a LocalPolicy
# - epoch_kernel: product kernel + epoch reward for decentralized local policies
# - joint_epoch_kernel: same for a coupled JointLocalPolicy

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence, Tuple

import numpy as np

from hiermdp.errors import InfeasiblePolicyError
from hiermdp.models import Allocation, JointLocalPolicy, LocalPolicy, SubProcessModel, SystemModel


@dataclass(frozen=True, eq=False)
class EpochKernel:
    """Joint-state transition matrix over one epoch and the expected epoch reward"""
    transition: np.ndarray
    reward: np.ndarray

    def row(self, state_index: int) -> np.ndarray:
        return self.transition[state_index]


def local_epoch_marginal(
    sub: SubProcessModel,
    policy: LocalPolicy,
    T: int,
    gamma: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Propagate the budget-augmented chain of one sub-process over an epoch

    The chain starts at (s, policy.budget) for every s; terminal remaining
    budget is marginalized out.

    Returns:
        (marginal, reward): marginal[s, s'] is the probability of ending the
        epoch in s' from s; reward[s] = E[sum_t gamma^t r(s(t), a(t))]
    """
    if policy.horizon != T:
        raise InfeasiblePolicyError(f"policy covers {policy.horizon} steps, epoch has T={T}")
    if policy.actions.max(initial=0) >= sub.n_actions:
        raise InfeasiblePolicyError(
            f"policy uses action {policy.actions.max()} but sub-process has {sub.n_actions} actions"
        )
    n, g = sub.n_states, policy.budget
    # dist[start, x, b]
    dist = np.zeros((n, n, g + 1))
    dist[np.arange(n), np.arange(n), g] = 1.0
    reward = np.zeros(n)
    rows = np.arange(n)
    for t in range(T):
        nxt = np.zeros_like(dist)
        for b in range(g + 1):
            acts = policy.actions[t, :, b]
            mass = dist[:, :, b]
            if not mass.any():
                continue
            reward += gamma**t * (mass @ sub.reward[rows, acts])
            for a in np.unique(acts):
                here = acts == a
                nxt[:, :, b - a] += mass[:, here] @ sub.transition[a][here]
        dist = nxt
    return dist.sum(axis=2), reward


def epoch_kernel(model: SystemModel, allocation: Allocation, policies: Sequence[LocalPolicy]) -> EpochKernel:
    """
    Epoch kernel p^ep and reward R(s, a_g, pi) for decentralized local policies

    Sub-processes evolve independently within an epoch, so the joint kernel is
    the Kronecker product of the per-subprocess epoch marginals.

    Raises:
        InfeasiblePolicyError: a policy does not match its grant or spends beyond it
    """
    if len(policies) != model.N:
        raise InfeasiblePolicyError(f"{len(policies)} local policies given for {model.N} sub-processes")
    marginals, rewards = [], []
    for i, (sub, policy, grant) in enumerate(zip(model.subprocesses, policies, allocation)):
        if policy.budget != grant:
            raise InfeasiblePolicyError(f"sub-process {i}: policy built for budget {policy.budget}, granted {grant}")
        marginal, reward = local_epoch_marginal(sub, policy, model.T, model.gamma)
        marginals.append(marginal)
        rewards.append(reward)
    transition = reduce(np.kron, marginals)
    local = reduce(lambda x, y: np.add.outer(x, y).reshape(-1), rewards)
    return EpochKernel(transition=transition, reward=model.immediate_reward(allocation) + local)


def joint_epoch_kernel(model: SystemModel, policy: JointLocalPolicy) -> EpochKernel:
    """
    Epoch kernel and reward for a coupled local policy

    Forward-propagates the distribution over (joint state, joint remaining
    budget) from every start state.
    """
    if policy.horizon != model.T:
        raise InfeasiblePolicyError(f"policy covers {policy.horizon} steps, epoch has T={model.T}")
    allocation = policy.allocation
    for i, sub in enumerate(model.subprocesses):
        if policy.actions[..., i].max(initial=0) >= sub.n_actions:
            raise InfeasiblePolicyError(f"sub-process {i}: action beyond its {sub.n_actions} actions")
    S = model.n_joint_states
    budget_shape = tuple(g + 1 for g in allocation)
    n_budgets = int(np.prod(budget_shape))
    table = policy.actions.reshape(model.T, S, n_budgets, model.N)
    budgets = np.array(np.unravel_index(np.arange(n_budgets), budget_shape)).T  # (n_budgets, N)

    dist = np.zeros((S, S, n_budgets))
    dist[np.arange(S), np.arange(S), np.ravel_multi_index(tuple(allocation), budget_shape)] = 1.0
    reward = np.zeros(S)
    for t in range(model.T):
        nxt = np.zeros_like(dist)
        for x, bi in zip(*np.nonzero(dist.any(axis=0))):
            mass = dist[:, x, bi]
            acts = tuple(int(a) for a in table[t, x, bi])
            remaining = budgets[bi] - np.array(acts)
            target = np.ravel_multi_index(tuple(remaining), budget_shape)
            reward += model.gamma**t * mass * model.action_reward(acts)[x]
            nxt[:, :, target] += np.outer(mass, model.action_kernel(acts)[x])
        dist = nxt
    return EpochKernel(
        transition=dist.sum(axis=2),
        reward=model.immediate_reward(allocation) + reward,
    )
