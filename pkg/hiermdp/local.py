# hiermdp/local.py
# Local (fast-timescale) controller
# - solve_local: backward induction on the budget-augmented state (t, s, b)
# - t_myopic_policy_vector: per-subprocess T-myopic policies for an allocation
# - reachable_entries: augmented states visited with positive probability

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

import numpy as np

from hiermdp.models import Allocation, LocalPolicy, SubProcessModel, SystemModel
from hiermdp.utils import argmax_first


@dataclass(frozen=True, eq=False)
class LocalDPResult:
    """
    Solution of the budget-constrained T-horizon local problem

    value[t, s, b] is v_{i,t}(s, b), with value[T] == 0; q_values[t, s, b, a]
    is -inf for actions that exceed b or the action set.
    """
    policy: LocalPolicy
    value: np.ndarray
    q_values: Optional[np.ndarray] = None

    @property
    def budget(self) -> int:
        return self.policy.budget

    def epoch_value(self) -> np.ndarray:
        """Optimal epoch reward R_i(s) = v_{i,0}(s, budget)"""
        return self.value[0, :, self.budget]


def solve_local(sub: SubProcessModel, budget: int, T: int, gamma: float, keep_q: bool = True) -> LocalDPResult:
    """
    Maximize E[sum_t gamma^t r(s(t), a(t))] subject to sum_t a(t) <= budget

    Backward induction over (t, s, b); ties go to the smallest action.

    Args:
        sub: Local MDP
        budget: Granted budget for the epoch
        T: Fast steps per epoch
        gamma: Fast-timescale discount

    Returns:
        LocalDPResult with the optimal augmented policy and its value table
    """
    n, m = sub.n_states, sub.n_actions
    value = np.zeros((T + 1, n, budget + 1))
    q = np.full((T, n, budget + 1, m), -np.inf)
    actions = np.zeros((T, n, budget + 1), dtype=np.int64)
    for t in reversed(range(T)):
        for a in range(sub.max_action(budget) + 1):
            # E[v_{t+1}(s', b - a)] for b = a..budget
            cont = sub.transition[a] @ value[t + 1]
            q[t, :, a:, a] = sub.reward[:, a][:, None] + gamma * cont[:, : budget + 1 - a]
        actions[t] = argmax_first(q[t], axis=-1)
        value[t] = q[t].max(axis=-1)
    return LocalDPResult(
        policy=LocalPolicy(budget, actions),
        value=value,
        q_values=q if keep_q else None,
    )


def t_myopic_solutions(model: SystemModel, allocation: Allocation) -> Tuple[LocalDPResult, ...]:
    """Local DP solutions for every sub-process under one allocation"""
    return tuple(
        solve_local(sub, grant, model.T, model.gamma, keep_q=False)
        for sub, grant in zip(model.subprocesses, allocation)
    )


def t_myopic_policy_vector(model: SystemModel, allocation: Allocation) -> Tuple[LocalPolicy, ...]:
    """
    T-myopic local policies: each maximizes its own epoch reward R_i
    under the budget granted by the allocation
    """
    return tuple(result.policy for result in t_myopic_solutions(model, allocation))


def reachable_entries(sub: SubProcessModel, policy: LocalPolicy) -> FrozenSet[Tuple[int, int, int]]:
    """
    Augmented states (t, s, b) visited with positive probability

    Starts from every local state with the full grant.
    """
    n, g = sub.n_states, policy.budget
    T = policy.horizon
    occupied = np.zeros((n, g + 1), dtype=bool)
    occupied[:, g] = True
    entries = set()
    for t in range(T):
        nxt = np.zeros_like(occupied)
        for s, b in zip(*np.nonzero(occupied)):
            entries.add((t, int(s), int(b)))
            a = policy.actions[t, s, b]
            nxt[sub.transition[a, s] > 0, b - a] = True
        occupied = nxt
    return frozenset(entries)
