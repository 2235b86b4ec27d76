# hiermdp/models.py
# Domain models
# - SubProcessModel: one local MDP (transitions per action, reward table)
# - SystemModel: N sub-processes plus global parameters K, B, T, beta, gamma, I_g
# - LocalPolicy / JointLocalPolicy: budget-augmented decision tables
# - GlobalPolicy: stationary allocation map
# - validate_system: report every invariant violation

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from hiermdp.config import STOCHASTIC_TOLERANCE
from hiermdp.errors import InfeasiblePolicyError, ModelValidationError
from hiermdp.orders import PartialOrder

JointState = Tuple[int, ...]
Allocation = Tuple[int, ...]


class BudgetMode(str, Enum):
    """Whether allocations may sum to at most B or must sum to exactly B"""
    AT_MOST = "at-most"
    EXACTLY = "exactly"


def _frozen(array, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


# ============================================================================
# Sub-process and System
# ============================================================================

@dataclass(frozen=True, eq=False)
class SubProcessModel:
    """
    One local MDP

    transition[a, s, s'] is the probability of moving s -> s' under action a;
    reward[s, a] is the local reward. Action a spends a units of budget.
    """
    transition: np.ndarray
    reward: np.ndarray

    def __post_init__(self):
        transition = _frozen(self.transition, float)
        reward = _frozen(self.reward, float)
        if transition.ndim != 3 or transition.shape[1] != transition.shape[2]:
            raise ModelValidationError([f"transition must have shape (m, n, n), got {transition.shape}"])
        m, n, _ = transition.shape
        if reward.shape != (n, m):
            raise ModelValidationError([f"reward must have shape ({n}, {m}), got {reward.shape}"])
        if n == 0 or m == 0:
            raise ModelValidationError(["sub-process needs at least one state and one action"])
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)

    @property
    def n_states(self) -> int:
        return self.transition.shape[1]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[0]

    def max_action(self, budget: int) -> int:
        """Largest action affordable with `budget` remaining"""
        return min(budget, self.n_actions - 1)

    def __repr__(self):
        return f"<SubProcessModel(n_states={self.n_states}, n_actions={self.n_actions})>"


@dataclass(frozen=True, eq=False)
class SystemModel:
    """
    Two-timescale hierarchical system

    global_reward has shape (prod n_i, K**N): rows are joint states in
    row-major order, columns are allocation vectors in row-major order over
    {0..K-1}^N (feasible or not).
    """
    subprocesses: Tuple[SubProcessModel, ...]
    K: int
    B: int
    T: int
    beta: float
    gamma: float
    budget_mode: BudgetMode = BudgetMode.AT_MOST
    global_reward: Optional[np.ndarray] = None
    state_orders: Optional[Tuple[PartialOrder, ...]] = None
    allow_idle_reward: bool = False
    name: str = "instance"
    _cache: Dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        subs = tuple(self.subprocesses)
        object.__setattr__(self, "subprocesses", subs)
        object.__setattr__(self, "budget_mode", BudgetMode(self.budget_mode))
        shape = tuple(sub.n_states for sub in subs)
        n_joint = int(np.prod(shape)) if subs else 0
        n_alloc = self.K ** len(subs) if subs and self.K > 0 else 0
        if self.global_reward is None:
            object.__setattr__(self, "global_reward", _frozen(np.zeros((n_joint, n_alloc)), float))
        else:
            object.__setattr__(self, "global_reward", _frozen(self.global_reward, float))
        if self.state_orders is None:
            object.__setattr__(self, "state_orders", tuple(PartialOrder.index(n) for n in shape))
        else:
            object.__setattr__(self, "state_orders", tuple(self.state_orders))

    # ------------------------------------------------------------------
    # Sizes and indexing
    # ------------------------------------------------------------------

    @property
    def N(self) -> int:
        return len(self.subprocesses)

    @property
    def state_shape(self) -> Tuple[int, ...]:
        return tuple(sub.n_states for sub in self.subprocesses)

    @property
    def n_joint_states(self) -> int:
        return int(np.prod(self.state_shape))

    def joint_index(self, components: Sequence[int]) -> int:
        """Row-major index of a joint state"""
        return int(np.ravel_multi_index(tuple(components), self.state_shape))

    def joint_state(self, index: int) -> JointState:
        return tuple(int(c) for c in np.unravel_index(index, self.state_shape))

    def joint_states(self) -> List[JointState]:
        """All joint states in index order"""
        return [tuple(s) for s in itertools.product(*(range(n) for n in self.state_shape))]

    def allocation_index(self, allocation: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(allocation), (self.K,) * self.N))

    def is_feasible(self, allocation: Sequence[int]) -> bool:
        if len(allocation) != self.N or any(a < 0 or a >= self.K for a in allocation):
            return False
        total = sum(allocation)
        if self.budget_mode is BudgetMode.EXACTLY:
            return total == self.B
        return total <= self.B

    def immediate_reward(self, allocation: Sequence[int]) -> np.ndarray:
        """I_g(., a_g) over joint states"""
        return self.global_reward[:, self.allocation_index(allocation)]

    @property
    def joint_order(self) -> PartialOrder:
        """Componentwise product of the per-subprocess state orders"""
        if "joint_order" not in self._cache:
            self._cache["joint_order"] = PartialOrder.product(self.state_orders)
        return self._cache["joint_order"]

    def action_kernel(self, actions: Sequence[int]) -> np.ndarray:
        """Joint one-step transition matrix under a fixed joint action vector"""
        key = ("kernel", tuple(actions))
        if key not in self._cache:
            mats = [sub.transition[a] for sub, a in zip(self.subprocesses, actions)]
            self._cache[key] = reduce(np.kron, mats)
        return self._cache[key]

    def action_reward(self, actions: Sequence[int]) -> np.ndarray:
        """Sum of local rewards over joint states under a fixed joint action vector"""
        key = ("reward", tuple(actions))
        if key not in self._cache:
            cols = [sub.reward[:, a] for sub, a in zip(self.subprocesses, actions)]
            self._cache[key] = reduce(lambda x, y: np.add.outer(x, y).reshape(-1), cols)
        return self._cache[key]

    def max_epoch_reward(self) -> float:
        """Upper bound on |R| over one epoch"""
        discount = sum(self.gamma**t for t in range(self.T))
        local = sum(float(np.max(np.abs(sub.reward))) for sub in self.subprocesses)
        glob = float(np.max(np.abs(self.global_reward))) if self.global_reward.size else 0.0
        return glob + discount * local

    def __repr__(self):
        return (
            f"<SystemModel(name={self.name}, N={self.N}, K={self.K}, B={self.B}, "
            f"mode={self.budget_mode.value}, T={self.T}, beta={self.beta}, gamma={self.gamma})>"
        )


# ============================================================================
# Policies
# ============================================================================

@dataclass(frozen=True, eq=False)
class LocalPolicy:
    """
    Budget-augmented decision table for one sub-process and one grant

    actions[t, s, b] is the action taken at fast step t in local state s with
    b units of budget remaining; actions never exceed b.
    """
    budget: int
    actions: np.ndarray

    def __post_init__(self):
        actions = _frozen(self.actions, np.int64)
        if actions.ndim != 3 or actions.shape[2] != self.budget + 1:
            raise InfeasiblePolicyError(
                f"policy table must have shape (T, n, {self.budget + 1}), got {actions.shape}"
            )
        over = actions > np.arange(self.budget + 1)[None, None, :]
        if over.any() or (actions < 0).any():
            t, s, b = np.argwhere(over | (actions < 0))[0]
            raise InfeasiblePolicyError(
                f"action {actions[t, s, b]} at (t={t}, s={s}) exceeds remaining budget {b}"
            )
        object.__setattr__(self, "actions", actions)

    @classmethod
    def idle(cls, n_states: int, T: int, budget: int) -> "LocalPolicy":
        """Never spend"""
        return cls(budget, np.zeros((T, n_states, budget + 1), dtype=np.int64))

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    def action(self, t: int, s: int, b: int) -> int:
        return int(self.actions[t, s, b])

    def first_actions(self) -> Tuple[int, ...]:
        """Action at the start of the epoch in every state (full budget)"""
        return tuple(int(a) for a in self.actions[0, :, self.budget])

    def __repr__(self):
        return f"<LocalPolicy(budget={self.budget}, T={self.horizon}, first={self.first_actions()})>"


@dataclass(frozen=True, eq=False)
class JointLocalPolicy:
    """
    Coupled decision table for all sub-processes under one allocation

    actions[t, x, b_1, ..., b_N, i] is the action of sub-process i at fast
    step t in joint local state x (row-major index) with remaining budgets b.
    """
    allocation: Allocation
    actions: np.ndarray

    def __post_init__(self):
        allocation = tuple(int(g) for g in self.allocation)
        actions = _frozen(self.actions, np.int64)
        n = len(allocation)
        expected = tuple(g + 1 for g in allocation) + (n,)
        if actions.ndim != 3 + n or actions.shape[2:] != expected:
            raise InfeasiblePolicyError(f"joint policy table has shape {actions.shape}, expected (T, S) + {expected}")
        for i in range(n):
            grid = np.arange(allocation[i] + 1).reshape((1, 1) + tuple(-1 if k == i else 1 for k in range(n)))
            comp = actions[..., i]
            if (comp > grid).any() or (comp < 0).any():
                raise InfeasiblePolicyError(f"sub-process {i} spends more than its remaining budget")
        object.__setattr__(self, "allocation", allocation)
        object.__setattr__(self, "actions", actions)

    @classmethod
    def from_components(cls, model: SystemModel, policies: Sequence[LocalPolicy]) -> "JointLocalPolicy":
        """Embed a vector of decentralized policies into the joint table"""
        allocation = tuple(p.budget for p in policies)
        T, S, N = model.T, model.n_joint_states, model.N
        budget_shape = tuple(g + 1 for g in allocation)
        actions = np.zeros((T, S) + budget_shape + (N,), dtype=np.int64)
        states = np.array(model.joint_states(), dtype=np.int64).reshape(S, N)
        for i, policy in enumerate(policies):
            # actions[t, x, ..., b_i, ..., i] = policy.actions[t, x_i, b_i]
            table = policy.actions[:, states[:, i], :]  # (T, S, g_i + 1)
            view = table.reshape((T, S) + tuple(-1 if k == i else 1 for k in range(N)))
            actions[..., i] = np.broadcast_to(view, (T, S) + budget_shape)
        return cls(allocation, actions)

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    def first_action(self, state_index: int) -> Tuple[int, ...]:
        """Joint action at the start of the epoch from a joint state"""
        return tuple(int(a) for a in self.actions[(0, state_index) + self.allocation])

    def __repr__(self):
        return f"<JointLocalPolicy(allocation={self.allocation}, T={self.horizon})>"


@dataclass(frozen=True)
class GlobalPolicy:
    """Stationary allocation map phi: joint state index -> allocation"""
    allocations: Tuple[Allocation, ...]

    def __getitem__(self, state_index: int) -> Allocation:
        return self.allocations[state_index]

    def __len__(self) -> int:
        return len(self.allocations)

    def to_list(self) -> List[List[int]]:
        return [list(a) for a in self.allocations]


# ============================================================================
# Validation
# ============================================================================

def validate_system(model: SystemModel) -> SystemModel:
    """
    Check every invariant of a system model

    Returns:
        The same model when every invariant holds

    Raises:
        ModelValidationError: listing every violation found
    """
    violations: List[str] = []
    N = model.N
    if N == 0:
        violations.append("at least one sub-process is required (N=0)")
    if model.T < 1:
        violations.append(f"T must be a positive integer, got {model.T}")
    if model.K < 1:
        violations.append(f"K must be a positive integer, got {model.K}")
    if model.B < 0:
        violations.append(f"B must be non-negative, got {model.B}")
    for name, value in (("beta", model.beta), ("gamma", model.gamma)):
        if not 0.0 < value < 1.0:
            violations.append(f"discount {name}={value} outside (0, 1)")

    if N > 0 and model.K >= 1:
        bound = N * (model.K - 1)
        if model.budget_mode is BudgetMode.AT_MOST and not model.B < bound:
            violations.append(f"B < N(K−1) violated (B={model.B}, N(K−1)={bound})")
        if model.budget_mode is BudgetMode.EXACTLY and model.B > bound:
            violations.append(f"B <= N(K−1) violated under exact budget (B={model.B}, N(K−1)={bound})")

    for i, sub in enumerate(model.subprocesses):
        P = sub.transition
        if (P < -STOCHASTIC_TOLERANCE).any() or (P > 1 + STOCHASTIC_TOLERANCE).any():
            a, s, s2 = np.argwhere((P < -STOCHASTIC_TOLERANCE) | (P > 1 + STOCHASTIC_TOLERANCE))[0]
            violations.append(f"sub-process {i}, action {a}: probability {P[a, s, s2]:.12g} outside [0, 1] at ({s}, {s2})")
        sums = P.sum(axis=2)
        for a, s in np.argwhere(np.abs(sums - 1.0) > STOCHASTIC_TOLERANCE):
            violations.append(f"sub-process {i}, action {a}, state {s}: row sum {sums[a, s]:.12g}")
        if (sub.reward < 0).any():
            s, a = np.argwhere(sub.reward < 0)[0]
            violations.append(f"sub-process {i}: negative reward r({s},{a})={sub.reward[s, a]:.12g}")
        if not model.allow_idle_reward and np.any(sub.reward[:, 0] != 0):
            s = int(np.flatnonzero(sub.reward[:, 0] != 0)[0])
            violations.append(f"sub-process {i}: r({s},0)={sub.reward[s, 0]:.12g} but idle reward must be 0")
        if i < len(model.state_orders) and model.state_orders[i].size != sub.n_states:
            violations.append(
                f"sub-process {i}: state order has {model.state_orders[i].size} elements, expected {sub.n_states}"
            )
    if len(model.state_orders) != N:
        violations.append(f"{len(model.state_orders)} state orders given for {N} sub-processes")

    if N > 0 and model.K >= 1:
        expected = (model.n_joint_states, model.K**N)
        if model.global_reward.shape != expected:
            violations.append(f"global_reward must have shape {expected}, got {model.global_reward.shape}")
        elif np.any(model.global_reward[:, 0] != 0):
            s = int(np.flatnonzero(model.global_reward[:, 0] != 0)[0])
            violations.append(f"I_g(state {s}, zero allocation) must be 0")

    if violations:
        raise ModelValidationError(violations)
    return model
