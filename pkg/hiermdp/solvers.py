# hiermdp/solvers.py
# Slow-timescale solvers
# - enumerate_allocations: feasible allocation set A_g^B
# - FederalOperator / bellman_fopt: Bellman operator with T-myopic locals fixed
# - CentralOperator / bellman_copt: Bellman operator with an exact joint inner DP
# - value_iteration: fixed-point iteration with an epsilon-optimal stopping rule

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from hiermdp.config import DEFAULT_COPT_STATE_CAP, DEFAULT_EPSILON, DEFAULT_MAX_ITER, TIE_TOLERANCE
from hiermdp.epoch import EpochKernel, epoch_kernel
from hiermdp.errors import CapExceededError, ConvergenceError
from hiermdp.local import t_myopic_policy_vector
from hiermdp.models import Allocation, GlobalPolicy, JointLocalPolicy, LocalPolicy, SystemModel
from hiermdp.utils import argmax_first, sup_norm

logger = logging.getLogger(__name__)

LocalPolicyVector = Tuple[LocalPolicy, ...]
EpochPolicy = Union[LocalPolicyVector, JointLocalPolicy]


class Framework(str, Enum):
    """Central (COpt) or federal (FOpt) optimization"""
    COPT = "copt"
    FOPT = "fopt"


def enumerate_allocations(model: SystemModel) -> List[Allocation]:
    """All feasible allocation vectors in lexicographic order"""
    return [
        tuple(a)
        for a in itertools.product(range(model.K), repeat=model.N)
        if model.is_feasible(a)
    ]


# ============================================================================
# Results
# ============================================================================

@dataclass(frozen=True, eq=False)
class SolveResult:
    """
    Output of a slow-timescale solve

    local_policies is keyed by allocation (FOpt: tuple of LocalPolicy for every
    feasible allocation) or by joint-state index (COpt: the JointLocalPolicy
    achieving the maximum at that state's chosen allocation).
    """
    framework: Framework
    value: np.ndarray
    global_policy: GlobalPolicy
    local_policies: Mapping
    iterations: int
    residual: float
    epsilon: float
    max_iter: int
    state_shape: Tuple[int, ...] = ()
    converged: bool = True
    residual_trace: Tuple[float, ...] = ()
    history: Optional[Tuple[np.ndarray, ...]] = None

    def epoch_policy(self, state_index: int) -> EpochPolicy:
        """Local behaviour used in the epoch that starts in a joint state"""
        if self.framework is Framework.COPT:
            return self.local_policies[state_index]
        return self.local_policies[self.global_policy[state_index]]

    def first_actions(self) -> List[Tuple[int, ...]]:
        """Joint action taken at the first fast step of the epoch, per joint state"""
        out = []
        for s in range(len(self.global_policy)):
            policy = self.epoch_policy(s)
            if isinstance(policy, JointLocalPolicy):
                out.append(policy.first_action(s))
            else:
                components = np.unravel_index(s, self.state_shape)
                out.append(tuple(p.action(0, int(c), p.budget) for p, c in zip(policy, components)))
        return out


# ============================================================================
# Federal operator (FOpt)
# ============================================================================

class FederalOperator:
    """
    B_F V(s) = max_{a_g} [ R(s, a_g, pi_F^{a_g}) + beta * sum_s' p^ep(s, s') V(s') ]

    T-myopic policies and their epoch kernels do not depend on V, so they are
    computed once per allocation.
    """

    def __init__(self, model: SystemModel):
        self.model = model
        self.allocations = enumerate_allocations(model)
        self.local_policies: Dict[Allocation, LocalPolicyVector] = {}
        kernels: List[EpochKernel] = []
        for allocation in self.allocations:
            policies = t_myopic_policy_vector(model, allocation)
            self.local_policies[allocation] = policies
            kernels.append(epoch_kernel(model, allocation, policies))
        self.transitions = np.stack([k.transition for k in kernels])  # (A, S, S)
        self.rewards = np.stack([k.reward for k in kernels])  # (A, S)
        logger.debug("[FOpt] Cached epoch kernels for %d allocations", len(self.allocations))

    def q_values(self, V: np.ndarray) -> np.ndarray:
        return self.rewards + self.model.beta * (self.transitions @ V)

    def apply(self, V: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """One backup: (new value, index of the argmax allocation per state)"""
        q = self.q_values(V)
        return q.max(axis=0), argmax_first(q, axis=0)

    def global_policy(self, choice: np.ndarray) -> GlobalPolicy:
        return GlobalPolicy(tuple(self.allocations[int(k)] for k in choice))

    def extract(self, V: np.ndarray) -> Tuple[np.ndarray, Dict[Allocation, LocalPolicyVector]]:
        """Greedy allocation index per state and the allocation-keyed local policies"""
        _, choice = self.apply(V)
        return choice, dict(self.local_policies)


def bellman_fopt(model: SystemModel, V: np.ndarray) -> Tuple[np.ndarray, GlobalPolicy]:
    """Apply the federal Bellman operator once"""
    operator = FederalOperator(model)
    value, choice = operator.apply(np.asarray(V, dtype=float))
    return value, operator.global_policy(choice)


def epoch_reward_table(model: SystemModel) -> Tuple[List[Allocation], np.ndarray]:
    """
    T-myopic epoch reward R(s, a_g, pi_F^{a_g}) for every feasible allocation

    Returns:
        (allocations, rewards) with rewards[k, s] for allocation k
    """
    operator = FederalOperator(model)
    return operator.allocations, operator.rewards


# ============================================================================
# Central operator (COpt)
# ============================================================================

class CentralOperator:
    """
    B_C V(s) = max_{a_g} max_{pi} [ R(s, a_g, pi) + beta * sum_s' p^ep(s, s') V(s') ]

    The inner maximization couples sub-processes through V, so it is solved
    exactly by backward induction on (joint local state, joint remaining
    budget) with terminal value beta * V at t = T.
    """

    def __init__(self, model: SystemModel, state_cap: int = DEFAULT_COPT_STATE_CAP):
        self.model = model
        self.allocations = enumerate_allocations(model)
        S = model.n_joint_states
        self._actions: Dict[Allocation, np.ndarray] = {}
        for allocation in self.allocations:
            augmented = S * int(np.prod([g + 1 for g in allocation]))
            if augmented > state_cap:
                raise CapExceededError(f"COpt joint augmented space for allocation {allocation}", augmented, state_cap)
            ranges = [range(sub.max_action(g) + 1) for sub, g in zip(model.subprocesses, allocation)]
            self._actions[allocation] = np.array(list(itertools.product(*ranges)), dtype=np.int64)

    def inner(self, allocation: Allocation, V: np.ndarray) -> Tuple[np.ndarray, JointLocalPolicy]:
        """
        Exact inner maximization over coupled local policies for one allocation

        Returns:
            (values, policy): values[s] = max_pi [local epoch reward + beta E V(s')]
            from every joint start state s (I_g excluded)
        """
        model = self.model
        S, N, T = model.n_joint_states, model.N, model.T
        budget_shape = tuple(g + 1 for g in allocation)
        action_list = self._actions[allocation]
        full = (slice(None),)

        W = np.broadcast_to((model.beta * V).reshape((S,) + (1,) * N), (S,) + budget_shape).copy()
        tables = np.zeros((T, S) + budget_shape + (N,), dtype=np.int64)
        for t in reversed(range(T)):
            weight = model.gamma**t
            regions = []
            best = np.full((S,) + budget_shape, -np.inf)
            for acts in action_list:
                # W_{t+1}(x', b - a) for every b >= a
                source = W[full + tuple(slice(0, g + 1 - a) for g, a in zip(allocation, acts))]
                target = full + tuple(slice(a, g + 1) for g, a in zip(allocation, acts))
                cont = np.tensordot(model.action_kernel(acts), source, axes=(1, 0))
                local = model.action_reward(acts).reshape((S,) + (1,) * N)
                q = weight * local + cont
                regions.append((target, q))
                best[target] = np.maximum(best[target], q)
            chosen = np.full((S,) + budget_shape, -1, dtype=np.int64)
            for k, (target, q) in enumerate(regions):
                pick = (chosen[target] < 0) & (q >= best[target] - TIE_TOLERANCE)
                chosen[target] = np.where(pick, k, chosen[target])
            tables[t] = action_list[chosen]
            W = best
        values = W[full + tuple(allocation)]
        return values, JointLocalPolicy(allocation, tables)

    def apply_full(self, V: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[JointLocalPolicy]]:
        """One backup returning the value, argmax allocation index and inner policies"""
        q = np.empty((len(self.allocations), self.model.n_joint_states))
        policies = []
        for k, allocation in enumerate(self.allocations):
            values, policy = self.inner(allocation, V)
            q[k] = self.model.immediate_reward(allocation) + values
            policies.append(policy)
        return q.max(axis=0), argmax_first(q, axis=0), policies

    def apply(self, V: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        value, choice, _ = self.apply_full(V)
        return value, choice

    def global_policy(self, choice: np.ndarray) -> GlobalPolicy:
        return GlobalPolicy(tuple(self.allocations[int(k)] for k in choice))

    def extract(self, V: np.ndarray) -> Tuple[np.ndarray, Dict[int, JointLocalPolicy]]:
        """Greedy allocation index per state and the state-keyed inner policies"""
        _, choice, policies = self.apply_full(V)
        return choice, {s: policies[int(k)] for s, k in enumerate(choice)}


def bellman_copt(
    model: SystemModel,
    V: np.ndarray,
    state_cap: int = DEFAULT_COPT_STATE_CAP,
) -> Tuple[np.ndarray, GlobalPolicy, Dict[int, JointLocalPolicy]]:
    """Apply the central Bellman operator once"""
    operator = CentralOperator(model, state_cap)
    value, choice, policies = operator.apply_full(np.asarray(V, dtype=float))
    return value, operator.global_policy(choice), {s: policies[int(k)] for s, k in enumerate(choice)}


# ============================================================================
# Value Iteration
# ============================================================================

def make_operator(model: SystemModel, which: Framework, state_cap: int = DEFAULT_COPT_STATE_CAP):
    if Framework(which) is Framework.COPT:
        return CentralOperator(model, state_cap)
    return FederalOperator(model)


def stopping_threshold(epsilon: float, beta: float) -> float:
    """Sup-norm residual that guarantees an epsilon-optimal value"""
    return epsilon * (1.0 - beta) / (2.0 * beta)


def value_iteration(
    model: SystemModel,
    which: Framework,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
    state_cap: int = DEFAULT_COPT_STATE_CAP,
    keep_history: bool = False,
    log_every: int = 1000,
) -> SolveResult:
    """
    Iterate the chosen Bellman operator from V^(0) = 0

    Stops once the sup-norm residual is at most epsilon(1 - beta)/(2 beta);
    greedy policies are extracted at the final value.

    Args:
        model: Validated system model
        which: Framework.COPT or Framework.FOPT
        epsilon: Target accuracy (> 0)
        max_iter: Sweep limit
        state_cap: Size guard for the COpt joint augmented space
        keep_history: Retain every iterate V^(m)

    Returns:
        SolveResult

    Raises:
        ConvergenceError: max_iter reached first (carries the partial result)
        CapExceededError: COpt joint space too large
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    which = Framework(which)
    operator = make_operator(model, which, state_cap)
    threshold = stopping_threshold(epsilon, model.beta)
    V = np.zeros(model.n_joint_states)
    history = [V] if keep_history else None
    trace: List[float] = []
    residual = np.inf
    converged = False
    sweeps = 0
    logger.info(
        "[ValueIteration] %s on %r: %d allocations, threshold %.3e",
        which.value, model, len(operator.allocations), threshold,
    )
    while sweeps < max_iter:
        new_value, _ = operator.apply(V)
        sweeps += 1
        residual = sup_norm(new_value, V)
        trace.append(residual)
        V = new_value
        if history is not None:
            history.append(V)
        if sweeps % log_every == 0:
            logger.debug("[ValueIteration] %s sweep %d residual %.3e", which.value, sweeps, residual)
        if residual <= threshold:
            converged = True
            break

    choice, tables = operator.extract(V)
    result = SolveResult(
        framework=which,
        value=V,
        global_policy=operator.global_policy(choice),
        local_policies=tables,
        iterations=sweeps,
        residual=float(residual),
        epsilon=epsilon,
        max_iter=max_iter,
        state_shape=model.state_shape,
        converged=converged,
        residual_trace=tuple(trace),
        history=tuple(history) if history is not None else None,
    )
    if not converged:
        logger.warning("[ValueIteration] %s stopped at max_iter=%d, residual %.3e", which.value, max_iter, residual)
        raise ConvergenceError(result)
    logger.info("[ValueIteration] %s converged after %d sweeps (residual %.2e)", which.value, sweeps, residual)
    return result
