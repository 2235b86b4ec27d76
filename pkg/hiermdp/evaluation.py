# hiermdp/evaluation.py
# Policy evaluation for a (global, local) policy pair
# - evaluate_policy_exact: linear solve of V = R + beta P V over epoch kernels
# - evaluate_policy_mc: seeded fast-timescale rollouts with standard errors

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from hiermdp.config import DEFAULT_MC_EPISODES, DEFAULT_MC_HORIZON
from hiermdp.epoch import EpochKernel, epoch_kernel, joint_epoch_kernel
from hiermdp.errors import InfeasiblePolicyError
from hiermdp.models import GlobalPolicy, JointLocalPolicy, SystemModel

logger = logging.getLogger(__name__)

REFINE_TOLERANCE = 1e-10


def epoch_policy_for(model: SystemModel, phi: GlobalPolicy, pi: Mapping, state_index: int):
    """
    Local behaviour for the epoch starting in a joint state

    pi may be keyed by joint-state index (JointLocalPolicy values) or by
    allocation (tuples of LocalPolicy); state keys take precedence.
    """
    allocation = tuple(phi[state_index])
    if not model.is_feasible(allocation):
        raise InfeasiblePolicyError(f"state {state_index}: allocation {allocation} is not feasible")
    if state_index in pi:
        policy = pi[state_index]
    elif allocation in pi:
        policy = pi[allocation]
    else:
        raise InfeasiblePolicyError(f"no local policy for state {state_index} / allocation {allocation}")
    if isinstance(policy, JointLocalPolicy):
        if policy.allocation != allocation:
            raise InfeasiblePolicyError(
                f"state {state_index}: joint policy built for {policy.allocation}, phi grants {allocation}"
            )
        return policy
    policies = tuple(policy)
    if tuple(p.budget for p in policies) != allocation:
        raise InfeasiblePolicyError(f"state {state_index}: local budgets do not match allocation {allocation}")
    return policies


def assemble_system(model: SystemModel, phi: GlobalPolicy, pi: Mapping) -> EpochKernel:
    """Stack the epoch-kernel rows and rewards selected by phi"""
    S = model.n_joint_states
    if len(phi) != S:
        raise InfeasiblePolicyError(f"global policy covers {len(phi)} states, model has {S}")
    transition = np.empty((S, S))
    reward = np.empty(S)
    cache: Dict[object, EpochKernel] = {}
    for s in range(S):
        policy = epoch_policy_for(model, phi, pi, s)
        key = id(policy) if isinstance(policy, JointLocalPolicy) else tuple(id(p) for p in policy)
        if key not in cache:
            if isinstance(policy, JointLocalPolicy):
                cache[key] = joint_epoch_kernel(model, policy)
            else:
                cache[key] = epoch_kernel(model, tuple(phi[s]), policy)
        transition[s] = cache[key].transition[s]
        reward[s] = cache[key].reward[s]
    return EpochKernel(transition=transition, reward=reward)


def evaluate_policy_exact(model: SystemModel, phi: GlobalPolicy, pi: Mapping) -> np.ndarray:
    """
    Exact value of a stationary (global, local) policy pair

    Solves (I - beta P) V = R directly, with one refinement step when the
    residual exceeds 1e-10.

    Args:
        model: Validated system model
        phi: Allocation per joint state
        pi: Local policies keyed by allocation or by joint-state index

    Returns:
        Value vector over joint states
    """
    system = assemble_system(model, phi, pi)
    S = model.n_joint_states
    A = np.eye(S) - model.beta * system.transition
    V = np.linalg.solve(A, system.reward)
    residual = system.reward - A @ V
    if np.max(np.abs(residual), initial=0.0) > REFINE_TOLERANCE:
        V = V + np.linalg.solve(A, residual)
    return V


# ============================================================================
# Monte Carlo
# ============================================================================

@dataclass(frozen=True, eq=False)
class MonteCarloEstimate:
    """Per-state sample mean of the discounted return with its standard error"""
    mean: np.ndarray
    stderr: np.ndarray
    episodes: int
    horizon: int
    seed: int
    truncation_bias: float

    def band(self, k: float = 3.0) -> Tuple[np.ndarray, np.ndarray]:
        """Interval mean -/+ (k * stderr + truncation bias)"""
        width = k * self.stderr + self.truncation_bias
        return self.mean - width, self.mean + width

    def contains(self, values: np.ndarray, k: float = 3.0) -> bool:
        low, high = self.band(k)
        values = np.asarray(values, dtype=float)
        return bool(np.all((values >= low) & (values <= high)))


def truncation_bias(model: SystemModel, horizon: int) -> float:
    """Upper bound on the discounted reward lost by stopping after `horizon` epochs"""
    return model.beta**horizon * model.max_epoch_reward() / (1.0 - model.beta)


def _padded_tables(model: SystemModel, phi: GlobalPolicy, pi: Mapping) -> np.ndarray:
    """
    Joint action tables for every start state, padded to budgets 0..K-1

    Returns:
        Array (S_start, T, S, K**N, N)
    """
    S, N, T, K = model.n_joint_states, model.N, model.T, model.K
    padded = np.zeros((S, T, S) + (K,) * N + (N,), dtype=np.int64)
    for s in range(S):
        policy = epoch_policy_for(model, phi, pi, s)
        if not isinstance(policy, JointLocalPolicy):
            policy = JointLocalPolicy.from_components(model, policy)
        region = (s, slice(None), slice(None)) + tuple(slice(0, g + 1) for g in policy.allocation)
        padded[region] = policy.actions
    return padded.reshape(S, T, S, K**N, N)


def evaluate_policy_mc(
    model: SystemModel,
    phi: GlobalPolicy,
    pi: Mapping,
    horizon: int = DEFAULT_MC_HORIZON,
    episodes: int = DEFAULT_MC_EPISODES,
    seed: int = 0,
    bias_bound: Optional[float] = None,
) -> MonteCarloEstimate:
    """
    Monte Carlo value of a policy pair from every joint start state

    Every episode is simulated slot by slot on the fast timescale for
    `horizon` epochs. Output is deterministic for a fixed seed.

    Args:
        horizon: Epochs per episode
        episodes: Episodes per start state (>= 2)
        seed: numpy Generator seed
        bias_bound: Refuse horizons whose truncation bias is not below this

    Raises:
        ValueError: horizon too short for bias_bound, or episodes < 2
    """
    if episodes < 2:
        raise ValueError("episodes must be >= 2 to report a standard error")
    bias = truncation_bias(model, horizon)
    if bias_bound is not None and not bias < bias_bound:
        raise ValueError(f"horizon {horizon} leaves truncation bias {bias:.3e} >= requested {bias_bound:.3e}")

    S, N, T, K = model.n_joint_states, model.N, model.T, model.K
    tables = _padded_tables(model, phi, pi)
    cumulative = []
    for sub in model.subprocesses:
        c = np.cumsum(sub.transition, axis=2)
        c[:, :, -1] = 1.0
        cumulative.append(c)
    allocations = np.array([phi[s] for s in range(S)], dtype=np.int64).reshape(S, N)
    global_reward = np.array([model.immediate_reward(phi[s])[s] for s in range(S)])

    rng = np.random.default_rng(seed)
    start = np.repeat(np.arange(S), episodes)
    components = np.array(np.unravel_index(start, model.state_shape)).T.reshape(-1, N)
    total = np.zeros(start.size)
    discount = 1.0
    logger.info("[MonteCarlo] %d episodes x %d start states, horizon %d, seed %d", episodes, S, horizon, seed)
    for _ in range(horizon):
        epoch_start = np.ravel_multi_index(tuple(components.T), model.state_shape)
        budgets = allocations[epoch_start].copy()
        epoch = global_reward[epoch_start].copy()
        for t in range(T):
            x = np.ravel_multi_index(tuple(components.T), model.state_shape)
            flat_budget = np.ravel_multi_index(tuple(budgets.T), (K,) * N)
            actions = tables[epoch_start, t, x, flat_budget]  # (M, N)
            u = rng.random((start.size, N))
            for i, sub in enumerate(model.subprocesses):
                a_i, x_i = actions[:, i], components[:, i]
                epoch += model.gamma**t * sub.reward[x_i, a_i]
                components[:, i] = np.argmax(u[:, i, None] < cumulative[i][a_i, x_i], axis=1)
            budgets -= actions
        total += discount * epoch
        discount *= model.beta

    samples = total.reshape(S, episodes)
    return MonteCarloEstimate(
        mean=samples.mean(axis=1),
        stderr=samples.std(axis=1, ddof=1) / np.sqrt(episodes),
        episodes=episodes,
        horizon=horizon,
        seed=seed,
        truncation_bias=bias,
    )
