# hiermdp/oracle.py
# Brute-force references for tiny instances
# - EnumerationBudget: caps checked before any enumeration starts
# - Reachable-frontier enumeration of Markov decision tables
# - brute_force_local: best local table by exhaustive path expansion
# - brute_force_copt: best (global, joint local) stationary pair by exhaustive search

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from hiermdp.config import DEFAULT_ORACLE_CANDIDATE_CAP, DEFAULT_ORACLE_TABLE_CAP
from hiermdp.errors import CapExceededError, OracleError
from hiermdp.local import LocalDPResult
from hiermdp.models import GlobalPolicy, JointLocalPolicy, LocalPolicy, SubProcessModel, SystemModel
from hiermdp.solvers import Framework, SolveResult, enumerate_allocations
from hiermdp.utils import argmax_first

logger = logging.getLogger(__name__)

Entry = Tuple[int, Hashable]  # (state, remaining budget)
Table = Dict[Tuple[int, Hashable], Hashable]  # (t, entry) -> action

VALUE_TOLERANCE = 1e-9
SOLVE_CHUNK = 65536


@dataclass(frozen=True)
class EnumerationBudget:
    """Caps on oracle work; enumeration refuses to start beyond them"""
    tables: int = DEFAULT_ORACLE_TABLE_CAP
    candidates: int = DEFAULT_ORACLE_CANDIDATE_CAP
    joint_states: int = 64
    allocations: int = 64

    def check(self, what: str, projected: int, cap: int):
        if projected > cap:
            raise CapExceededError(what, projected, cap)


# ============================================================================
# Table Enumeration
# ============================================================================

class TableSpace:
    """
    Deterministic Markov tables over (t, entry), restricted to entries
    reached with positive probability from a set of start entries

    Entries at each step are visited in sorted order and actions in the order
    `choices` lists them, so enumeration is lexicographic.
    """

    def __init__(
        self,
        starts: Iterable[Hashable],
        choices: Callable[[Hashable], Sequence[Hashable]],
        successors: Callable[[Hashable, Hashable], Iterable[Hashable]],
        T: int,
    ):
        self.starts = frozenset(starts)
        self.choices = choices
        self.successors = successors
        self.T = T
        self._count = lru_cache(maxsize=None)(self._count_from)

    def _next_frontier(self, entries, combo) -> FrozenSet:
        nxt = set()
        for entry, action in zip(entries, combo):
            nxt.update(self.successors(entry, action))
        return frozenset(nxt)

    def _count_from(self, t: int, frontier: FrozenSet) -> int:
        if t == self.T or not frontier:
            return 1
        entries = sorted(frontier)
        total = 0
        for combo in itertools.product(*(self.choices(e) for e in entries)):
            total += self._count(t + 1, self._next_frontier(entries, combo))
        return total

    def count(self) -> int:
        """Number of distinct tables"""
        return self._count(0, self.starts)

    def __iter__(self) -> Iterator[Table]:
        return self._expand(0, self.starts, {})

    def _expand(self, t: int, frontier: FrozenSet, assigned: Table) -> Iterator[Table]:
        if t == self.T or not frontier:
            yield assigned
            return
        entries = sorted(frontier)
        for combo in itertools.product(*(self.choices(e) for e in entries)):
            level = dict(assigned)
            level.update({(t, e): a for e, a in zip(entries, combo)})
            yield from self._expand(t + 1, self._next_frontier(entries, combo), level)


def local_table_space(sub: SubProcessModel, budget: int, T: int) -> TableSpace:
    """Local tables reachable from every state with the full grant"""

    def choices(entry):
        _, b = entry
        return range(sub.max_action(b) + 1)

    def successors(entry, a):
        s, b = entry
        return [(int(s2), b - a) for s2 in np.flatnonzero(sub.transition[a, s] > 0)]

    return TableSpace([(s, budget) for s in range(sub.n_states)], choices, successors, T)


def local_policy_from_table(sub: SubProcessModel, budget: int, T: int, table: Table) -> LocalPolicy:
    """Materialize a table; unreached entries stay idle"""
    actions = np.zeros((T, sub.n_states, budget + 1), dtype=np.int64)
    for (t, (s, b)), a in table.items():
        actions[t, s, b] = a
    return LocalPolicy(budget, actions)


def joint_table_space(model: SystemModel, allocation, start: int) -> TableSpace:
    """Joint tables reachable from (start, allocation)"""
    n_actions = [sub.n_actions for sub in model.subprocesses]

    def choices(entry):
        _, b = entry
        return list(itertools.product(*(range(min(bi, m - 1) + 1) for bi, m in zip(b, n_actions))))

    def successors(entry, acts):
        x, b = entry
        row = model.action_kernel(acts)[x]
        rest = tuple(bi - ai for bi, ai in zip(b, acts))
        return [(int(x2), rest) for x2 in np.flatnonzero(row > 0)]

    return TableSpace([(start, tuple(allocation))], choices, successors, model.T)


def joint_policy_from_table(model: SystemModel, allocation, table: Table) -> JointLocalPolicy:
    budget_shape = tuple(g + 1 for g in allocation)
    actions = np.zeros((model.T, model.n_joint_states) + budget_shape + (model.N,), dtype=np.int64)
    for (t, (x, b)), acts in table.items():
        actions[(t, x) + tuple(b)] = acts
    return JointLocalPolicy(tuple(allocation), actions)


# ============================================================================
# Path Expansion
# ============================================================================

def expand_local_paths(sub: SubProcessModel, table: Table, start: Entry, gamma: float, T: int) -> float:
    """Expected discounted reward of a local table by summing over every sample path"""

    def walk(t: int, s: int, b: int) -> float:
        if t == T:
            return 0.0
        a = table[(t, (s, b))]
        total = sub.reward[s, a]
        for s2 in np.flatnonzero(sub.transition[a, s] > 0):
            total += gamma * sub.transition[a, s, s2] * walk(t + 1, int(s2), b - a)
        return total

    return walk(0, *start)


def expand_joint_paths(model: SystemModel, table: Table, start: int, allocation) -> Tuple[float, np.ndarray]:
    """
    Expected local epoch reward and end-of-epoch distribution of a joint table

    Returns:
        (reward, row) with row over joint states
    """
    row = np.zeros(model.n_joint_states)
    reward = 0.0
    stack = [(0, start, tuple(allocation), 1.0)]
    while stack:
        t, x, b, prob = stack.pop()
        if t == model.T:
            row[x] += prob
            continue
        acts = table[(t, (x, b))]
        reward += prob * model.gamma**t * model.action_reward(acts)[x]
        kernel = model.action_kernel(acts)[x]
        rest = tuple(bi - ai for bi, ai in zip(b, acts))
        for x2 in np.flatnonzero(kernel > 0):
            stack.append((t + 1, int(x2), rest, prob * kernel[x2]))
    return reward, row


# ============================================================================
# Oracles
# ============================================================================

def brute_force_local(
    sub: SubProcessModel,
    budget: int,
    T: int,
    gamma: float,
    limits: EnumerationBudget = EnumerationBudget(),
) -> LocalDPResult:
    """
    Best local table by exhaustive enumeration

    Every reachable table is scored by the sum of its values over start
    states; the first maximizer in lexicographic order wins, and it must
    attain the per-state maximum.

    Returns:
        LocalDPResult whose value holds only v_0(., budget) meaningfully
        (value[0, :, budget]); other entries are zero

    Raises:
        CapExceededError: more tables than limits.tables
        OracleError: no single table attains every per-state maximum
    """
    space = local_table_space(sub, budget, T)
    total = space.count()
    limits.check("local policy tables", total, limits.tables)
    logger.debug("[Oracle] Enumerating %d local tables (budget %d, T=%d)", total, budget, T)

    starts = [(s, budget) for s in range(sub.n_states)]
    best_table, best_values, best_sum = None, None, -np.inf
    per_state_max = np.full(sub.n_states, -np.inf)
    for table in space:
        values = np.array([expand_local_paths(sub, table, e, gamma, T) for e in starts])
        per_state_max = np.maximum(per_state_max, values)
        if values.sum() > best_sum + VALUE_TOLERANCE:
            best_table, best_values, best_sum = table, values, values.sum()

    if np.any(best_values < per_state_max - VALUE_TOLERANCE):
        raise OracleError(f"no local table attains the per-state maximum {per_state_max}")
    value = np.zeros((T + 1, sub.n_states, budget + 1))
    value[0, :, budget] = best_values
    return LocalDPResult(policy=local_policy_from_table(sub, budget, T, best_table), value=value)


@dataclass(frozen=True)
class _Option:
    reward: float
    row: np.ndarray
    allocation: Tuple[int, ...]
    table: Table


def _state_options(model: SystemModel, state: int, limits: EnumerationBudget) -> List[_Option]:
    """Distinct (epoch reward, epoch row) pairs available from one joint state"""
    options: List[_Option] = []
    seen = set()
    for allocation in enumerate_allocations(model):
        space = joint_table_space(model, allocation, state)
        limits.check(f"joint tables from state {state}, allocation {allocation}", space.count(), limits.tables)
        glob = model.immediate_reward(allocation)[state]
        for table in space:
            local, row = expand_joint_paths(model, table, state, allocation)
            key = (round(glob + local, 12),) + tuple(np.round(row, 12))
            if key in seen:
                continue
            seen.add(key)
            options.append(_Option(glob + local, row, allocation, table))
    return options


def brute_force_copt(
    model: SystemModel,
    epsilon: float = 1e-6,
    limits: EnumerationBudget = EnumerationBudget(),
) -> SolveResult:
    """
    Optimal central value by enumerating every stationary global policy and
    every joint local table, each candidate evaluated exactly

    Candidates with identical (reward, epoch row) per state are merged since
    they produce identical values; the first occurrence is kept.

    Args:
        model: Validated system model
        epsilon: Tolerance for the single-maximizer check

    Raises:
        CapExceededError: joint states, allocations, tables or candidates beyond limits
        OracleError: no candidate attains the componentwise maximum
    """
    S = model.n_joint_states
    limits.check("joint states", S, limits.joint_states)
    limits.check("allocations", len(enumerate_allocations(model)), limits.allocations)
    options = [_state_options(model, s, limits) for s in range(S)]
    counts = [len(o) for o in options]
    total = int(np.prod(counts, dtype=object))
    limits.check("stationary candidate pairs", total, limits.candidates)
    logger.info("[Oracle] Evaluating %d candidate policies over %d states", total, S)

    rewards = [np.array([o.reward for o in opts]) for opts in options]
    rows = [np.stack([o.row for o in opts]) for opts in options]
    identity = np.eye(S)
    best_index, best_value, best_sum = None, None, -np.inf
    componentwise = np.full(S, -np.inf)
    for lo in range(0, total, SOLVE_CHUNK):
        flat = np.arange(lo, min(lo + SOLVE_CHUNK, total))
        picks = np.unravel_index(flat, counts)
        R = np.stack([rewards[s][picks[s]] for s in range(S)], axis=1)  # (M, S)
        P = np.stack([rows[s][picks[s]] for s in range(S)], axis=1)  # (M, S, S)
        V = np.linalg.solve(identity - model.beta * P, R[..., None])[..., 0]
        componentwise = np.maximum(componentwise, V.max(axis=0))
        sums = V.sum(axis=1)
        k = int(argmax_first(sums, tol=VALUE_TOLERANCE))
        if sums[k] > best_sum + VALUE_TOLERANCE:
            best_index, best_value, best_sum = int(flat[k]), V[k], sums[k]

    if np.any(best_value < componentwise - epsilon):
        raise OracleError(f"best candidate {best_value} does not attain componentwise maximum {componentwise}")

    chosen = [options[s][int(i)] for s, i in enumerate(np.unravel_index(best_index, counts))]
    return SolveResult(
        framework=Framework.COPT,
        value=best_value,
        global_policy=GlobalPolicy(tuple(o.allocation for o in chosen)),
        local_policies={s: joint_policy_from_table(model, o.allocation, o.table) for s, o in enumerate(chosen)},
        iterations=0,
        residual=0.0,
        epsilon=epsilon,
        max_iter=0,
        state_shape=model.state_shape,
    )
