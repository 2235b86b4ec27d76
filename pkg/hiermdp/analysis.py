# hiermdp/analysis.py
# Comparative analysis of the central and federal frameworks
# - check_assumptions: structural sufficiency conditions A1-A5 with witnesses
# - compare_frameworks: equivalence verdict, value gap bound, T-myopic test
# - check_value_monotone / check_reward_monotone / check_monotone_iterates

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from hiermdp.config import (
    DEFAULT_COPT_STATE_CAP,
    DEFAULT_EPSILON,
    DEFAULT_MAX_ITER,
    DEFAULT_POLICY_CAP,
    DEFAULT_UPPER_SET_CAP,
    DOMINANCE_TOLERANCE,
    MONOTONE_TOLERANCE,
)
from hiermdp.epoch import epoch_kernel, joint_epoch_kernel, local_epoch_marginal
from hiermdp.errors import CapExceededError
from hiermdp.evaluation import evaluate_policy_exact
from hiermdp.local import t_myopic_policy_vector
from hiermdp.models import Allocation, SystemModel
from hiermdp.oracle import local_policy_from_table, local_table_space
from hiermdp.orders import PartialOrder, dominance_witness, upper_set_mass
from hiermdp.solvers import Framework, SolveResult, enumerate_allocations, epoch_reward_table, value_iteration

logger = logging.getLogger(__name__)

EQUIVALENCE_FACTOR = 10.0
SANDWICH_TOLERANCE = 1e-6
ASSUMPTIONS = ("A1", "A2", "A3", "A4", "A5")


class Verdict(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    NOT_CHECKED = "not-checked"


# ============================================================================
# Witnesses and Reports
# ============================================================================

@dataclass(frozen=True, eq=False)
class Witness:
    """
    Concrete counterexample for a failed condition

    kind "dominance": `upper_set` is an upper set of `order` with p(U) < q(U),
    i.e. p does not stochastically dominate q.
    kind "inequality": the required lhs <= rhs is broken.
    kind "order": `order` is not a partial order of the expected size.
    """
    assumption: str
    kind: str
    message: str
    p: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    upper_set: Optional[FrozenSet[int]] = None
    order: Optional[PartialOrder] = None
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    context: Dict[str, Any] = field(default_factory=dict)

    def confirms(self) -> bool:
        """Independently re-check that this witness is a violation"""
        if self.kind == "dominance":
            return self.order.is_upper_set(self.upper_set) and (
                upper_set_mass(self.p, self.upper_set) < upper_set_mass(self.q, self.upper_set) - DOMINANCE_TOLERANCE
            )
        if self.kind == "inequality":
            return self.lhs > self.rhs + MONOTONE_TOLERANCE
        if self.kind == "order":
            return bool(self.order.violations()) or self.order.size != self.context.get("expected")
        return False


@dataclass(frozen=True, eq=False)
class AssumptionResult:
    name: str
    verdict: Verdict
    detail: str = ""
    witness: Optional[Witness] = None
    comparisons: int = 0
    failures: int = 0


@dataclass(frozen=True, eq=False)
class AssumptionReport:
    """Per-assumption verdicts; the conditions are sufficient iff A1-A5 all hold"""
    results: Dict[str, AssumptionResult]
    notes: Tuple[str, ...] = ()

    @property
    def sufficient(self) -> bool:
        return all(r.verdict is Verdict.HOLDS for r in self.results.values())

    @property
    def exit_code(self) -> int:
        verdicts = {r.verdict for r in self.results.values()}
        if Verdict.FAILS in verdicts:
            return 3
        if Verdict.NOT_CHECKED in verdicts:
            return 4
        return 0

    def __getitem__(self, name: str) -> AssumptionResult:
        return self.results[name]


class _Collector:
    """Counts comparisons for one assumption and keeps the first witness"""

    def __init__(self, name: str):
        self.name = name
        self.comparisons = 0
        self.failures = 0
        self.witness: Optional[Witness] = None

    def record(self, witness: Optional[Witness]):
        self.comparisons += 1
        if witness is not None:
            self.failures += 1
            if self.witness is None:
                self.witness = witness

    def result(self, detail: str = "") -> AssumptionResult:
        verdict = Verdict.FAILS if self.failures else Verdict.HOLDS
        if self.witness is not None:
            detail = detail or self.witness.message
        return AssumptionResult(self.name, verdict, detail, self.witness, self.comparisons, self.failures)


def _not_checked(name: str, error: CapExceededError) -> AssumptionResult:
    logger.warning("[Assumptions] %s not checked: %s", name, error)
    return AssumptionResult(name, Verdict.NOT_CHECKED, str(error))


def _dominance(
    assumption: str,
    p: np.ndarray,
    q: np.ndarray,
    order: PartialOrder,
    cap: int,
    message: str,
    **context,
) -> Optional[Witness]:
    """Witness when p fails to dominate q, else None"""
    upper = dominance_witness(p, q, order, cap)
    if upper is None:
        return None
    return Witness(
        assumption=assumption,
        kind="dominance",
        message=f"{message}: {np.round(p, 6).tolist()} does not dominate {np.round(q, 6).tolist()} "
        f"on upper set {sorted(upper)}",
        p=np.asarray(p, dtype=float),
        q=np.asarray(q, dtype=float),
        upper_set=upper,
        order=order,
        context=context,
    )


def _inequality(assumption: str, lhs: float, rhs: float, message: str, **context) -> Optional[Witness]:
    if lhs <= rhs + MONOTONE_TOLERANCE:
        return None
    return Witness(
        assumption=assumption,
        kind="inequality",
        message=f"{message}: {lhs:.12g} > {rhs:.12g}",
        lhs=float(lhs),
        rhs=float(rhs),
        context=context,
    )


# ============================================================================
# A1 - A5
# ============================================================================

def _check_orders(model: SystemModel) -> AssumptionResult:
    checks = _Collector("A1")
    for i, (order, sub) in enumerate(zip(model.state_orders, model.subprocesses)):
        broken = bool(order.violations()) or order.size != sub.n_states
        checks.record(
            Witness("A1", "order", f"sub-process {i}: state order is not a partial order on {sub.n_states} states",
                    order=order, context={"subprocess": i, "expected": sub.n_states})
            if broken else None
        )
    return checks.result()


def _check_rewards(model: SystemModel) -> AssumptionResult:
    checks = _Collector("A2")
    for i, sub in enumerate(model.subprocesses):
        r = sub.reward
        for s, s2 in model.state_orders[i].comparable_pairs():
            for a in range(sub.n_actions):
                checks.record(_inequality(
                    "A2", r[s, a], r[s2, a],
                    f"sub-process {i}: r({s},{a}) exceeds r({s2},{a}) although {s} <= {s2}",
                    subprocess=i, states=(s, s2), action=a,
                ))
        for s in range(sub.n_states):
            for a in range(sub.n_actions - 1):
                checks.record(_inequality(
                    "A2", r[s, a], r[s, a + 1],
                    f"sub-process {i}: r({s},{a}) exceeds r({s},{a + 1})",
                    subprocess=i, state=s, actions=(a, a + 1),
                ))
    pairs = model.joint_order.comparable_pairs()
    for allocation in enumerate_allocations(model):
        glob = model.immediate_reward(allocation)
        for s, s2 in pairs:
            checks.record(_inequality(
                "A2", glob[s], glob[s2],
                f"I_g(state {s}, {list(allocation)}) exceeds I_g(state {s2}, {list(allocation)})",
                allocation=allocation, states=(s, s2),
            ))
    return checks.result()


def _check_epoch_monotone(model: SystemModel, myopic: Dict[Allocation, tuple], cap: int) -> AssumptionResult:
    checks = _Collector("A3")
    order = model.joint_order
    pairs = order.comparable_pairs()
    for allocation, policies in myopic.items():
        kernel = epoch_kernel(model, allocation, policies).transition
        for s, s2 in pairs:
            checks.record(_dominance(
                "A3", kernel[s2], kernel[s], order, cap,
                f"allocation {list(allocation)}: epoch row of state {s2} vs state {s}",
                allocation=allocation, states=(s, s2),
            ))
    return checks.result()


def _distinct_alternatives(model: SystemModel, i: int, grant: int):
    """Distinct (marginal, reward, first actions) over every reachable local table"""
    sub = model.subprocesses[i]
    out, seen = [], set()
    for table in local_table_space(sub, grant, model.T):
        policy = local_policy_from_table(sub, grant, model.T, table)
        marginal, reward = local_epoch_marginal(sub, policy, model.T, model.gamma)
        key = tuple(np.round(marginal, 12).ravel())
        if key in seen:
            continue
        seen.add(key)
        out.append((marginal, reward, policy.first_actions()))
    return out


def _check_myopic_dominance(
    model: SystemModel,
    myopic: Dict[Allocation, tuple],
    cap: int,
    policy_cap: int,
    notes: List[str],
) -> AssumptionResult:
    checks = _Collector("A4")
    order = model.joint_order
    for allocation, policies in myopic.items():
        projected = 1
        for i, grant in enumerate(allocation):
            projected *= local_table_space(model.subprocesses[i], grant, model.T).count()
        if projected > policy_cap:
            raise CapExceededError(f"local policy vectors for allocation {list(allocation)}", projected, policy_cap)

        own = [local_epoch_marginal(sub, p, model.T, model.gamma) for sub, p in zip(model.subprocesses, policies)]
        alternatives = [_distinct_alternatives(model, i, g) for i, g in enumerate(allocation)]
        for i, options in enumerate(alternatives):
            tied = [
                first for marginal, reward, first in options
                if np.allclose(reward, own[i][1], atol=MONOTONE_TOLERANCE)
                and not np.allclose(marginal, own[i][0], atol=DOMINANCE_TOLERANCE)
            ]
            if tied:
                notes.append(
                    f"A4: allocation {list(allocation)}, sub-process {i} has {len(tied)} other T-myopic "
                    f"table(s) with a different epoch kernel; the tie-broken one was checked"
                )

        reference = reduce(np.kron, [marginal for marginal, _ in own])
        for combo in itertools.product(*alternatives):
            kernel = reduce(np.kron, [marginal for marginal, _, _ in combo])
            firsts = [first for _, _, first in combo]
            for s in range(model.n_joint_states):
                checks.record(_dominance(
                    "A4", reference[s], kernel[s], order, cap,
                    f"allocation {list(allocation)}, state {s}, alternative first actions {firsts}: "
                    f"T-myopic row vs alternative row",
                    allocation=allocation, state=s, alternative=firsts,
                ))
    return checks.result()


def _check_local_monotone(model: SystemModel, cap: int) -> AssumptionResult:
    checks = _Collector("A5")
    for i, sub in enumerate(model.subprocesses):
        order = model.state_orders[i]
        for a in range(sub.n_actions):
            for s, s2 in order.comparable_pairs():
                checks.record(_dominance(
                    "A5", sub.transition[a, s2], sub.transition[a, s], order, cap,
                    f"sub-process {i}, action {a}: row of state {s2} vs state {s}",
                    subprocess=i, action=a, states=(s, s2),
                ))
    return checks.result()


def check_assumptions(
    model: SystemModel,
    results: Optional[SolveResult] = None,
    upper_set_cap: int = DEFAULT_UPPER_SET_CAP,
    policy_cap: int = DEFAULT_POLICY_CAP,
) -> AssumptionReport:
    """
    Verify the structural conditions under which both frameworks coincide

    A1 state orders, A2 reward monotonicity, A3 monotone T-myopic epoch
    kernels, A4 T-myopic kernels dominate every alternative decentralized
    local policy vector, A5 monotone local kernels per action.

    Args:
        model: Validated system model
        results: Optional FOpt SolveResult whose T-myopic policies are reused
        upper_set_cap: Limit on upper sets per order
        policy_cap: Limit on local policy vectors per allocation for A4

    Returns:
        AssumptionReport; an assumption whose check exceeds a cap is
        "not-checked", never "holds"
    """
    if results is not None and results.framework is Framework.FOPT:
        myopic = {a: results.local_policies[a] for a in enumerate_allocations(model)}
    else:
        myopic = {a: t_myopic_policy_vector(model, a) for a in enumerate_allocations(model)}

    notes: List[str] = []
    checks = {
        "A1": lambda: _check_orders(model),
        "A2": lambda: _check_rewards(model),
        "A3": lambda: _check_epoch_monotone(model, myopic, upper_set_cap),
        "A4": lambda: _check_myopic_dominance(model, myopic, upper_set_cap, policy_cap, notes),
        "A5": lambda: _check_local_monotone(model, upper_set_cap),
    }
    out: Dict[str, AssumptionResult] = {}
    for name in ASSUMPTIONS:
        try:
            out[name] = checks[name]()
        except CapExceededError as e:
            out[name] = _not_checked(name, e)
        logger.info("[Assumptions] %s: %s", name, out[name].verdict.value)
    return AssumptionReport(results=out, notes=tuple(notes))


# ============================================================================
# Monotonicity
# ============================================================================

def check_value_monotone(V: np.ndarray, order: PartialOrder) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """
    Is V non-decreasing along the order?

    Returns:
        (holds, witness) where witness is the first comparable pair (s, s')
        with s <= s' and V(s) > V(s') + 1e-9
    """
    V = np.asarray(V, dtype=float)
    if V.size != order.size:
        raise ValueError(f"value has {V.size} entries, order has {order.size}")
    for s, s2 in order.comparable_pairs():
        if V[s] > V[s2] + MONOTONE_TOLERANCE:
            return False, (s, s2)
    return True, None


def check_reward_monotone(model: SystemModel) -> Tuple[bool, Optional[Tuple[Allocation, int, int]]]:
    """
    Is the T-myopic epoch reward R(., a_g) non-decreasing along the joint
    order for every feasible allocation?

    Returns:
        (holds, witness) with witness (allocation, s, s')
    """
    allocations, rewards = epoch_reward_table(model)
    for allocation, R in zip(allocations, rewards):
        holds, pair = check_value_monotone(R, model.joint_order)
        if not holds:
            return False, (allocation,) + pair
    return True, None


def check_monotone_iterates(history: Sequence[np.ndarray]) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """
    Is V^(m+1) >= V^(m) componentwise along a value-iteration history?

    Returns:
        (holds, witness) with witness (m, state)
    """
    for m in range(len(history) - 1):
        drop = np.asarray(history[m], dtype=float) - np.asarray(history[m + 1], dtype=float)
        bad = np.flatnonzero(drop > MONOTONE_TOLERANCE)
        if bad.size:
            return False, (m, int(bad[0]))
    return True, None


# ============================================================================
# Framework Comparison
# ============================================================================

@dataclass(frozen=True)
class MyopicVerdict:
    """Whether COpt's local choice at a state attains the T-myopic epoch reward"""
    state: int
    allocation: Allocation
    copt_reward: float
    myopic_reward: float
    is_myopic: bool


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    v_copt: np.ndarray
    v_fopt: np.ndarray
    lower_envelope: np.ndarray
    gap: np.ndarray
    sup_gap: float
    equivalent: bool
    myopic: Tuple[MyopicVerdict, ...]
    sandwich_holds: bool
    gap_bound: float
    gap_bound_holds: bool
    epsilon: float
    copt: SolveResult
    fopt: SolveResult

    @property
    def cost_of_autonomy(self) -> np.ndarray:
        """Value lost by granting locals single-epoch autonomy"""
        return self.gap

    @property
    def exit_code(self) -> int:
        return 0 if self.equivalent else 3


def compare_frameworks(
    model: SystemModel,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
    state_cap: int = DEFAULT_COPT_STATE_CAP,
) -> ComparisonReport:
    """
    Solve both frameworks and relate their fixed points

    The lower envelope evaluates COpt's global policy with T-myopic locals;
    V_lower <= V_F* <= V_C* must hold, and ||V_C* - V_F*|| is bounded by
    ||V_C* - V_lower||. Equivalence is declared when the sup gap is at most
    10 * epsilon.

    Raises:
        ConvergenceError, CapExceededError: from the solvers
    """
    copt = value_iteration(model, Framework.COPT, epsilon, max_iter, state_cap)
    fopt = value_iteration(model, Framework.FOPT, epsilon, max_iter, state_cap)
    lower = evaluate_policy_exact(model, copt.global_policy, fopt.local_policies)
    gap = copt.value - fopt.value
    sup_gap = float(np.max(np.abs(gap)))

    allocations, rewards = epoch_reward_table(model)
    position = {a: k for k, a in enumerate(allocations)}
    verdicts = []
    for s in range(model.n_joint_states):
        allocation = copt.global_policy[s]
        achieved = float(joint_epoch_kernel(model, copt.local_policies[s]).reward[s])
        best = float(rewards[position[allocation], s])
        verdicts.append(MyopicVerdict(s, allocation, achieved, best, achieved >= best - MONOTONE_TOLERANCE))

    sandwich = bool(
        np.all(lower <= fopt.value + SANDWICH_TOLERANCE) and np.all(fopt.value <= copt.value + SANDWICH_TOLERANCE)
    )
    if not sandwich:
        logger.warning("[Compare] Sandwich V_lower <= V_F <= V_C broken on %r", model)
    bound = float(np.max(np.abs(copt.value - lower)))
    report = ComparisonReport(
        v_copt=copt.value,
        v_fopt=fopt.value,
        lower_envelope=lower,
        gap=gap,
        sup_gap=sup_gap,
        equivalent=sup_gap <= EQUIVALENCE_FACTOR * epsilon,
        myopic=tuple(verdicts),
        sandwich_holds=sandwich,
        gap_bound=bound,
        gap_bound_holds=sup_gap <= bound + SANDWICH_TOLERANCE,
        epsilon=epsilon,
        copt=copt,
        fopt=fopt,
    )
    logger.info("[Compare] %r: sup gap %.3e, equivalent=%s", model, sup_gap, report.equivalent)
    return report
