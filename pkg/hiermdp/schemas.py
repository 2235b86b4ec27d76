# hiermdp/schemas.py
# Pydantic schemas for instance files and result artifacts
# - Instance schemas (SubprocessDocument, InstanceDocument)
# - Solve result schemas
# - Assumption / comparison report schemas
# - CLI summary schemas (bundled examples, oracle verification)

from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from hiermdp.analysis import AssumptionReport, ComparisonReport, Witness
from hiermdp.models import JointLocalPolicy
from hiermdp.solvers import SolveResult


def _plain(value: Any) -> Any:
    """numpy scalars/arrays and tuples to JSON-native values"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, frozenset):
        return sorted(_plain(v) for v in value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


# ============================================================================
# Instance Schemas
# ============================================================================

class SubprocessDocument(BaseModel):
    """One local MDP: transition[a][s][s'] and reward[s][a]"""
    model_config = ConfigDict(extra="forbid")

    transition: List[List[List[float]]] = Field(..., min_length=1, description="Per-action transition matrices")
    reward: List[List[float]] = Field(..., min_length=1, description="Local reward table r(s, a)")


StateOrderEntry = Union[Literal["index"], List[Tuple[int, int]]]


class InstanceDocument(BaseModel):
    """Instance file: a single JSON document"""
    model_config = ConfigDict(extra="forbid")

    name: str = Field("instance", description="Label used in logs and artifacts")
    subprocesses: List[SubprocessDocument] = Field(..., min_length=1)
    K: int = Field(..., description="Allocation levels {0..K-1}")
    B: int = Field(..., description="Global per-epoch budget")
    budget_mode: Literal["at-most", "exactly"] = "at-most"
    T: int = Field(..., description="Fast steps per epoch")
    beta: float = Field(..., description="Slow-timescale discount")
    gamma: float = Field(..., description="Fast-timescale discount")
    global_reward: Union[Literal[0], List[List[float]]] = Field(
        0, description="I_g[state_index][allocation_index] or the literal 0"
    )
    state_order: Union[Literal["index"], List[StateOrderEntry]] = Field(
        "index", description="'index' or one entry per sub-process: 'index' or covering pairs [lower, upper]"
    )
    allow_idle_reward: bool = Field(False, description="Permit r(s, 0) != 0")

    @field_validator("global_reward", mode="before")
    @classmethod
    def validate_global_reward(cls, v: Any) -> Any:
        """Accept 0.0 as the literal 0"""
        if isinstance(v, (int, float)) and not isinstance(v, bool) and v == 0:
            return 0
        return v


# ============================================================================
# Solve Result Schemas
# ============================================================================

class LocalPolicyDocument(BaseModel):
    """
    Local policy tables under one allocation

    FOpt: one table per sub-process, tables[i][t][s][b].
    COpt: state is set and tables holds one joint table
    tables[0][t][x][b_1]...[b_N][i].
    """
    allocation: List[int]
    state: Optional[int] = None
    tables: List[Any]


class SolveResultDocument(BaseModel):
    """Serialized SolveResult"""
    name: str
    framework: Literal["copt", "fopt"]
    epsilon: float
    max_iter: int
    seed: int = 0
    converged: bool
    iterations: int
    residual: float
    states: List[List[int]]
    value: List[float]
    global_policy: List[List[int]]
    first_actions: List[List[int]]
    local_policies: List[LocalPolicyDocument]

    @classmethod
    def from_result(cls, result: SolveResult, name: str, states: List[Tuple[int, ...]], seed: int = 0):
        policies = []
        for key, policy in result.local_policies.items():
            if isinstance(policy, JointLocalPolicy):
                policies.append(LocalPolicyDocument(
                    allocation=list(policy.allocation), state=int(key), tables=[policy.actions.tolist()]
                ))
            else:
                policies.append(LocalPolicyDocument(
                    allocation=list(key), tables=[p.actions.tolist() for p in policy]
                ))
        return cls(
            name=name,
            framework=result.framework.value,
            epsilon=result.epsilon,
            max_iter=result.max_iter,
            seed=seed,
            converged=result.converged,
            iterations=result.iterations,
            residual=result.residual,
            states=[list(s) for s in states],
            value=result.value.tolist(),
            global_policy=result.global_policy.to_list(),
            first_actions=[list(a) for a in result.first_actions()],
            local_policies=policies,
        )


# ============================================================================
# Report Schemas
# ============================================================================

class WitnessDocument(BaseModel):
    kind: str
    message: str
    p: Optional[List[float]] = None
    q: Optional[List[float]] = None
    upper_set: Optional[List[int]] = None
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    context: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_witness(cls, witness: Witness):
        return cls(
            kind=witness.kind,
            message=witness.message,
            p=_plain(witness.p),
            q=_plain(witness.q),
            upper_set=_plain(witness.upper_set),
            lhs=witness.lhs,
            rhs=witness.rhs,
            context=_plain(witness.context),
        )


class AssumptionDocument(BaseModel):
    name: str
    verdict: Literal["holds", "fails", "not-checked"]
    detail: str = ""
    comparisons: int = 0
    failures: int = 0
    witness: Optional[WitnessDocument] = None


class AssumptionReportDocument(BaseModel):
    """Serialized AssumptionReport"""
    name: str
    sufficient: bool
    exit_code: int
    assumptions: List[AssumptionDocument]
    notes: List[str] = Field(default_factory=list)

    @classmethod
    def from_report(cls, report: AssumptionReport, name: str):
        return cls(
            name=name,
            sufficient=report.sufficient,
            exit_code=report.exit_code,
            assumptions=[
                AssumptionDocument(
                    name=r.name,
                    verdict=r.verdict.value,
                    detail=r.detail,
                    comparisons=r.comparisons,
                    failures=r.failures,
                    witness=WitnessDocument.from_witness(r.witness) if r.witness is not None else None,
                )
                for r in report.results.values()
            ],
            notes=list(report.notes),
        )


class MyopicVerdictDocument(BaseModel):
    state: int
    allocation: List[int]
    copt_reward: float
    myopic_reward: float
    is_myopic: bool


class ComparisonReportDocument(BaseModel):
    """Serialized ComparisonReport"""
    name: str
    epsilon: float
    equivalent: bool
    sup_gap: float
    gap_bound: float
    gap_bound_holds: bool
    sandwich_holds: bool
    states: List[List[int]]
    v_copt: List[float]
    v_fopt: List[float]
    lower_envelope: List[float]
    cost_of_autonomy: List[float]
    copt_policy: List[List[int]]
    fopt_policy: List[List[int]]
    myopic: List[MyopicVerdictDocument]

    @classmethod
    def from_report(cls, report: ComparisonReport, name: str, states: List[Tuple[int, ...]]):
        return cls(
            name=name,
            epsilon=report.epsilon,
            equivalent=report.equivalent,
            sup_gap=report.sup_gap,
            gap_bound=report.gap_bound,
            gap_bound_holds=report.gap_bound_holds,
            sandwich_holds=report.sandwich_holds,
            states=[list(s) for s in states],
            v_copt=report.v_copt.tolist(),
            v_fopt=report.v_fopt.tolist(),
            lower_envelope=report.lower_envelope.tolist(),
            cost_of_autonomy=report.cost_of_autonomy.tolist(),
            copt_policy=report.copt.global_policy.to_list(),
            fopt_policy=report.fopt.global_policy.to_list(),
            myopic=[
                MyopicVerdictDocument(
                    state=m.state,
                    allocation=list(m.allocation),
                    copt_reward=m.copt_reward,
                    myopic_reward=m.myopic_reward,
                    is_myopic=m.is_myopic,
                )
                for m in report.myopic
            ],
        )


# ============================================================================
# CLI Summary Schemas
# ============================================================================

class CheckOutcome(BaseModel):
    """One row of a pass/fail table"""
    name: str
    passed: bool
    detail: str = ""


class CheckSummaryDocument(BaseModel):
    command: str
    passed: int
    failed: int
    checks: List[CheckOutcome]
