"""Assumption checks, monotonicity and framework comparison."""

from __future__ import annotations

import numpy as np
import pytest

from hiermdp.analysis import (
    EQUIVALENCE_FACTOR,
    Verdict,
    check_assumptions,
    check_reward_monotone,
    check_value_monotone,
    compare_frameworks,
)
from hiermdp.instances import monotone_instance
from hiermdp.models import SubProcessModel, SystemModel, validate_system
from hiermdp.orders import PartialOrder
from hiermdp.solvers import Framework, value_iteration

EPSILON = 1e-8


def _decreasing_reward_model() -> SystemModel:
    sub = SubProcessModel(np.full((2, 2, 2), 0.5), np.array([[0.0, 1.0], [0.0, 0.2]]))
    return validate_system(SystemModel((sub,), K=2, B=1, T=1, beta=0.9, gamma=0.9, budget_mode="exactly"))


# ============================================================================
# A1 - A5
# ============================================================================

def test_example2_satisfies_everything(example2) -> None:
    report = check_assumptions(example2)
    assert report.sufficient
    assert report.exit_code == 0
    assert all(report[name].comparisons > 0 for name in ("A2", "A3", "A4", "A5"))


def test_example1_fails_only_myopic_dominance(example1) -> None:
    report = check_assumptions(example1)
    for name in ("A1", "A2", "A3", "A5"):
        assert report[name].verdict is Verdict.HOLDS, report[name].detail
    a4 = report["A4"]
    assert a4.verdict is Verdict.FAILS
    assert report.exit_code == 3

    witness = a4.witness
    assert witness.kind == "dominance"
    assert witness.context["allocation"] == (1,)
    assert witness.context["state"] == 0
    assert witness.context["alternative"] == [(0, 0)]
    assert witness.upper_set == frozenset({1})
    np.testing.assert_allclose(witness.p, [0.8, 0.2])
    np.testing.assert_allclose(witness.q, [0.2, 0.8])
    assert witness.confirms()


def test_reuses_fopt_policies(example1) -> None:
    fopt = value_iteration(example1, Framework.FOPT, EPSILON)
    report = check_assumptions(example1, results=fopt)
    assert report["A4"].verdict is Verdict.FAILS


def test_capped_check_is_not_checked(example2) -> None:
    report = check_assumptions(example2, policy_cap=1)
    assert report["A4"].verdict is Verdict.NOT_CHECKED
    assert not report.sufficient
    assert report.exit_code == 4


def test_failure_outranks_not_checked() -> None:
    report = check_assumptions(_decreasing_reward_model(), policy_cap=1)
    assert report["A2"].verdict is Verdict.FAILS
    assert report["A4"].verdict is Verdict.NOT_CHECKED
    assert report.exit_code == 3


def test_oversized_joint_order_is_not_checked() -> None:
    model = monotone_instance(np.random.default_rng(43), N=2, n_states=3, n_actions=2, T=1, K=2, B=1)
    # the 3x3 grid has an antichain of 3, so at least 6 upper sets
    report = check_assumptions(model, upper_set_cap=5, policy_cap=1)
    assert report["A3"].verdict is Verdict.NOT_CHECKED
    assert report["A5"].verdict is Verdict.HOLDS
    assert report.exit_code == 4


@pytest.mark.slow
def test_large_joint_order_is_not_checked() -> None:
    # 1024 joint states: enumeration must be refused, never attempted
    model = monotone_instance(np.random.default_rng(44), N=2, n_states=32, n_actions=2, T=1, K=2, B=1)
    report = check_assumptions(model, policy_cap=1)
    assert report["A3"].verdict is Verdict.NOT_CHECKED
    assert "upper sets" in report["A3"].detail
    assert report.exit_code == 4


def test_reward_monotonicity_witness() -> None:
    report = check_assumptions(_decreasing_reward_model())
    a2 = report["A2"]
    assert a2.verdict is Verdict.FAILS
    assert a2.witness.kind == "inequality"
    assert a2.witness.context["states"] == (0, 1)
    assert a2.witness.confirms()


def test_custom_order_changes_verdict() -> None:
    model = _decreasing_reward_model()
    flipped = validate_system(SystemModel(
        model.subprocesses, K=2, B=1, T=1, beta=0.9, gamma=0.9, budget_mode="exactly",
        state_orders=(PartialOrder.from_pairs(2, [[1, 0]]),),
    ))
    assert check_assumptions(flipped)["A2"].verdict is Verdict.HOLDS


def test_single_state_instance_holds_trivially() -> None:
    sub = SubProcessModel(np.ones((2, 1, 1)), np.array([[0.0, 1.0]]))
    model = validate_system(SystemModel((sub,), K=2, B=1, T=1, beta=0.9, gamma=0.9, budget_mode="exactly"))
    assert check_assumptions(model).sufficient


# ============================================================================
# Monotonicity helpers
# ============================================================================

def test_value_monotone_witness() -> None:
    order = PartialOrder.index(2)
    assert check_value_monotone([1.0, 2.0], order) == (True, None)
    assert check_value_monotone([2.0, 1.0], order) == (False, (0, 1))


def test_value_monotone_on_product_order() -> None:
    joint = PartialOrder.product([PartialOrder.index(2), PartialOrder.index(2)])
    # (0,1) and (1,0) are incomparable
    assert check_value_monotone([0.0, 2.0, 1.0, 3.0], joint) == (True, None)
    assert check_value_monotone([0.0, 2.0, 1.0, 1.5], joint) == (False, (1, 3))


def test_reward_monotone(example1) -> None:
    assert check_reward_monotone(example1) == (True, None)
    assert check_reward_monotone(_decreasing_reward_model()) == (False, ((1,), 0, 1))


def test_epoch_reward_monotone_on_monotone_corpus() -> None:
    rng = np.random.default_rng(42)
    shapes = [(1, 3, 3, 2), (1, 3, 3, 3), (2, 2, 3, 2), (2, 3, 2, 3)]
    checked = 0
    for k in range(40):
        N, n, m, T = shapes[k % len(shapes)]
        model = monotone_instance(rng, N=N, n_states=n, n_actions=m, T=T, K=3, name=f"monotone-{k}")
        report = check_assumptions(model, policy_cap=1)
        if any(report[name].verdict is not Verdict.HOLDS for name in ("A1", "A2", "A5")):
            continue
        assert check_reward_monotone(model) == (True, None), model.name
        checked += 1
    assert checked >= 20


# ============================================================================
# Comparison
# ============================================================================

def test_example1_frameworks_differ(example1) -> None:
    report = compare_frameworks(example1, EPSILON)
    assert not report.equivalent
    assert report.exit_code == 3
    np.testing.assert_allclose(report.gap, [8.19, 7.99], atol=0.01)
    np.testing.assert_allclose(report.cost_of_autonomy, report.v_copt - report.v_fopt)
    # one feasible allocation: the lower envelope is FOpt itself
    np.testing.assert_allclose(report.lower_envelope, report.v_fopt, atol=1e-6)
    assert not report.myopic[0].is_myopic
    assert report.myopic[0].copt_reward == pytest.approx(0.25)
    assert report.myopic[0].myopic_reward == pytest.approx(0.5)
    assert report.myopic[1].is_myopic
    assert report.sandwich_holds
    assert report.gap_bound_holds


def test_example2_frameworks_agree(example2) -> None:
    report = compare_frameworks(example2, EPSILON)
    assert report.equivalent
    assert report.exit_code == 0
    assert report.sup_gap <= EQUIVALENCE_FACTOR * EPSILON
    assert all(v.is_myopic for v in report.myopic)


def test_zero_reward_model_is_equivalent(zero_reward_model) -> None:
    report = compare_frameworks(zero_reward_model, EPSILON)
    assert report.equivalent
    np.testing.assert_allclose(report.v_copt, 0.0)


@pytest.mark.slow
def test_sandwich_on_random_corpus(sandwich_corpus) -> None:
    for model in sandwich_corpus:
        report = compare_frameworks(model, 1e-7)
        assert report.sandwich_holds, model.name
        assert report.gap_bound_holds, model.name
        assert np.all(report.gap >= -1e-6), model.name


@pytest.mark.slow
def test_sufficient_conditions_give_equivalence() -> None:
    rng = np.random.default_rng(41)
    shapes = [(1, 2, 2), (1, 3, 3), (2, 2, 2), (2, 3, 2), (1, 3, 2)]
    checked = 0
    for k in range(200):
        N, n, m = shapes[k % len(shapes)]
        model = monotone_instance(rng, N=N, n_states=n, n_actions=m, T=1, K=3, name=f"monotone-{k}")
        if not check_assumptions(model).sufficient:
            continue
        report = compare_frameworks(model, EPSILON)
        assert report.equivalent, (model.name, report.sup_gap)
        holds, witness = check_value_monotone(report.v_copt, model.joint_order)
        assert holds, (model.name, witness)
        checked += 1
        if checked == 20:
            break
    assert checked == 20
