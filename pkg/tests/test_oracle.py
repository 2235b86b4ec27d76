"""Brute-force enumeration against the dynamic-programming solvers."""

from __future__ import annotations

import numpy as np
import pytest

from hiermdp.commands.oracle_verify import verify_copt, verify_local
from hiermdp.config import RunConfig
from hiermdp.errors import CapExceededError
from hiermdp.instances import tiny_corpus
from hiermdp.oracle import EnumerationBudget, brute_force_copt, brute_force_local, local_table_space
from hiermdp.solvers import Framework, value_iteration


def test_local_table_count(example1) -> None:
    # one step, two states, each may spend 0 or 1
    assert local_table_space(example1.subprocesses[0], 1, 1).count() == 4
    assert len(list(local_table_space(example1.subprocesses[0], 1, 1))) == 4
    # no budget: only the idle table
    assert local_table_space(example1.subprocesses[0], 0, 3).count() == 1


def test_local_oracle_example1(example1) -> None:
    result = brute_force_local(example1.subprocesses[0], 1, 1, example1.gamma)
    np.testing.assert_allclose(result.epoch_value(), [0.5, 1.0])
    assert result.policy.first_actions() == (1, 1)


def test_copt_oracle_example1(example1) -> None:
    oracle = brute_force_copt(example1)
    solved = value_iteration(example1, Framework.COPT, 1e-9)
    np.testing.assert_allclose(oracle.value, solved.value, atol=1e-6)
    assert oracle.global_policy == solved.global_policy
    assert oracle.first_actions() == [(0,), (1,)]


def test_copt_oracle_example2(example2) -> None:
    oracle = brute_force_copt(example2)
    np.testing.assert_allclose(oracle.value, [89.6, 90.1], atol=1e-9)


def test_table_cap_refused(example1) -> None:
    with pytest.raises(CapExceededError):
        brute_force_local(example1.subprocesses[0], 1, 3, 0.99, EnumerationBudget(tables=2))


def test_candidate_cap_refused(example1) -> None:
    with pytest.raises(CapExceededError):
        brute_force_copt(example1, limits=EnumerationBudget(candidates=1))


def test_tiny_corpus_is_seeded() -> None:
    first = tiny_corpus(3, 4)
    second = tiny_corpus(3, 4)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.subprocesses[0].transition, b.subprocesses[0].transition)
        assert a.B == b.B


@pytest.mark.slow
def test_solvers_agree_with_enumeration() -> None:
    config = RunConfig(command="oracle-verify", epsilon=1e-9)
    limits = EnumerationBudget()
    for model in tiny_corpus(0, 50):
        assert verify_local(model, limits) == [], model.name
        assert verify_copt(model, config, limits) == [], model.name
