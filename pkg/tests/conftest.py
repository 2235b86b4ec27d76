"""Shared fixtures: bundled examples and seeded tiny instances."""

from __future__ import annotations

import numpy as np
import pytest

from hiermdp.instances import bundled_example, random_instance
from hiermdp.models import SubProcessModel, SystemModel, validate_system


@pytest.fixture(scope="session")
def example1() -> SystemModel:
    return bundled_example("example1")


@pytest.fixture(scope="session")
def example2() -> SystemModel:
    return bundled_example("example2")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def zero_reward_model() -> SystemModel:
    sub = SubProcessModel(
        transition=np.array([[[0.5, 0.5], [0.3, 0.7]], [[0.9, 0.1], [0.2, 0.8]]]),
        reward=np.zeros((2, 2)),
    )
    return validate_system(SystemModel(subprocesses=(sub, sub), K=2, B=1, T=2, beta=0.9, gamma=0.9))


@pytest.fixture(scope="session")
def sandwich_corpus() -> list[SystemModel]:
    """Seeded instances with N <= 2, n_i <= 3, m_i <= 2, T <= 3, K <= 3"""
    rng = np.random.default_rng(7)
    shapes = [(1, 3, 2, 3, 3), (2, 2, 2, 2, 2), (2, 3, 2, 1, 3), (1, 2, 2, 2, 3), (2, 2, 2, 3, 2)]
    corpus = []
    for k in range(50):
        N, n, m, T, K = shapes[k % len(shapes)]
        corpus.append(random_instance(
            rng, N=N, n_states=n, n_actions=m, T=T, K=K, global_reward=bool(k % 3 == 0), name=f"sandwich-{k}",
        ))
    return corpus
