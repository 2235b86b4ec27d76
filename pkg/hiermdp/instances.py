# hiermdp/instances.py
# Instance files and generators
# - parse_instance / load_instance: JSON text -> validated SystemModel
# - document_from_model / save_instance: SystemModel -> JSON
# - bundled_example: Example 1 / Example 2 shipped with the package
# - random_instance / monotone_instance: seeded tiny instances for tests and oracle runs

import json
import logging
from importlib import resources
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import ValidationError

from hiermdp.errors import InstanceParseError, ModelValidationError
from hiermdp.models import BudgetMode, SubProcessModel, SystemModel, validate_system
from hiermdp.orders import OrderError, PartialOrder
from hiermdp.schemas import InstanceDocument, SubprocessDocument

logger = logging.getLogger(__name__)

BUNDLED_EXAMPLES = ("example1", "example2")


# ============================================================================
# Parsing
# ============================================================================

def parse_instance(text: str, source: str = "<string>") -> InstanceDocument:
    """
    Parse instance JSON into its document

    Raises:
        InstanceParseError: JSON syntax (with line/column) or schema errors (with field path)
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceParseError(source, [f"line {e.lineno}, column {e.colno}: {e.msg}"]) from e
    try:
        return InstanceDocument.model_validate(data)
    except ValidationError as e:
        diagnostics = [
            f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
            for err in e.errors()
        ]
        raise InstanceParseError(source, diagnostics) from e


def _state_orders(document: InstanceDocument, sizes: List[int]) -> Optional[tuple]:
    if document.state_order == "index":
        return None
    if len(document.state_order) != len(sizes):
        raise ModelValidationError([
            f"state_order has {len(document.state_order)} entries for {len(sizes)} sub-processes"
        ])
    orders = []
    for i, (entry, n) in enumerate(zip(document.state_order, sizes)):
        try:
            orders.append(PartialOrder.index(n) if entry == "index" else PartialOrder.from_pairs(n, entry))
        except OrderError as e:
            raise ModelValidationError([f"sub-process {i}: {e}"]) from e
    return tuple(orders)


def model_from_document(document: InstanceDocument, validate: bool = True) -> SystemModel:
    """
    Build the domain model from a parsed document

    Raises:
        ModelValidationError: any invariant violated (every violation listed)
    """
    subs = []
    for i, sub in enumerate(document.subprocesses):
        try:
            transition = np.array(sub.transition, dtype=float)
            reward = np.array(sub.reward, dtype=float)
        except ValueError as e:
            raise ModelValidationError([f"sub-process {i}: ragged transition or reward table"]) from e
        try:
            subs.append(SubProcessModel(transition, reward))
        except ModelValidationError as e:
            raise ModelValidationError([f"sub-process {i}: {v}" for v in e.violations]) from e

    global_reward = None
    if document.global_reward != 0:
        try:
            global_reward = np.array(document.global_reward, dtype=float)
        except ValueError as e:
            raise ModelValidationError(["global_reward is ragged"]) from e

    model = SystemModel(
        subprocesses=tuple(subs),
        K=document.K,
        B=document.B,
        T=document.T,
        beta=document.beta,
        gamma=document.gamma,
        budget_mode=BudgetMode(document.budget_mode),
        global_reward=global_reward,
        state_orders=_state_orders(document, [s.n_states for s in subs]),
        allow_idle_reward=document.allow_idle_reward,
        name=document.name,
    )
    return validate_system(model) if validate else model


def load_instance(path: Union[str, Path]) -> SystemModel:
    """
    Read and validate an instance file

    Raises:
        InstanceParseError: unreadable file, bad JSON, schema mismatch
        ModelValidationError: invariant violations
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InstanceParseError(str(path), [str(e)]) from e
    model = model_from_document(parse_instance(text, str(path)))
    logger.info("[Instances] Loaded %r from %s", model, path)
    return model


# ============================================================================
# Serialization
# ============================================================================

def _covering_pairs(order: PartialOrder) -> List[List[int]]:
    """Hasse diagram of the order: i < j with nothing strictly between"""
    strict = order.relation & ~np.eye(order.size, dtype=bool)
    between = (strict.astype(np.int64) @ strict.astype(np.int64)) > 0
    return [[int(i), int(j)] for i, j in np.argwhere(strict & ~between)]


def document_from_model(model: SystemModel) -> InstanceDocument:
    """Inverse of model_from_document"""
    orders = []
    for order, sub in zip(model.state_orders, model.subprocesses):
        same = np.array_equal(order.relation, PartialOrder.index(sub.n_states).relation)
        orders.append("index" if same else _covering_pairs(order))
    return InstanceDocument(
        name=model.name,
        subprocesses=[
            SubprocessDocument(transition=sub.transition.tolist(), reward=sub.reward.tolist())
            for sub in model.subprocesses
        ],
        K=model.K,
        B=model.B,
        budget_mode=model.budget_mode.value,
        T=model.T,
        beta=model.beta,
        gamma=model.gamma,
        global_reward=0 if not np.any(model.global_reward) else model.global_reward.tolist(),
        state_order="index" if all(o == "index" for o in orders) else orders,
        allow_idle_reward=model.allow_idle_reward,
    )


def dump_instance(model: SystemModel) -> str:
    return document_from_model(model).model_dump_json(indent=2) + "\n"


def save_instance(model: SystemModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_instance(model), encoding="utf-8")
    return path


# ============================================================================
# Bundled Examples
# ============================================================================

def bundled_example_path(name: str, data_dir: Optional[Path] = None) -> Path:
    """Location of a bundled example, optionally overridden by a directory"""
    if name not in BUNDLED_EXAMPLES:
        raise ValueError(f"unknown example {name!r}; choose from {', '.join(BUNDLED_EXAMPLES)}")
    if data_dir is not None:
        return Path(data_dir) / f"{name}.json"
    return Path(str(resources.files("hiermdp.data").joinpath(f"{name}.json")))


def bundled_example(name: str, data_dir: Optional[Path] = None) -> SystemModel:
    """Example 1 (frameworks differ) or Example 2 (frameworks agree)"""
    return load_instance(bundled_example_path(name, data_dir))


# ============================================================================
# Generators
# ============================================================================

def _budget(rng: np.random.Generator, N: int, K: int, B: Optional[int], mode: BudgetMode) -> int:
    if B is not None:
        return B
    bound = N * (K - 1)
    if mode is BudgetMode.EXACTLY:
        return int(rng.integers(0, bound + 1))
    return int(rng.integers(0, bound)) if bound > 0 else 0


def random_instance(
    rng: np.random.Generator,
    N: int = 2,
    n_states: int = 2,
    n_actions: int = 2,
    T: int = 2,
    K: int = 2,
    B: Optional[int] = None,
    budget_mode: BudgetMode = BudgetMode.AT_MOST,
    beta: float = 0.9,
    gamma: float = 0.9,
    global_reward: bool = False,
    name: str = "random",
) -> SystemModel:
    """
    Seeded instance with Dirichlet transition rows and r(s, 0) = 0

    K = 1 (no positive allocation level) is forced to exact mode with B = 0.
    """
    budget_mode = BudgetMode(budget_mode)
    if N * (K - 1) == 0:
        budget_mode = BudgetMode.EXACTLY
    subs = []
    for _ in range(N):
        transition = rng.dirichlet(np.ones(n_states), size=(n_actions, n_states))
        reward = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
        reward[:, 0] = 0.0
        subs.append(SubProcessModel(transition, reward))
    S = n_states**N
    table = None
    if global_reward:
        table = rng.uniform(0.0, 0.5, size=(S, K**N))
        table[:, 0] = 0.0
    model = SystemModel(
        subprocesses=tuple(subs),
        K=K,
        B=_budget(rng, N, K, B, budget_mode),
        T=T,
        beta=beta,
        gamma=gamma,
        budget_mode=budget_mode,
        global_reward=table,
        name=name,
    )
    return validate_system(model)


def _monotone_kernels(rng: np.random.Generator, n_actions: int, n_states: int) -> np.ndarray:
    """Kernels whose upper tails grow with the state and with the action"""
    tails = np.sort(rng.uniform(0.0, 1.0, size=(n_actions, n_states, n_states - 1)), axis=2)[:, :, ::-1]
    tails = np.maximum.accumulate(tails, axis=1)
    tails = np.maximum.accumulate(tails, axis=0)
    G = np.concatenate([np.ones((n_actions, n_states, 1)), tails, np.zeros((n_actions, n_states, 1))], axis=2)
    return G[:, :, :-1] - G[:, :, 1:]


def monotone_instance(
    rng: np.random.Generator,
    N: int = 1,
    n_states: int = 2,
    n_actions: int = 2,
    T: int = 1,
    K: int = 2,
    B: Optional[int] = None,
    beta: float = 0.9,
    gamma: float = 0.9,
    name: str = "monotone",
) -> SystemModel:
    """
    Seeded instance built toward A1-A5: kernels stochastically monotone in
    state and action, rewards increasing in state and action with r(s, 0) = 0,
    I_g = 0. Callers still run check_assumptions before relying on it.
    """
    subs = []
    for _ in range(N):
        increments = rng.uniform(0.1, 1.0, size=(n_states, n_actions - 1))
        reward = np.zeros((n_states, n_actions))
        reward[:, 1:] = np.cumsum(np.cumsum(increments, axis=0), axis=1)
        subs.append(SubProcessModel(_monotone_kernels(rng, n_actions, n_states), reward))
    mode = BudgetMode.AT_MOST if N * (K - 1) > 0 else BudgetMode.EXACTLY
    model = SystemModel(
        subprocesses=tuple(subs),
        K=K,
        B=_budget(rng, N, K, B, mode),
        T=T,
        beta=beta,
        gamma=gamma,
        budget_mode=mode,
        name=name,
    )
    return validate_system(model)


# Shapes (N, n_states, n_actions, T, K) cycled by tiny_corpus
TINY_SHAPES = (
    (1, 2, 2, 2, 3),
    (2, 2, 2, 1, 2),
    (1, 3, 2, 2, 3),
    (2, 2, 2, 2, 2),
    (1, 2, 3, 3, 3),
)


def tiny_corpus(seed: int, count: int) -> List[SystemModel]:
    """Seeded instances small enough for brute-force enumeration"""
    rng = np.random.default_rng(seed)
    corpus = []
    for k in range(count):
        N, n, m, T, K = TINY_SHAPES[k % len(TINY_SHAPES)]
        corpus.append(random_instance(
            rng, N=N, n_states=n, n_actions=m, T=T, K=K, B=N * (K - 1) - 1,
            global_reward=bool(k % 2), name=f"tiny-{seed}-{k}",
        ))
    return corpus
