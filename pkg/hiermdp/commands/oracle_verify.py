# hiermdp/commands/oracle_verify.py
# oracle-verify: cross-check the solvers against brute force
# - One instance file, or a seeded corpus of tiny instances (--corpus N)
# - Exit 0 when every instance agrees, 3 otherwise

import logging
from typing import List

import numpy as np
from rich import box
from rich.console import Console
from rich.table import Table

from hiermdp.config import RunConfig, Settings
from hiermdp.instances import load_instance, tiny_corpus
from hiermdp.local import reachable_entries, solve_local
from hiermdp.models import SystemModel
from hiermdp.oracle import EnumerationBudget, brute_force_copt, brute_force_local
from hiermdp.schemas import CheckOutcome, CheckSummaryDocument
from hiermdp.solvers import Framework, value_iteration
from hiermdp.utils import sup_norm, write_json

logger = logging.getLogger(__name__)

DEFAULT_CORPUS = 50
VALUE_MATCH = 1e-6
LOCAL_MATCH = 1e-9


def add_parser(subparsers, parent, settings: Settings):
    parser = subparsers.add_parser("oracle-verify", parents=[parent], help="cross-check solvers against brute force")
    parser.add_argument("instance", nargs="?", default=None, help="instance JSON file (default: seeded corpus)")
    parser.add_argument("--corpus", type=int, default=0, help=f"corpus size when no instance is given ({DEFAULT_CORPUS})")


def verify_local(model: SystemModel, limits: EnumerationBudget) -> List[str]:
    """Mismatches between solve_local and brute_force_local for every grant"""
    problems = []
    for i, sub in enumerate(model.subprocesses):
        for grant in range(model.K):
            dp = solve_local(sub, grant, model.T, model.gamma, keep_q=False)
            oracle = brute_force_local(sub, grant, model.T, model.gamma, limits)
            gap = sup_norm(dp.epoch_value(), oracle.epoch_value())
            if gap > LOCAL_MATCH:
                problems.append(f"sub-process {i}, grant {grant}: local value gap {gap:.2e}")
            for t, s, b in reachable_entries(sub, oracle.policy):
                if dp.policy.action(t, s, b) != oracle.policy.action(t, s, b):
                    problems.append(f"sub-process {i}, grant {grant}: action differs at (t={t}, s={s}, b={b})")
                    break
    return problems


def verify_copt(model: SystemModel, config: RunConfig, limits: EnumerationBudget) -> List[str]:
    """Mismatches between value_iteration(copt) and brute_force_copt"""
    solved = value_iteration(model, Framework.COPT, config.epsilon, config.max_iter, config.copt_state_cap)
    oracle = brute_force_copt(model, VALUE_MATCH, limits)
    problems = []
    gap = sup_norm(solved.value, oracle.value)
    if gap > VALUE_MATCH:
        problems.append(f"COpt value gap {gap:.2e}")
    if solved.global_policy != oracle.global_policy:
        problems.append(f"allocations differ: {solved.global_policy.to_list()} vs {oracle.global_policy.to_list()}")
    elif solved.first_actions() != oracle.first_actions():
        problems.append("first local actions differ")
    return problems


def run(config: RunConfig, console: Console) -> int:
    limits = EnumerationBudget(tables=config.oracle_table_cap, candidates=config.oracle_candidate_cap)
    if config.instance is not None:
        corpus = [load_instance(config.instance)]
    else:
        corpus = tiny_corpus(config.seed, config.corpus or DEFAULT_CORPUS)

    outcomes: List[CheckOutcome] = []
    for model in corpus:
        problems = verify_local(model, limits) + verify_copt(model, config, limits)
        outcomes.append(CheckOutcome(name=model.name, passed=not problems, detail="; ".join(problems)))
        logger.info("[Oracle] %s: %s", model.name, "agrees" if not problems else problems)

    table = Table(title="Solver vs brute force", box=box.ROUNDED, header_style="dim")
    table.add_column("instance")
    table.add_column("result")
    table.add_column("detail")
    for outcome in outcomes:
        table.add_row(outcome.name, "[green]agree[/green]" if outcome.passed else "[red]differ[/red]", outcome.detail)
    console.print(table)

    passed = int(np.sum([o.passed for o in outcomes]))
    if "json" in config.formats:
        write_json(
            config.output_dir / "oracle_verify.json",
            CheckSummaryDocument(command="oracle-verify", passed=passed, failed=len(outcomes) - passed, checks=outcomes),
        )
    return 0 if passed == len(outcomes) else 3
