# hiermdp/commands/paper.py
# paper-examples: reproduce the two bundled two-state examples
# - Example 1: frameworks differ (COpt/FOpt values, Monte Carlo, A4 witness)
# - Example 2: frameworks agree (values, policies, A1-A5)
# - Prints a pass/fail table; exit 0 iff every check passes

import logging
from typing import Callable, List, Tuple

import numpy as np
from rich import box
from rich.console import Console
from rich.table import Table

from hiermdp.analysis import ComparisonReport, Verdict, check_assumptions, compare_frameworks
from hiermdp.config import RunConfig, Settings
from hiermdp.evaluation import evaluate_policy_exact, evaluate_policy_mc
from hiermdp.instances import bundled_example
from hiermdp.schemas import CheckOutcome, CheckSummaryDocument
from hiermdp.utils import format_vector, write_json

logger = logging.getLogger(__name__)

# Reference values (beta = gamma = 0.99)
EXAMPLE1_COPT = np.array([74.5, 75.1])
EXAMPLE1_COPT_TOL = 0.2
EXAMPLE1_FOPT_EXACT = np.array([0.401, 0.406]) / 0.00604
EXAMPLE1_FOPT_MC_REPORTED = np.array([66.3, 67.2])
EXAMPLE1_FOPT_MC_TOL = 0.3
EXAMPLE1_GAP = np.array([8.2, 7.9])
EXAMPLE1_GAP_TOL = 0.15
EXAMPLE2_VALUE = np.array([89.60, 90.08])
EXAMPLE2_TOL = 0.05

Check = Tuple[str, Callable[[], Tuple[bool, str]]]


def add_parser(subparsers, parent, settings: Settings):
    parser = subparsers.add_parser("paper-examples", parents=[parent], help="reproduce the bundled examples")
    parser.add_argument("--data-dir", type=str, default=None, help="directory holding example1.json / example2.json")
    parser.add_argument("--episodes", type=int, default=settings.mc_episodes, help="Monte Carlo episodes per state")
    parser.add_argument("--horizon", type=int, default=settings.mc_horizon, help="Monte Carlo epochs per episode")
    parser.add_argument("--mc-seeds", type=int, default=1, help="number of consecutive Monte Carlo seeds")


def _close(values, reference, tol) -> bool:
    return bool(np.all(np.abs(np.asarray(values) - reference) <= tol))


def build_checks(config: RunConfig) -> List[Check]:
    """Load both examples (parse errors propagate) and return the deferred checks"""
    example1 = bundled_example("example1", config.data_dir)
    example2 = bundled_example("example2", config.data_dir)
    reports = {}

    def compared(name, model) -> ComparisonReport:
        if name not in reports:
            reports[name] = compare_frameworks(model, config.epsilon, config.max_iter, config.copt_state_cap)
        return reports[name]

    def copt_example1():
        report = compared("example1", example1)
        first = [a[0] for a in report.copt.first_actions()]
        ok = _close(report.v_copt, EXAMPLE1_COPT, EXAMPLE1_COPT_TOL) and first == [0, 1]
        return ok, f"V_C* {format_vector(report.v_copt)}, first actions {first}"

    def fopt_exact_example1():
        report = compared("example1", example1)
        exact = evaluate_policy_exact(example1, report.fopt.global_policy, report.fopt.local_policies)
        ok = _close(exact, EXAMPLE1_FOPT_EXACT, 1e-3) and _close(exact, EXAMPLE1_FOPT_MC_REPORTED, EXAMPLE1_FOPT_MC_TOL)
        return ok, f"exact {format_vector(exact)}"

    def fopt_mc_example1():
        report = compared("example1", example1)
        exact = evaluate_policy_exact(example1, report.fopt.global_policy, report.fopt.local_policies)
        misses = []
        for seed in range(config.seed, config.seed + config.mc_seeds):
            estimate = evaluate_policy_mc(
                example1, report.fopt.global_policy, report.fopt.local_policies,
                horizon=config.horizon, episodes=config.episodes, seed=seed,
            )
            if not estimate.contains(exact, k=3.0):
                misses.append(seed)
        detail = f"{config.mc_seeds} seed(s), {config.episodes} episodes, horizon {config.horizon}"
        if misses:
            detail += f"; outside 3 standard errors for seeds {misses}"
        return not misses, detail

    def differ_example1():
        report = compared("example1", example1)
        ok = (
            not report.equivalent
            and _close(report.gap, EXAMPLE1_GAP, EXAMPLE1_GAP_TOL)
            and not report.myopic[0].is_myopic
        )
        return ok, f"gap {format_vector(report.gap)}, exit {report.exit_code}"

    def agree_example2():
        report = compared("example2", example2)
        ok = (
            report.equivalent
            and _close(report.v_copt, EXAMPLE2_VALUE, EXAMPLE2_TOL)
            and _close(report.v_fopt, EXAMPLE2_VALUE, EXAMPLE2_TOL)
            and report.copt.global_policy == report.fopt.global_policy
            and report.copt.first_actions() == report.fopt.first_actions()
        )
        return ok, f"V_C* {format_vector(report.v_copt)}, V_F* {format_vector(report.v_fopt)}"

    def assumptions_example2():
        report = check_assumptions(example2, upper_set_cap=config.upper_set_cap, policy_cap=config.policy_cap)
        return report.sufficient, ", ".join(f"{n} {r.verdict.value}" for n, r in report.results.items())

    def witness_example1():
        report = check_assumptions(example1, upper_set_cap=config.upper_set_cap, policy_cap=config.policy_cap)
        a4 = report["A4"]
        others = all(report[n].verdict is Verdict.HOLDS for n in ("A1", "A2", "A3", "A5"))
        w = a4.witness
        ok = (
            a4.verdict is Verdict.FAILS and others and w is not None and w.confirms()
            and tuple(w.context.get("allocation", ())) == (1,) and w.context.get("state") == 0
            and w.upper_set == frozenset({1})
        )
        return ok, a4.detail

    def sandwich_both():
        reports_ = [compared("example1", example1), compared("example2", example2)]
        ok = all(r.sandwich_holds and r.gap_bound_holds for r in reports_)
        return ok, "; ".join(f"bound {r.gap_bound:.4f} >= gap {r.sup_gap:.4f}" for r in reports_)

    return [
        ("Example 1 COpt value and local policy", copt_example1),
        ("Example 1 FOpt exact evaluation", fopt_exact_example1),
        ("Example 1 FOpt Monte Carlo", fopt_mc_example1),
        ("Example 1 frameworks differ", differ_example1),
        ("Example 2 frameworks agree", agree_example2),
        ("Example 2 satisfies A1-A5", assumptions_example2),
        ("Example 1 fails A4 with witness", witness_example1),
        ("Sandwich and gap bound", sandwich_both),
    ]


def run(config: RunConfig, console: Console) -> int:
    outcomes: List[CheckOutcome] = []
    for name, check in build_checks(config):
        try:
            passed, detail = check()
        except Exception as e:
            logger.exception("[Examples] %s raised", name)
            passed, detail = False, f"{type(e).__name__}: {e}"
        outcomes.append(CheckOutcome(name=name, passed=passed, detail=detail))

    table = Table(title="Bundled examples", box=box.ROUNDED, header_style="dim")
    table.add_column("check")
    table.add_column("result")
    table.add_column("detail")
    for outcome in outcomes:
        table.add_row(outcome.name, "[green]pass[/green]" if outcome.passed else "[red]FAIL[/red]", outcome.detail)
    console.print(table)

    passed = sum(o.passed for o in outcomes)
    console.print(f"{passed}/{len(outcomes)} checks passed")
    if "json" in config.formats:
        write_json(
            config.output_dir / "paper_examples.json",
            CheckSummaryDocument(command="paper-examples", passed=passed, failed=len(outcomes) - passed, checks=outcomes),
        )
    return 0 if passed == len(outcomes) else 3
