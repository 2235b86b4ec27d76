# hiermdp/commands/solve.py
# solve: run value iteration for COpt, FOpt or both
# - Writes <name>_<framework>.json (SolveResult) and <name>_<framework>_values.csv
# - Exit 0 on convergence, 2 if any framework hit max_iter

import json
import logging

from rich import box
from rich.console import Console
from rich.table import Table

from hiermdp.config import RunConfig, Settings
from hiermdp.errors import ConvergenceError
from hiermdp.instances import load_instance
from hiermdp.schemas import SolveResultDocument
from hiermdp.solvers import Framework, SolveResult, value_iteration
from hiermdp.utils import write_csv, write_json

logger = logging.getLogger(__name__)


def add_parser(subparsers, parent, settings: Settings):
    parser = subparsers.add_parser("solve", parents=[parent], help="solve one or both frameworks")
    parser.add_argument("instance", help="instance JSON file")
    parser.add_argument("--framework", choices=["copt", "fopt", "both"], default="both")


def frameworks(config: RunConfig):
    if config.framework == "both":
        return [Framework.COPT, Framework.FOPT]
    return [Framework(config.framework)]


def write_solve_artifacts(config: RunConfig, model, result: SolveResult):
    stem = f"{model.name}_{result.framework.value}"
    states = model.joint_states()
    if "json" in config.formats:
        write_json(config.output_dir / f"{stem}.json", SolveResultDocument.from_result(result, model.name, states, config.seed))
    if "csv" in config.formats:
        rows = ((s, json.dumps(list(c)), f"{v:.12g}") for s, (c, v) in enumerate(zip(states, result.value)))
        write_csv(config.output_dir / f"{stem}_values.csv", ["state_index", "components", "value"], rows)


def run(config: RunConfig, console: Console) -> int:
    model = load_instance(config.instance)
    exit_code = 0
    table = Table(title=f"{model.name}", box=box.ROUNDED, header_style="dim")
    table.add_column("framework")
    table.add_column("converged")
    table.add_column("sweeps", justify="right")
    table.add_column("value")
    table.add_column("allocation")

    for which in frameworks(config):
        try:
            result = value_iteration(model, which, config.epsilon, config.max_iter, config.copt_state_cap)
        except ConvergenceError as e:
            logger.warning("[Solve] %s", e)
            result = e.result
            exit_code = 2
        write_solve_artifacts(config, model, result)
        table.add_row(
            which.value,
            "[green]yes[/green]" if result.converged else "[red]no[/red]",
            str(result.iterations),
            ", ".join(f"{v:.4f}" for v in result.value),
            " ".join(str(list(a)) for a in result.global_policy.allocations),
        )

    console.print(table)
    return exit_code
