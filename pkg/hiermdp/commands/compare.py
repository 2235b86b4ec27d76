# hiermdp/commands/compare.py
# compare: solve both frameworks and relate them
# - Writes <name>_compare.json (ComparisonReport) and <name>_compare.csv
# - Exit 0 equivalent, 3 not equivalent, 2 non-convergence (partial SolveResult written)

import json
import logging

from rich import box
from rich.console import Console
from rich.table import Table

from hiermdp.analysis import compare_frameworks
from hiermdp.commands.solve import write_solve_artifacts
from hiermdp.config import RunConfig, Settings
from hiermdp.errors import ConvergenceError
from hiermdp.instances import load_instance
from hiermdp.schemas import ComparisonReportDocument
from hiermdp.utils import write_csv, write_json

logger = logging.getLogger(__name__)

CSV_HEADER = ["state_index", "components", "V_copt", "V_fopt", "lower_envelope", "gap"]


def add_parser(subparsers, parent, settings: Settings):
    parser = subparsers.add_parser("compare", parents=[parent], help="compare COpt and FOpt fixed points")
    parser.add_argument("instance", help="instance JSON file")


def run(config: RunConfig, console: Console) -> int:
    model = load_instance(config.instance)
    try:
        report = compare_frameworks(model, config.epsilon, config.max_iter, config.copt_state_cap)
    except ConvergenceError as e:
        logger.warning("[Compare] %s", e)
        write_solve_artifacts(config, model, e.result)
        console.print(f"[red]not converged[/red] {e}")
        return 2

    states = model.joint_states()
    if "json" in config.formats:
        write_json(config.output_dir / f"{model.name}_compare.json", ComparisonReportDocument.from_report(report, model.name, states))
    if "csv" in config.formats:
        rows = (
            (s, json.dumps(list(c)), f"{vc:.12g}", f"{vf:.12g}", f"{lo:.12g}", f"{g:.12g}")
            for s, (c, vc, vf, lo, g) in enumerate(
                zip(states, report.v_copt, report.v_fopt, report.lower_envelope, report.gap)
            )
        )
        write_csv(config.output_dir / f"{model.name}_compare.csv", CSV_HEADER, rows)

    table = Table(title=f"{model.name}: COpt vs FOpt", box=box.ROUNDED, header_style="dim")
    for column in ("state", "V_copt", "V_fopt", "lower", "gap", "T-myopic"):
        table.add_column(column, justify="right")
    for s, c in enumerate(states):
        verdict = report.myopic[s]
        table.add_row(
            str(list(c)),
            f"{report.v_copt[s]:.4f}",
            f"{report.v_fopt[s]:.4f}",
            f"{report.lower_envelope[s]:.4f}",
            f"{report.gap[s]:.4f}",
            "yes" if verdict.is_myopic else f"[yellow]no[/yellow] ({verdict.copt_reward:.3g} < {verdict.myopic_reward:.3g})",
        )
    console.print(table)
    status = "[green]equivalent[/green]" if report.equivalent else "[red]not equivalent[/red]"
    console.print(f"{status}  sup gap {report.sup_gap:.3e}  bound {report.gap_bound:.3e}")
    if not report.sandwich_holds:
        console.print("[red]sandwich inequality violated[/red]")
    return report.exit_code
