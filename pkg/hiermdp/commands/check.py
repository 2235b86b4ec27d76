# hiermdp/commands/check.py
# check: verify the sufficient conditions A1-A5
# - Writes <name>_assumptions.json
# - Exit 0 all hold, 3 some fail, 4 some not checked

from rich import box
from rich.console import Console
from rich.table import Table

from hiermdp.analysis import AssumptionReport, Verdict, check_assumptions
from hiermdp.config import RunConfig, Settings
from hiermdp.instances import load_instance
from hiermdp.schemas import AssumptionReportDocument
from hiermdp.utils import write_json

STYLE = {Verdict.HOLDS: "green", Verdict.FAILS: "red", Verdict.NOT_CHECKED: "yellow"}


def add_parser(subparsers, parent, settings: Settings):
    parser = subparsers.add_parser("check", parents=[parent], help="check assumptions A1-A5")
    parser.add_argument("instance", help="instance JSON file")


def render(report: AssumptionReport, title: str) -> Table:
    table = Table(title=title, box=box.ROUNDED, header_style="dim")
    table.add_column("assumption")
    table.add_column("verdict")
    table.add_column("checks", justify="right")
    table.add_column("witness / detail")
    for result in report.results.values():
        style = STYLE[result.verdict]
        table.add_row(
            result.name,
            f"[{style}]{result.verdict.value}[/{style}]",
            str(result.comparisons),
            result.detail,
        )
    return table


def run(config: RunConfig, console: Console) -> int:
    model = load_instance(config.instance)
    report = check_assumptions(model, upper_set_cap=config.upper_set_cap, policy_cap=config.policy_cap)
    if "json" in config.formats:
        write_json(
            config.output_dir / f"{model.name}_assumptions.json",
            AssumptionReportDocument.from_report(report, model.name),
        )
    console.print(render(report, f"{model.name}: sufficient conditions"))
    for note in report.notes:
        console.print(f"[dim]{note}[/dim]")
    return report.exit_code
