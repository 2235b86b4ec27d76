# hiermdp/main.py
# Command-line entry point
# - Argument parsing (one sub-command per module in hiermdp.commands)
# - Logging configuration
# - Exit-code mapping and global exception handler

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError
from rich.console import Console

from hiermdp.commands import check, compare, oracle_verify, paper, solve
from hiermdp.config import RunConfig, Settings, get_settings
from hiermdp.errors import CapExceededError, InstanceParseError, ModelValidationError

logger = logging.getLogger("hiermdp")

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"

COMMANDS = {
    "solve": solve,
    "compare": compare,
    "check": check,
    "paper-examples": paper,
    "oracle-verify": oracle_verify,
}


def configure_logging(level: str):
    """Configure the root logger once for a CLI run"""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, stream=sys.stderr, force=True)


# ============================================================================
# Parser
# ============================================================================

def common_arguments(settings: Settings) -> argparse.ArgumentParser:
    """Flags shared by every sub-command; defaults come from HIERMDP_* settings"""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--epsilon", type=float, default=settings.epsilon, help="value-iteration accuracy")
    parent.add_argument("--max-iter", type=int, default=settings.max_iter, help="sweep limit")
    parent.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo and generated instances")
    parent.add_argument("--output-dir", type=Path, default=settings.output_dir, help="artifact directory")
    parent.add_argument(
        "--format", dest="formats", action="append", choices=["json", "csv"],
        help="artifact format (repeatable; default json and csv)",
    )
    parent.add_argument("--copt-state-cap", type=int, default=settings.copt_state_cap)
    parent.add_argument("--upper-set-cap", type=int, default=settings.upper_set_cap)
    parent.add_argument("--policy-cap", type=int, default=settings.policy_cap)
    parent.add_argument("--oracle-candidate-cap", type=int, default=settings.oracle_candidate_cap)
    parent.add_argument("--oracle-table-cap", type=int, default=settings.oracle_table_cap)
    parent.add_argument("--log-level", default=settings.log_level, help="DEBUG, INFO, WARNING, ERROR")
    return parent


def build_parser(settings: Optional[Settings] = None) -> argparse.ArgumentParser:
    settings = settings or get_settings()
    parser = argparse.ArgumentParser(
        prog="hiermdp",
        description="Central (COpt) and federal (FOpt) solvers for two-timescale budget allocation",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    parent = common_arguments(settings)
    for module in COMMANDS.values():
        module.add_parser(subparsers, parent, settings)
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    """Validate parsed arguments"""
    values = {k: v for k, v in vars(args).items() if k != "log_level" and v is not None}
    return RunConfig(**values)


# ============================================================================
# Entry Point
# ============================================================================

def main(argv: Optional[List[str]] = None, console: Optional[Console] = None) -> int:
    """
    Run one CLI command

    Returns:
        0 success, 1 parse/validation error, 2 non-convergence,
        3 negative verdict, 4 not-checked
    """
    console = console or Console()
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        config = run_config(args)
    except ValidationError as e:
        for err in e.errors():
            field = ".".join(str(part) for part in err["loc"])
            console.print(f"[red]error[/red] {field}: {err['msg']}")
        return 1

    try:
        return COMMANDS[config.command].run(config, console)
    except InstanceParseError as e:
        console.print(f"[red]parse error[/red] {e.source}")
        for line in e.diagnostics:
            console.print(f"  {line}")
        return 1
    except ModelValidationError as e:
        console.print("[red]invalid instance[/red]")
        for line in e.violations:
            console.print(f"  {line}")
        return 1
    except CapExceededError as e:
        console.print(f"[red]refused[/red] {e}")
        return 1
    except Exception as e:
        logger.exception("[CLI] Unhandled error: %s", e)
        console.print(f"[red]error[/red] {type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
