import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from app.components.report_tables import ReportTablesComponent
from app.errors import SchemaError, ToricError
from app.models import CommandFlags
from app.services.problem_service import ProblemService
from app.services.report_service import COMMANDS, ReportService
from app.startup import startup

logger = logging.getLogger(__name__)

DEFAULT_PARALLEL = int(os.environ.get("TORIC_PARALLEL", "1"))


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toric-brasselet",
        description="Exact Brasselet numbers, orbit Euler characteristics and Morse counts on affine toric varieties.",
    )
    parser.add_argument("command", choices=COMMANDS, help="what to compute")
    parser.add_argument("problem", type=Path, help="problem file (JSON)")
    parser.add_argument("--json", dest="json_output", action="store_true", help="emit the JSON report document")
    parser.add_argument(
        "--parallel", type=_positive, default=DEFAULT_PARALLEL, help="worker threads for per-face terms"
    )
    parser.add_argument("-f", "--function", help="name of the function f")
    parser.add_argument("-g", "--hypersurface", help="name of the function g cutting out X^g")
    parser.add_argument("--prior", dest="priors", action="append", default=[], help="earlier CI function (repeatable)")
    parser.add_argument("--face", help="restrict to one face, e.g. face{1,2} or origin")
    parser.add_argument("--polytope", dest="polytopes", action="append", default=[], help="polytope name (repeatable)")
    parser.add_argument("--mode", help="milnor-cn mode: solve or relation")
    parser.add_argument("--family", help="deformation of f")
    parser.add_argument("--hypersurface-family", help="deformation of g")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns 0 on success, 2 on input or hypothesis errors, 1 on anything unexpected."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        logger.debug(f"argument parsing exited with {e.code}")
        return 0 if e.code == 0 else 2

    options = {key: value for key, value in vars(args).items() if key not in ("command", "problem")}
    flags = CommandFlags.model_validate(options)
    try:
        problems = ProblemService()
        problem = problems.load(args.problem)
        context = problems.build_context(problem)
        document = ReportService(flags.parallel).run_command(args.command, context, flags)
    except SchemaError as e:
        logger.error(f"Invalid problem file {args.problem}")
        sys.stderr.write("invalid problem file:\n" + "".join(f"  {message}\n" for message in e.errors))
        return 2
    except ToricError as e:
        logger.error(f"{args.command} failed: {e}")
        sys.stderr.write(f"error: {e}\n")
        return 2
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}")
        sys.stderr.write(f"internal error: {e}\n")
        return 1

    if flags.json_output:
        sys.stdout.write(json.dumps(document.model_dump(mode="json"), indent=2) + "\n")
    else:
        sys.stdout.write(ReportTablesComponent().render(document))
    return 0


def run() -> None:
    startup()
    raise SystemExit(main())
