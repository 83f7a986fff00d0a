"""Command-line front end: ``germkit <command> <germ> [options]`` or ``germkit job <file>``."""

import argparse
import json
import logging
import sys
from pathlib import Path

from germkit import __version__
from germkit.config import settings
from germkit.exceptions import GermError
from germkit.models import Report
from germkit.services.analysis import AnalysisService
from germkit.services.parser import Command, JobSpec, load_job

logger = logging.getLogger(__name__)


def _germ_text(value: str) -> str:
    path = Path(value)
    if "(" not in value and path.is_file():
        return path.read_text(encoding="utf-8").strip()
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-N", "--order", type=int, default=None, help="truncation order (default from settings)")
    common.add_argument("--format", choices=("text", "json"), default=None, help="report format")
    common.add_argument("--max-steps", type=int, default=None, help="bound on pipeline steps")

    parser = argparse.ArgumentParser(
        prog="germkit",
        description="Exact formal computations for germs f: (C^2, 0) -> (C^2, 0)",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=settings.log_level, help="logging level on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    for command in Command:
        p = sub.add_parser(command.value, parents=[common], help=f"run '{command.value}' on a germ")
        p.add_argument("germ", help="germ as '(f1, f2)' or a file containing it")
        if command == Command.WALK:
            p.add_argument("--steps", required=True, help="blow-up walk, e.g. z:0,w:0,w:0")
        if command == Command.BLOWUP:
            p.add_argument("--at", dest="theta", default=None, help="centre theta on the exceptional line")
            p.add_argument("--chart", choices=("z", "w"), default="z")
        if command in (Command.RATES, Command.EIGEN):
            p.add_argument("--iterations", dest="n_max", type=int, default=None)
        if command == Command.SEGMENT:
            p.add_argument("--family", choices=("zw", "infinity"), default="zw")

    job = sub.add_parser("job", parents=[common], help="run a job file")
    job.add_argument("path", type=Path)
    return parser


def _job_from_args(args: argparse.Namespace, service: AnalysisService) -> JobSpec:
    if args.command == "job":
        spec = load_job(args.path, default_order=service.truncation)
        if args.order:
            spec.order = args.order
        if args.max_steps is not None:
            spec.options["max_steps"] = str(args.max_steps)
        return spec
    options = {
        key: getattr(args, key, None)
        for key in ("max_steps", "steps", "theta", "chart", "n_max", "family")
    }
    return service.job(args.command, _germ_text(args.germ), args.order, **options)


def _render_value(value, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(value, dict):
        lines = []
        for key, item in value.items():
            if isinstance(item, (dict, list)) and item:
                lines.append(f"{pad}{key}:")
                lines.extend(_render_value(item, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_scalar_text(item)}")
        return lines
    if isinstance(value, list):
        if all(not isinstance(v, (dict, list)) for v in value):
            return [pad + ", ".join(_scalar_text(v) for v in value)]
        lines = []
        for item in value:
            lines.append(f"{pad}-")
            lines.extend(_render_value(item, indent + 1))
        return lines
    return [pad + _scalar_text(value)]


def _scalar_text(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (list, dict)):
        return json.dumps(value)
    return str(value)


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        return report.model_dump_json(by_alias=True, indent=2)
    return "\n".join(_render_value(report.model_dump(by_alias=True), 0))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper(), logging.INFO),
        format="%(asctime)s  %(levelname)-8s  %(name)s  %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
    )
    service = AnalysisService(
        truncation=settings.truncation,
        max_steps=settings.max_steps,
        min_retained_order=settings.min_retained_order,
        rate_iterations=settings.rate_iterations,
    )
    try:
        report = service.run(_job_from_args(args, service))
    except GermError as exc:
        print(f"error[{exc.kind}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except ZeroDivisionError as exc:
        print(f"error[zero_division]: {exc}", file=sys.stderr)
        return 1
    print(render(report, args.format or settings.output_format))
    return 0
