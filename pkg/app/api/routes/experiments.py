import argparse
import json
import logging
from pathlib import Path

from ...core.config import settings
from ...core.exceptions import EXIT_OK
from ...models.experiment import SolveReport
from ...services.runner import GRID_PRESETS, grid_suite, run_experiment, run_suite
from ..dependencies import load_config, load_suite

logger = logging.getLogger(__name__)


def run_command(args: argparse.Namespace) -> int:
    """Run one experiment config"""
    config = load_config(args.config)
    report = run_experiment(config, args.out)
    print(json.dumps({
        "experiment": report.experiment,
        "status": report.status,
        "mse": report.mse,
        "max_error": report.max_error,
        "report": report.files.get("report"),
    }))
    return report.exit_code


def suite_command(args: argparse.Namespace) -> int:
    """Run a JSON array of configs and write summary.csv"""
    configs = load_suite(args.configs)
    rows = run_suite(configs, args.out, jobs=args.jobs)
    out = Path(args.out) if args.out else settings.OUTPUT_DIR
    failed = [r.name for r in rows if r.status != "ok"]
    if failed:
        logger.warning(f"{len(failed)} experiment(s) failed: {', '.join(failed)}")
    print(out / "summary.csv")
    # failures are per-row; the suite run itself succeeded
    return EXIT_OK


def grid_command(args: argparse.Namespace) -> int:
    """Write one of the preset experiment grids as a suite file"""
    configs = grid_suite(args.preset)
    payload = [c.model_dump(mode="json", exclude_none=True) for c in configs]
    text = json.dumps(payload, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n")
        logger.info(f"Wrote {len(configs)} configs to {args.output}")
    else:
        print(text)
    return EXIT_OK


def schema_command(args: argparse.Namespace) -> int:
    """Print the report.json schema"""
    print(json.dumps(SolveReport.model_json_schema(), indent=2))
    return EXIT_OK


def register(subparsers) -> None:
    run = subparsers.add_parser("run", help="run a single experiment config (JSON)")
    run.add_argument("config", help="path to an experiment config")
    run.add_argument("--out", default=None, help=f"output directory (default {settings.OUTPUT_DIR})")
    run.set_defaults(handler=run_command)

    suite = subparsers.add_parser("suite", help="run a JSON array of experiment configs")
    suite.add_argument("configs", help="path to a suite file")
    suite.add_argument("--out", default=None, help=f"output directory (default {settings.OUTPUT_DIR})")
    suite.add_argument("--jobs", type=int, default=1, help="worker processes")
    suite.set_defaults(handler=suite_command)

    grid = subparsers.add_parser("grid", help="write a preset experiment grid as a suite file")
    grid.add_argument("preset", choices=sorted(GRID_PRESETS))
    grid.add_argument("-o", "--output", default=None, help="file to write (default stdout)")
    grid.set_defaults(handler=grid_command)

    schema = subparsers.add_parser("schema", help="print the report.json schema")
    schema.set_defaults(handler=schema_command)
