# backend/cli.py
"""Batch front end: `sweep`, `validate` and `tables` subcommands."""

import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from backend.config import Config
from backend.service.errors import ConfigError, NumericError
from backend.service.scenarios import CANNED, resolve, tables
from backend.service.sweep_runner import SweepSpec, run_sweep
from backend.service.validation import results_table, run_checks
from backend.utils.io import load_scenario, write_results, write_sidecar

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _report_config_error(e: Exception) -> int:
    if isinstance(e, ValidationError):
        print("❌ Configuration error:", file=sys.stderr)
        for err in e.errors():
            loc = ".".join(str(part) for part in err["loc"])
            print(f"   {loc}: {err['msg']}", file=sys.stderr)
    else:
        key = getattr(e, "key", None)
        print(f"❌ Configuration error{f' [{key}]' if key else ''}: {e}", file=sys.stderr)
    return EXIT_CONFIG


def _report_numeric_error(e: NumericError) -> int:
    point = ", ".join(f"{k}={v}" for k, v in e.point.items()) or "unknown point"
    print(f"❌ Numeric failure at {point}: {e}", file=sys.stderr)
    return EXIT_NUMERIC


def cmd_sweep(scenario_path: str, out_path: str | None = None, fmt: str = "csv", bits: bool = False,
              seed: int | None = None, samples: int | None = None, workers: int | None = None) -> int:
    try:
        scenario = load_scenario(scenario_path)
        spec = SweepSpec.from_scenario(scenario, seed=seed, samples=samples, workers=workers)
        out = Path(out_path) if out_path else Path("results") / f"{scenario.name}.{fmt}"
        rows = run_sweep(spec)
        write_results(rows, out, fmt=fmt, bits=bits)
        sidecar = write_sidecar(spec, out, bits=bits)
    except (ConfigError, ValidationError) as e:
        return _report_config_error(e)
    except NumericError as e:
        return _report_numeric_error(e)
    print(f"✅ {len(rows)} rows written to {out} (resolved config: {sidecar})")
    return EXIT_OK


def cmd_validate(scenario_path: str, seed: int | None = None, samples: int | None = None,
                 workers: int | None = None) -> int:
    try:
        scenario = load_scenario(scenario_path)
        link = resolve(scenario)
        seed = seed if seed is not None else (scenario.mc.seed if scenario.mc.seed is not None else Config.SEED)
        samples = samples if samples is not None else (scenario.mc.samples or Config.SAMPLES)
        results = run_checks(link, samples=samples, seed=seed, workers=workers)
    except (ConfigError, ValidationError) as e:
        return _report_config_error(e)
    except NumericError as e:
        return _report_numeric_error(e)

    print(results_table(results))
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"❌ {len(failed)} check(s) failed; first: {failed[0].name}")
        return EXIT_VALIDATION_FAILED
    print(f"✅ all {len(results)} checks passed")
    return EXIT_OK


def cmd_tables() -> int:
    for title, df in tables():
        print(f"\n{title}")
        print(df.to_string(index=False))
    return EXIT_OK


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmfso",
        description="mmWave uplink with FSO backhaul: analytic metrics and Monte-Carlo cross-checks",
    )
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    scenario_help = f"scenario file (.toml/.json/.json5) or canned name ({', '.join(CANNED)})"

    sweep_parser = subparsers.add_parser("sweep", help="Run a parameter sweep and write plot-ready results")
    sweep_parser.add_argument("scenario", help=scenario_help)
    sweep_parser.add_argument("--out", default=None, help="output path (default results/<name>.<format>)")
    sweep_parser.add_argument("--format", default="csv", choices=["csv", "json"])
    sweep_parser.add_argument("--bits", action="store_true", help="report rates in bits instead of nats")
    sweep_parser.add_argument("--seed", type=int, default=None)
    sweep_parser.add_argument("--samples", type=int, default=None)
    sweep_parser.add_argument("--workers", type=_positive_int, default=None, help="Monte-Carlo worker processes")

    validate_parser = subparsers.add_parser("validate", help="Cross-check closed forms against Monte-Carlo")
    validate_parser.add_argument("scenario", help=scenario_help)
    validate_parser.add_argument("--seed", type=int, default=None)
    validate_parser.add_argument("--samples", type=int, default=None)
    validate_parser.add_argument("--workers", type=_positive_int, default=None, help="Monte-Carlo worker processes")

    subparsers.add_parser("tables", help="Print the canned parameter tables")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(asctime)s [%(levelname)s] %(message)s")

    try:
        Config.validate_config()
    except ValueError as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "sweep":
        return cmd_sweep(args.scenario, args.out, args.format, args.bits, args.seed, args.samples, args.workers)
    if args.command == "validate":
        return cmd_validate(args.scenario, args.seed, args.samples, args.workers)
    if args.command == "tables":
        return cmd_tables()
    parser.print_help()
    return EXIT_CONFIG
