"""Command line entry point: `igo run|flow|table|selftest`."""

import argparse
import csv
import logging
import sys

from .errors import CapabilityError, ConfigError
from .experiments import load_config, run_experiment, run_flow, run_selftest, write_table
from .settings import OUTPUT_DIR_VARIABLE, toggle_debug_mode
from .utils import format_float

log = logging.getLogger("igo")


EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUN_FAILED = 3


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        prog="igo",
        description=f"Information-geometric optimization experiments. Output folder: ${OUTPUT_DIR_VARIABLE}.",
    )
    parser.add_argument("--debug", action="store_true", help="Log every step.")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run the repeats of an experiment configuration.")
    run.add_argument("config", help="Path to a `key = value` configuration file.")

    flow = commands.add_parser("flow", help="Integrate the flow of an experiment configuration.")
    flow.add_argument("config", help="Path to a `key = value` configuration file.")

    table = commands.add_parser("table", help="Tabulate critical_dt or linear_constants.")
    table.add_argument("spec", help="For example `critical_dt` or `linear_constants:d=2`.")

    commands.add_parser("selftest", help="Re-evaluate the worked examples.")
    return parser.parse_args(argv)


def _run(args):
    config = load_config(args.config)
    if config.debug:
        toggle_debug_mode(True)
    result = run_experiment(config)
    failures = result.failures
    if failures:
        counts = ", ".join(f"{status}={count}" for status, count in sorted(failures.items()))
        print(f"{sum(failures.values())} of {len(result.records)} runs failed: {counts}", file=sys.stderr)
        return EXIT_RUN_FAILED
    return EXIT_OK


def _flow(args):
    config = load_config(args.config)
    if config.debug:
        toggle_debug_mode(True)
    run_flow(config)
    return EXIT_OK


def _table(args):
    _, header, rows = write_table(args.spec)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(value) for value in row])
    return EXIT_OK


def _selftest(args):
    return EXIT_SELFTEST_FAILED if run_selftest() else EXIT_OK


COMMANDS = {
    "run": _run,
    "flow": _flow,
    "table": _table,
    "selftest": _selftest,
}


def main(argv=None):
    """Run a subcommand and return its exit code."""

    args = parse_args(argv)
    toggle_debug_mode(args.debug)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as error:
        error_message = f"Configuration error: {error}"
        log.error(error_message)
        return EXIT_CONFIG_ERROR
    except CapabilityError as error:
        error_message = f"Unsupported operation: {error}"
        log.error(error_message)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
