"""Command-line entry point: ``dab-aircomp run`` and ``dab-aircomp list-scenarios``."""

import argparse
import logging
import sys

from .experiments import (
    DESCRIPTIONS,
    SCENARIOS,
    ConfigError,
    builtin_scenario,
    emit_csv,
    load_config,
    run_scenario,
    with_overrides,
)

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _parser():
    p = argparse.ArgumentParser(prog="dab-aircomp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write CSV results")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="built-in scenario name (see list-scenarios)")
    src.add_argument("--config", help="YAML scenario file")
    run.add_argument("--seed", type=int, default=None, help="master seed (default: config value, 0 for built-ins)")
    run.add_argument("--trials", type=int, default=None, help="Monte Carlo trials per point")
    run.add_argument("--out", default="-", help="output CSV path (default: stdout)")
    run.add_argument("--per-entry-mse", action="store_true", help="divide MSE by the payload dimension")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("list-scenarios", help="print the built-in scenarios")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name in SCENARIOS:
            print(f"{name}\t{DESCRIPTIONS[name]}")
        return EXIT_OK

    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(message)s")
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if args.scenario:
            config = builtin_scenario(args.scenario)
        else:
            config = load_config(args.config)
        config = with_overrides(config, seed=args.seed, trials=args.trials)
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rows = run_scenario(config, n_jobs=args.jobs, per_entry=args.per_entry_mse)
    try:
        if args.out == "-":
            emit_csv(rows, sys.stdout)
        else:
            emit_csv(rows, args.out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK
