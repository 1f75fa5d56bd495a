"""Command-line entry point: one subcommand per experiment kind.

Usage:
    prodspectra <experiment> --config config.json [--seed N] [--out DIR]
                [--trials N] [--figure-data]

Exit codes: 0 success, 1 numerical failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, emit_figure_data, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prodspectra")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--trials", type=int, default=None, help="override trial count")
        if name in ("spectrum", "outliers"):
            p.add_argument(
                "--figure-data",
                action="store_true",
                help="also write the figure CSV (bulk/outlier/cross/circle)",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    data["experiment"] = args.experiment
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output_path"] = args.out
    if args.trials is not None:
        data["trials"] = args.trials
    try:
        config = ExperimentConfig.from_dict(data)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        record = run(config)
        if getattr(args, "figure_data", False):
            emit_figure_data(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(record.summary["metrics"], sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
