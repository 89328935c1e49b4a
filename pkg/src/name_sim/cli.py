"""Command line interface.

name-sim run --config FILE [--scenario NAME] [--out DIR] [--threads N]
name-sim compare --files A.csv B.csv [...] [--columns H,C] [--out report.json]

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import SCENARIOS, parse_config
from .csvio import atomic_write_text, compare_trajectories
from .errors import ConfigError, GridMismatchError, NameSimError
from .scenarios import run_scenario


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="name-sim",
        description="Driven-oscillator open-system simulator and benchmark runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a config file")
    run.add_argument("--config", required=True, help="TOML configuration file")
    run.add_argument("--scenario", choices=SCENARIOS, default=None,
                     help="override the config file's scenario")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--threads", type=int, default=1,
                     help="parallel (solver, parameter) jobs; capped by NAME_SIM_THREADS")

    cmp_ = sub.add_parser("compare", help="compare trajectory CSV files")
    cmp_.add_argument("--files", nargs="+", required=True)
    cmp_.add_argument("--columns", default="H",
                      help="comma separated list of columns (default H)")
    cmp_.add_argument("--out", default=None, help="write the JSON report here")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
        try:
            cfg = parse_config(text, scenario=args.scenario)
        except ConfigError as exc:
            for line in exc.violations:
                print(f"config error: {line}", file=sys.stderr)
            return 2
        try:
            written = run_scenario(cfg, out_dir=args.out, threads=args.threads)
        except ConfigError as exc:
            for line in exc.violations:
                print(f"config error: {line}", file=sys.stderr)
            return 2
        except NameSimError as exc:
            print(f"solver error: {exc}", file=sys.stderr)
            return 3
        for path in written:
            print(path)
        return 0

    if args.command == "compare":
        columns = [c.strip() for c in args.columns.split(",") if c.strip()]
        try:
            report = compare_trajectories(args.files, columns=columns)
        except (GridMismatchError, OSError, ValueError, KeyError) as exc:
            print(f"compare error: {exc}", file=sys.stderr)
            return 2
        text = json.dumps(report, indent=2) + "\n"
        if args.out:
            atomic_write_text(args.out, text)
            print(args.out)
        else:
            print(text, end="")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
