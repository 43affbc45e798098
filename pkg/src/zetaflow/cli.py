"""Batch command-line front end.

    zetaflow list
    zetaflow run <experiment-id> [--config file.json] [--seed U64] [--out DIR]

Exit status is 0 iff every report row passed.  Thread count is controlled by
the ZETAFLOW_THREADS environment variable only.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import EXPERIMENTS, run_experiment


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zetaflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="enumerate experiments")

    run_p = sub.add_parser("run", help="run one experiment")
    run_p.add_argument("experiment", help="experiment id (see `zetaflow list`)")
    run_p.add_argument("--config", help="JSON config file with an 'options' object")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--out", default=None, help="output directory for CSV/JSON")

    args = parser.parse_args(argv)

    if args.command == "list":
        for name, (fn, defaults) in sorted(EXPERIMENTS.items()):
            doc = (fn.__doc__ or "").strip().splitlines()
            summary = doc[0] if doc else ""
            print(f"{name:24s} {summary}")
            print(f"{'':24s} defaults: {json.dumps(defaults, default=str)}")
        return 0

    options = {}
    seed = args.seed
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
        unknown = set(raw) - {"experiment", "seed", "out_dir", "options"}
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        if raw.get("experiment", args.experiment) != args.experiment:
            parser.error("config experiment id disagrees with the command line")
        options = raw.get("options", {})
        seed = int(raw.get("seed", seed))

    try:
        reports = run_experiment(args.experiment, options, seed, args.out)
    except KeyError as exc:
        parser.error(str(exc))
        return 2
    for r in reports:
        print(r.line())
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
