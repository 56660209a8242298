"""Command-line entry point: ``halfwalk {run,compare,sweep}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..errors import BudgetExceeded, InvalidArgument, InvariantViolation
from .config import ConfigError, load_config
from .runner import cmd_compare, cmd_run, cmd_sweep

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halfwalk", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="key = value config file or a manifest.json")
    common.add_argument("--threads", type=int, default=1, help="worker cap; outputs do not depend on it")
    common.add_argument("--seed", type=int, default=None, help="override the config seed (unsigned 64-bit)")

    run = sub.add_parser("run", parents=[common], help="evolve one configuration and write CSV/JSON artifacts")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--svg", action="store_true", help="also write sigma.svg and gcd.svg")

    compare = sub.add_parser("compare", parents=[common], help="ensemble modes vs the exact channel")
    compare.add_argument("--out", default=None, help="write compare.json here instead of stdout")

    sweep = sub.add_parser("sweep", parents=[common], help="one run per p in p_list, summarized in sweep.csv")
    sweep.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.replace(seed=args.seed)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.command == "run":
            manifest = cmd_run(config, args.out, threads=args.threads, svg=args.svg)
            json.dump(manifest["summary"], sys.stdout, indent=2)
            sys.stdout.write("\n")
        elif args.command == "compare":
            doc = cmd_compare(config, args.out, threads=args.threads)
            if args.out is None:
                json.dump(doc, sys.stdout, indent=2)
                sys.stdout.write("\n")
        else:
            cmd_sweep(config, args.out, threads=args.threads)
    except (ConfigError, InvalidArgument) as exc:
        print(f"halfwalk: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"halfwalk: refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InvariantViolation as exc:
        print(f"halfwalk: numerical invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
