#!/usr/bin/env python3
"""
pykannan - cyclic Kannan-Pata certification and fixed-point toolkit
Command-line entry point
"""

import argparse
import logging
import sys
import os

# Add the src directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli.commands import CERTIFY_CONDITIONS, EXIT_ERROR, CommandRunner
from core.settings import TOOL_VERSION


def build_parser() -> argparse.ArgumentParser:
    """Every subcommand takes the global flags after its name"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-i", "--input", help="instance file (JSON)")
    common.add_argument("-o", "--output", help="also write the RunReport to this file")
    common.add_argument("--tol", type=float, help="absolute tolerance override")
    common.add_argument("--grid", type=int, help="uniform ε-grid size (default 101)")
    common.add_argument("--seed", type=int, help="generator seed")
    common.add_argument("--max-iter", type=int, help="Picard step limit (default n + 1)")
    common.add_argument("--json", action="store_true", help="print the RunReport JSON to stdout")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress to stderr (-vv for debug)")

    parser = argparse.ArgumentParser(prog="pykannan",
                                     description="Certify and solve cyclic Kannan-Pata instances")
    parser.add_argument("--version", action="version", version=f"pykannan {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", parents=[common], help="check metric and cyclic structure")
    validate.add_argument("path", nargs="?", help="instance file (same as --input)")

    certify = sub.add_parser("certify", parents=[common], help="certify a contractive condition")
    certify.add_argument("path", nargs="?", help="instance file (same as --input)")
    certify.add_argument("--condition", required=True, choices=CERTIFY_CONDITIONS)

    solve = sub.add_parser("solve", parents=[common], help="find fixed points by Picard iteration")
    solve.add_argument("path", nargs="?", help="instance file (same as --input)")

    generate = sub.add_parser("generate", parents=[common], help="generate random instances")
    generate.add_argument("--config", help="generator config file (JSON)")
    generate.add_argument("--out", default=".", help="output directory")
    generate.add_argument("--n", type=int, dest="n_points")
    generate.add_argument("--m", type=int, dest="m_sets")
    generate.add_argument("--method", choices=("euclidean_embed", "random_repair"))
    generate.add_argument("--dim", type=int, dest="embed_dim")
    generate.add_argument("--overlap", type=float, dest="overlap_fraction")
    generate.add_argument("--map-mode", choices=("uniform", "sink"), dest="map_mode")
    generate.add_argument("--sink-prob", type=float, dest="sink_probability")
    generate.add_argument("--search-separating", action="store_true")
    generate.add_argument("--budget", type=int, default=1000)
    return parser


def configure_logging(verbosity: int):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    """Main application entry point"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; --help/--version exit 0
        return int(e.code or 0)
    configure_logging(args.verbose)

    runner = CommandRunner(tol=args.tol, grid_points=args.grid)
    if args.command == "generate":
        overrides = {
            "n_points": args.n_points,
            "m_sets": args.m_sets,
            "method": args.method,
            "embed_dim": args.embed_dim,
            "seed": args.seed,
            "overlap_fraction": args.overlap_fraction,
            "map_mode": args.map_mode,
            "sink_probability": args.sink_probability,
        }
        code, report = runner.generate(args.out, args.config, overrides,
                                       args.search_separating, args.budget)
    else:
        input_path = args.path or args.input
        if input_path is None:
            parser.print_usage(sys.stderr)
            print(f"pykannan {args.command}: an instance file is required", file=sys.stderr)
            return EXIT_ERROR
        if args.command == "validate":
            code, report = runner.validate(input_path)
        elif args.command == "certify":
            code, report = runner.certify(input_path, args.condition)
        else:
            code, report = runner.solve(input_path, args.max_iter)

    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as f:
                f.write(report.to_json())
        except OSError as e:
            print(f"✗ Cannot write report: {e}", file=sys.stderr)
            return EXIT_ERROR

    if args.json:
        sys.stdout.write(report.to_json())
    else:
        for line in runner.console:
            print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
