"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure
(partial results are kept on disk).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .agents import AuthError
from .errors import ConfigError, InvalidParameter, NetDebateError, ParseError
from .experiment import FIGURES, analyze, export_plot_data, load_config, run_experiment, synthetic_questions, write_dataset
from .topology import GENERATOR_KINDS, GeneratorParams, generate, serialize_network

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netdebate", description="Multi-agent debate on network topologies.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress and warnings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-net", help="generate a network and write it as an edge list")
    g.add_argument("--kind", choices=GENERATOR_KINDS, required=True)
    g.add_argument("--n", type=int, default=25)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--p", type=float, default=0.2, help="edge probability (gilbert)")
    g.add_argument("--alpha", type=float, default=0.41)
    g.add_argument("--beta", type=float, default=0.54)
    g.add_argument("--gamma", type=float, default=0.05)
    g.add_argument("--label", default="")
    g.add_argument("-o", "--output", type=Path, help="output file (default: stdout)")

    q = sub.add_parser("gen-questions", help="write a synthetic question CSV for offline runs")
    q.add_argument("--n", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("-o", "--output", type=Path, required=True)

    r = sub.add_parser("run", help="run an experiment from a YAML/JSON config")
    r.add_argument("config", type=Path)
    r.add_argument("--resume", action="store_true", help="skip transcripts that already exist")
    r.add_argument("--no-analyze", action="store_true", help="do not compute reports afterwards")

    a = sub.add_parser("analyze", help="compute reports for a run directory")
    a.add_argument("run_dir", type=Path)

    e = sub.add_parser("export", help="write plot-ready CSV for one figure")
    e.add_argument("run_dir", type=Path)
    e.add_argument("figure", choices=FIGURES)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen-net":
            params = GeneratorParams(args.kind, args.n, args.seed, args.p, args.alpha, args.beta, args.gamma, args.label)
            text = serialize_network(generate(params))
            if args.output:
                args.output.write_text(text)
            else:
                sys.stdout.write(text)
        elif args.command == "gen-questions":
            write_dataset(args.output, synthetic_questions(args.n, args.seed))
        elif args.command == "run":
            cfg = load_config(args.config)
            run_dir = run_experiment(cfg, resume=args.resume, analyze_after=not args.no_analyze)
            print(run_dir)
        elif args.command == "analyze":
            summary = analyze(args.run_dir)
            acc = summary["accuracy"]["final"]
            print(f"final accuracy {acc['mean']:.3f} +/- {acc['stderr']:.3f}")
        elif args.command == "export":
            print(export_plot_data(args.run_dir, args.figure))
    except (ConfigError, AuthError, ParseError, InvalidParameter) as exc:
        print(f"netdebate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NetDebateError, OSError) as exc:
        print(f"netdebate: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
