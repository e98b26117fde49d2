"""Command-line entry point.

Exit codes: 0 on success, 2 for configuration errors, 3 when a numerical
contract is violated during a run.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, NumericalContractError
from .experiments import (
    load_config,
    run_adiabatic_experiment,
    run_compile_only,
    run_estimate,
    run_spin_experiment,
)

ADIABATIC_DEFAULTS = {
    "hamiltonian": "adiabatic-toy",
    "n": 2,
    "tau": 5.0,
    "lambda_target": 0.1,
    "initial_state": None,
    "observable": None,
    "M": [1000, 10000],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="urcc", description="Randomized compilation of time-dependent Hamiltonian evolution.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "spin": "URCC vs c-qDRIFT error sweep on the interaction-picture spin chain",
        "adiabatic": "adiabatic state preparation with grouped energy measurement",
        "compile": "sample circuit pairs and count gates without simulating",
        "estimate": "one estimate per method for a Hamiltonian and observable",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--workers", type=int, default=1, help="worker processes (output does not depend on it)")
        p.add_argument("--out", help="output CSV path (stdout when omitted)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        defaults = ADIABATIC_DEFAULTS if args.command == "adiabatic" else None
        cfg = load_config(args.config, args.seed, defaults)
        if args.command == "spin":
            text = run_spin_experiment(cfg, args.out, args.workers)
        elif args.command == "adiabatic":
            text = run_adiabatic_experiment(cfg, args.out, args.workers)
        elif args.command == "compile":
            text, dump = run_compile_only(cfg, args.out)
            if args.out is None:
                sys.stdout.write(dump)
        else:
            text = run_estimate(cfg, args.out, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalContractError as exc:
        print(f"numerical contract violated: {exc}", file=sys.stderr)
        return 3
    if args.out is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
