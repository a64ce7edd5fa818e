"""Command-line entry point: ``rpphoton simulate|sample|compare|skellam|ingest-check``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .pipeline.commands import (
    IntegrationError,
    cmd_compare,
    cmd_ingest_check,
    cmd_sample,
    cmd_simulate,
    cmd_skellam,
)
from .pipeline.compare import UnderdeterminedError
from .pipeline.config import ConfigError, load_config

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_IO = 4
EXIT_UNDERDETERMINED = 5


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpphoton", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_opts(p):
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--seed", type=_seed)
        p.add_argument("--out", type=str, help="output directory")
        p.add_argument("--models", type=str, help="comma-separated: jh,kominis,haberkorn")

    p = sub.add_parser("simulate", help="integrate the master equations and write expected counts")
    run_opts(p)

    p = sub.add_parser("sample", help="Poisson-sample photon counts from the expected counts")
    run_opts(p)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("compare", help="score an observed count trace against predictions")
    p.add_argument("predicted", type=Path, help="bins.csv written by simulate")
    p.add_argument("observed", type=Path, help="counts CSV with columns t_bin,n (optionally trial)")
    p.add_argument("--trial", type=int, help="trial to use when the counts file holds several")
    p.add_argument("--out", type=Path, help="write the JSON report here")

    p = sub.add_parser("skellam", help="print the Skellam pmf f(k; N1, N2)")
    p.add_argument("k", type=int)
    p.add_argument("N1", type=float)
    p.add_argument("N2", type=float)

    p = sub.add_parser("ingest-check", help="validate a count trace file")
    p.add_argument("path", type=Path)
    p.add_argument("--trial", type=int)
    return parser


def _config(args):
    config = load_config(args.config)
    models = args.models.split(",") if args.models else None
    trials = getattr(args, "trials", None)
    return config.with_overrides(seed=args.seed, out=args.out, models=models, trials=trials)


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "simulate":
            for path in cmd_simulate(_config(args)):
                print(path)
        elif args.command == "sample":
            if args.trials is not None and args.trials < 1:
                raise ConfigError("--trials must be at least 1")
            for path in cmd_sample(_config(args)):
                print(path)
        elif args.command == "compare":
            report = cmd_compare(args.predicted, args.observed, trial=args.trial, report=args.out)
            print(report.to_text())
        elif args.command == "skellam":
            print(cmd_skellam(args.k, args.N1, args.N2))
        elif args.command == "ingest-check":
            print(cmd_ingest_check(args.path, trial=args.trial))
    except UnderdeterminedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNDERDETERMINED
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrationError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
