"""Command-line interface.

Subcommands: simulate, diagnose, plan-exponents, scatter, sweep.  The output
directory defaults to the current directory and may be overridden by the
NLSLAB_OUT environment variable or the --out flag (the flag wins).
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config
from .runner import (EXIT_CONFIG, EXIT_NUMERIC, run_diagnose, run_plan,
                     run_scatter, run_simulate, run_sweep)


def _outdir(args) -> str:
    if args.out:
        return args.out
    return os.environ.get("NLSLAB_OUT", ".")


def _add_run_flags(sub):
    sub.add_argument("--config", required=True, help="path to a run config file")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlslab",
        description="Desk-scale NLS/Hartree laboratory: split-step runs, "
                    "Morawetz diagnostics, exponent planning, scattering probes.")
    subs = parser.add_subparsers(dest="command", required=True)

    for name in ("simulate", "diagnose", "scatter"):
        _add_run_flags(subs.add_parser(name))

    sweep = subs.add_parser("sweep")
    _add_run_flags(sweep)
    sweep.add_argument("--count", type=int, default=4,
                       help="number of seed-sweep runs")
    sweep.add_argument("--jobs", type=int, default=1,
                       help="parallel runs")

    plan = subs.add_parser("plan-exponents")
    plan.add_argument("--n", type=int, required=True, help="space dimension")
    plan.add_argument("--p", default=None, help="nonlinearity exponent (rational)")
    plan.add_argument("--sigma-c", default=None,
                      help="critical regularity (rational, instead of --p)")
    plan.add_argument("--sigma", default=None,
                      help="interpolation regularity (rational, optional)")
    plan.add_argument("--kind", choices=("nls", "hartree"), default="nls")
    plan.add_argument("--out", default=None, help="output directory")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    outdir = _outdir(args)

    if args.command == "plan-exponents":
        return run_plan(args.n, args.kind, p=args.p, sigma_c=args.sigma_c,
                        sigma=args.sigma, outdir=outdir)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for ln, msg in exc.errors:
            prefix = f"{args.config}:{ln}: " if ln > 0 else f"{args.config}: "
            print(prefix + msg, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed_override = args.seed

    if args.command == "simulate":
        return run_simulate(cfg, outdir)
    if args.command == "diagnose":
        return run_diagnose(cfg, outdir)
    if args.command == "scatter":
        return run_scatter(cfg, outdir)
    if args.command == "sweep":
        return run_sweep(cfg, outdir, count=args.count, jobs=args.jobs)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
