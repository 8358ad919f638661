"""Command-line entry point for the experiment runners.

Usage:
    wavegp scale-recovery --out results/ --reps 30
    wavegp mismatch --out results/ --fractions 0.1,0.4,0.7
    wavegp classify --config run.json --out results/
    wavegp density --out results/
    wavegp impulse --out results/ --scales 2

Each subcommand builds an ExperimentConfig (from --config JSON when given,
overridden by explicit flags), runs the protocol, and writes report.json plus
one CSV per plot series into --out. Exit status: 0 on success, 1 on a
configuration error, 2 on a runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .experiments import (
    ExperimentConfig,
    run_classification,
    run_density,
    run_impulse,
    run_morlet_mismatch,
    run_scale_recovery,
    write_report,
)

MODE_ALIASES = {
    "exact": "exact",
    "uls": "uls",
    "wls": "wls",
    "cheb": "cheb",
}

RUNNERS = {
    "scale-recovery": run_scale_recovery,
    "mismatch": run_morlet_mismatch,
    "classify": run_classification,
    "density": run_density,
    "impulse": run_impulse,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavegp",
        description="Run wavelet-GP experiment protocols and write plot-ready reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} protocol")
        p.add_argument("--config", metavar="PATH", help="JSON file of ExperimentConfig fields")
        p.add_argument("--out", metavar="DIR", help="output directory for report.json and CSVs")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--mode", choices=sorted(MODE_ALIASES), help="covariance backend")
        p.add_argument("--degree", type=int, help="polynomial degree for approximate modes")
        p.add_argument("--fractions", metavar="CSV", help="training fractions, e.g. 0.1,0.3,0.7")
        p.add_argument("--reps", type=int, help="number of repetitions")
        p.add_argument("--restarts", type=int, help="optimizer restarts per fit")
        p.add_argument("--identity-features", action="store_true", default=None,
                       help="ablate node features (identity feature kernel)")
        p.add_argument("--scales", type=int, help="number of band-pass scales to fit")
        p.add_argument("--dataset", metavar="DIR", help="dataset bundle directory")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_json_file(args.config)
    else:
        config = ExperimentConfig()
    config = replace(config, kind=args.command)
    overrides = {}
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ValueError("--seed must fit in an unsigned 64-bit integer")
        overrides["seed"] = args.seed
    if args.mode is not None:
        overrides["mode"] = MODE_ALIASES[args.mode]
    if args.degree is not None:
        overrides["degree"] = args.degree
    if args.fractions is not None:
        overrides["fractions"] = tuple(float(x) for x in args.fractions.split(","))
    if args.reps is not None:
        overrides["repetitions"] = args.reps
    if args.restarts is not None:
        overrides["restarts"] = args.restarts
    if args.identity_features is not None:
        overrides["identity_features"] = args.identity_features
    if args.scales is not None:
        if args.scales < 1:
            raise ValueError("--scales must be positive")
        overrides["n_scales"] = args.scales
    if args.dataset is not None:
        overrides["dataset_path"] = args.dataset
    if args.out is not None:
        overrides["out_dir"] = args.out
    return replace(config, **overrides)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except (ValueError, FileNotFoundError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    if config.out_dir is None:
        print("configuration error: an output directory is required (--out DIR)",
              file=sys.stderr)
        return 1
    runner = RUNNERS[args.command]
    try:
        report = runner(config)
        path = write_report(report, config.out_dir)
    except (ValueError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure: report it, distinct exit code
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    if report.failures:
        print(f"note: {report.failures} repetition(s) failed and were excluded")
    return 0


if __name__ == "__main__":
    sys.exit(main())
