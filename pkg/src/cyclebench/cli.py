"""Command line interface.

Subcommands: validate, sweep, cyclic, compare, plot.  Exit codes:
0 success, 1 validation or usage error, 2 partial failure (some runs
failed but the bundle was still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bundle import compare, load_bundle, run_experiment, write_bundle
from .config import ConfigError, parse_config
from .plots import render_plots
from .tradeoff import CurveError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARTIAL = 2


def _add_run_args(sub):
    sub.add_argument("--config", required=True, help="TOML experiment config")
    sub.add_argument("--out", required=True, help="bundle output directory")
    sub.add_argument("--seeds", help="comma-separated seed list overriding the config")
    sub.add_argument("--jobs", type=int, default=1, help="max concurrent training runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclebench",
        description="Accuracy-vs-time tradeoff curves from cyclic learning rate runs",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    v = subs.add_parser("validate", help="parse a config and echo it with defaults")
    v.add_argument("--config", required=True)

    _add_run_args(subs.add_parser("sweep", help="standard tradeoff curve from a duration sweep"))
    _add_run_args(subs.add_parser("cyclic", help="cyclic tradeoff curve from single runs"))

    c = subs.add_parser("compare", help="compare bundles against a baseline label")
    c.add_argument("bundles", nargs="+", help="bundle directories")
    c.add_argument("--baseline", required=True, help="label of the baseline bundles")
    c.add_argument("--out", required=True, help="report output directory")

    p = subs.add_parser("plot", help="render plots for a bundle or comparison report")
    p.add_argument("target", help="bundle directory or report.json")
    p.add_argument("--out", required=True, help="plot output directory")
    return parser


def _override_seeds(config, seeds_arg):
    if not seeds_arg:
        return config
    seeds = tuple(int(s) for s in seeds_arg.split(","))
    from dataclasses import replace

    return replace(config, seeds=seeds)


def _run(args, expected_modes) -> int:
    try:
        config = parse_config(args.config, out_dir=args.out)
        config = _override_seeds(config, args.seeds)
        if config.mode not in expected_modes:
            raise ConfigError(
                f"config mode {config.mode!r} does not match this subcommand "
                f"(expected one of {expected_modes})"
            )
        bundle = run_experiment(config, jobs=args.jobs)
        write_bundle(bundle, args.out)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    for key, log in bundle.logs.items():
        print(f"  run {key}: {log.epochs} epochs, final val_acc {log.val_acc[-1]:.4f}")
    for failure in bundle.failures:
        print(f"  FAILED {failure['run']}: {failure['error']}", file=sys.stderr)
    print(f"bundle written to {args.out} ({len(bundle.curves)} curves)")
    return EXIT_PARTIAL if bundle.partial else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "validate":
        try:
            config = parse_config(args.config)
        except (ConfigError, OSError) as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_INVALID
        doc = config.to_dict()
        doc["fingerprint"] = config.fingerprint()
        print(json.dumps(doc, indent=2, sort_keys=True))
        return EXIT_OK

    if args.command == "sweep":
        return _run(args, ("sweep",))
    if args.command == "cyclic":
        return _run(args, ("cyclic", "constant"))

    if args.command == "compare":
        try:
            bundles = [load_bundle(p) for p in args.bundles]
            report = compare(bundles, args.baseline)
        except (ConfigError, CurveError, OSError, ValueError) as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_INVALID
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
        render_plots(report, out)
        for label, gap in report.gaps.items():
            print(f"  {label}: mean cyclic-standard gap {gap:+.4%}")
        for label, wc in report.wall_clock.items():
            predicted = f"{wc.predicted_ratio:.4f}" if wc.predicted_ratio else "n/a"
            print(
                f"  {label}: wall clock sweep/cyclic {wc.measured_ratio:.3f} "
                f"(predicted {predicted})"
            )
        for warning in report.warnings:
            print(f"  warning: {warning}", file=sys.stderr)
        print(f"report written to {out}")
        return EXIT_OK

    if args.command == "plot":
        try:
            target_path = Path(args.target)
            if target_path.is_dir():
                target = load_bundle(target_path)
            else:
                raise ConfigError(
                    "plot expects a bundle directory; render reports via `compare --out`"
                )
            paths = render_plots(target, args.out)
        except (ConfigError, CurveError, OSError, ValueError) as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_INVALID
        for path in paths:
            print(f"  wrote {path}")
        return EXIT_OK

    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
