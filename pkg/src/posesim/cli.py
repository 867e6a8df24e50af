"""Command-line interface.

Exit codes: 0 success, 2 schema/validation error, 3 simulation divergence
(report still written), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .config import load_config
from .errors import SchemaError, SimulationDiverged

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posesim",
        description="Physical plausibility evaluation of 3D human pose "
                    "sequences via humanoid simulation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("evaluate", "full pipeline: optimize, simulate, report"),
        ("metrics", "kinematic metrics only (FS, GP, MPJPE family)"),
        ("simulate", "rollout tracking the reference, no optimization"),
        ("validate", "schema-check pose/model/config files"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--threads", type=int, default=None,
                       help="override worker thread count")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _overrides(args) -> dict:
    ov = {}
    if args.seed is not None:
        ov["seed"] = args.seed
    if args.threads is not None:
        ov["threads"] = args.threads
    if args.out is not None:
        ov["out_dir"] = args.out
    return ov


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config, _overrides(args))
        if args.command == "validate":
            config.validate_paths()
            for line in pipeline.validate_inputs(config):
                print(line)
            return EXIT_OK
        if args.command == "metrics":
            results = pipeline.run_metrics_only(config)
        elif args.command == "simulate":
            results = pipeline.run_simulate(config)
        else:
            results = pipeline.run_evaluate(config)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SimulationDiverged as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    code = EXIT_OK
    for r in results:
        extras = []
        if r.report.cd_mm is not None:
            extras.append(f"CD {r.report.cd_mm:.1f} mm")
        if r.report.psd is not None:
            extras.append(f"PSD_{r.report.num_frames} {r.report.psd}")
        extras.append(f"FS {r.report.footskate_pct:.1f}%")
        extras.append(f"GP {r.report.ground_penetration_mm:.2f} mm")
        if "all_windows_diverged" in r.report.low_confidence_flags:
            code = EXIT_DIVERGED
            extras.append("ALL WINDOWS DIVERGED")
        print(f"{r.name}: " + ", ".join(extras) + f" -> {r.out_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
