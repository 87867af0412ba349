"""Command line interface.

Exit codes: 0 success, 1 configuration error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

from . import validation
from .sweep import (
    FIGURES, ConfigError, bound_rows, figure, load_config, points_csv, run_bound, run_sweep, write_manifest,
)

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    points = run_sweep(config)
    text = points_csv(p.row() for p in points)
    _emit(text, args.out)
    if args.out:
        out = Path(args.out)
        write_manifest(
            out.with_suffix(".manifest.json"),
            {config.curve_name: {"kind": "sim", **config.to_mapping()}},
            {out.name: hashlib.sha256(text.encode()).hexdigest()},
            {config.curve_name: [p.snr_db for p in points if p.capped]},
        )
    return EXIT_OK


def _cmd_bound(args) -> int:
    config = load_config(args.config)
    text = points_csv(bound_rows(config.curve_name + "-bound", run_bound(config)))
    _emit(text, args.out)
    return EXIT_OK


def _cmd_figure(args) -> int:
    overrides = {}
    if args.quick:
        overrides.update(max_frames=20_000, calibration_frames=10_000)
    if args.max_frames is not None:
        overrides["max_frames"] = args.max_frames
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    paths = figure(args.name, args.out, **overrides)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    budget = validation.FULL if args.budget == "full" else validation.QUICK
    failed = False
    for crit in (validation.CRITERIA if not args.only else [validation.CRITERIA[i - 1] for i in args.only]):
        res = crit(budget)
        print(res.line(), flush=True)
        failed |= not res.passed
    return EXIT_VALIDATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marcsim", description="Two-user relay channel BER simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="Monte Carlo BER sweep")
    p.add_argument("--config", required=True, help="YAML config file")
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bound", help="analytic upper bound on the config's SNR grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("figure", help="run a figure preset")
    p.add_argument("name", choices=sorted(FIGURES))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--quick", action="store_true", help="cap every point at 20000 frames")
    p.add_argument("--max-frames", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_figure)

    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("--budget", choices=("quick", "full"), default="quick")
    p.add_argument("--only", type=int, nargs="+", choices=range(1, len(validation.CRITERIA) + 1),
                   metavar="N", help="criterion numbers to run")
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
