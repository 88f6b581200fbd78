"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import re
import sys
from pathlib import Path

from .acquisition import METHODS, MODES
from .bench import CSV_HEADER, ConfigError, SweepSpec, diff_patterns, run_single, run_sweep
from .imaging import load_image, save_image
from .patterns import frequency_schedule, schedule_csv

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

_ANGLE = re.compile(r"^\s*([0-9.]*)\s*\*?\s*pi\s*(?:/\s*([0-9.]+))?\s*$")


def parse_angle(text: str) -> float:
    """Radians from ``"1.5708"``, ``"pi/2"``, ``"3pi/2"`` or ``"0.5*pi"``."""
    m = _ANGLE.match(text.lower())
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfsi", description="Fourier single-pixel imaging simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one acquisition and reconstruction")
    p.add_argument("--object", required=True, help="8-bit PGM object image")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--mode", default="grayscale", choices=MODES)
    p.add_argument("--budget", required=True, type=int, help="number of displayed patterns")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--background", type=float, default=0.0, help="constant flux added to each reading")
    p.add_argument("--out", help="write the reconstruction to this PGM")

    p = sub.add_parser("sweep", help="run a method x mode x budget x sigma x seed grid")
    p.add_argument("--spec", help="key=value config file")
    p.add_argument("--object")
    p.add_argument("--methods", action="append", help="repeatable; comma lists allowed")
    p.add_argument("--modes", action="append")
    p.add_argument("--budgets", action="append")
    p.add_argument("--sigmas", action="append")
    p.add_argument("--seeds", action="append")
    p.add_argument("--output-dir")
    p.add_argument("--background", type=float)
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("diff-patterns", help="complement-of-dither vs dither-of-pi-shift")
    p.add_argument("--fx-num", type=int, default=1, help="fx = fx_num / size")
    p.add_argument("--fy-num", type=int, default=126, help="fy = fy_num / size")
    p.add_argument("--theta", type=parse_angle, default=math.pi / 2, help="radians, or e.g. pi/2")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--out", help="directory for the five PGM panels")

    p = sub.add_parser("schedule", help="dump the frequency schedule as CSV")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int)
    p.add_argument("--order", default="radial", choices=("radial", "raster"))
    p.add_argument("--out", help="CSV path (default stdout)")
    return parser


def _joined(values):
    return ",".join(values) if values else None


def _cmd_simulate(args) -> int:
    obj = load_image(args.object)
    recon, row = run_single(obj, args.method, args.mode, args.budget, args.sigma, args.seed, args.background)
    if args.out:
        save_image(recon, args.out)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerow(row.csv_fields())
    return EXIT_OK


def _cmd_sweep(args) -> int:
    overrides = dict(
        object_path=args.object, methods=_joined(args.methods), modes=_joined(args.modes),
        budgets=_joined(args.budgets), sigmas=_joined(args.sigmas), seeds=_joined(args.seeds),
        output_dir=args.output_dir, background_flux=args.background, jobs=args.jobs,
    )
    if args.spec:
        spec = SweepSpec.from_file(args.spec, **overrides)
    else:
        spec = SweepSpec.from_text("", **overrides)
    rows = run_sweep(spec)
    print(f"{len(rows)} cells computed, results in {Path(spec.output_dir) / 'results.csv'}")
    return EXIT_OK


def _cmd_diff(args) -> int:
    if args.size < 1:
        raise ConfigError(f"size: must be a positive integer, got {args.size}")
    report = diff_patterns(args.fx_num / args.size, args.fy_num / args.size, args.theta, args.size, args.out)
    print(f"differing pixels: {report.differing_pixels} / {report.total_pixels}")
    for f in report.files:
        print(f"wrote {f}")
    return EXIT_OK


def _cmd_schedule(args) -> int:
    text = schedule_csv(frequency_schedule(args.width, args.height or args.width, args.order))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "diff-patterns": _cmd_diff,
    "schedule": _cmd_schedule,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        # PGM decode problems are input errors too
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        # downstream closed the pipe (e.g. `| head`); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
