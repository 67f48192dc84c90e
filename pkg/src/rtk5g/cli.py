"""Command line entry point: ``simulate``, ``availability`` and ``almanac``."""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import almanac as alm
from .availability import format_table
from .config import load_config
from .errors import AlmanacParseError, ConfigError, DomainError, ScenarioError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _xyz(text):
    try:
        v = [float(s) for s in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z got {text!r}") from None
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated values, got {text!r}")
    return np.array(v)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rtk5g", description="5G-aided RTK GNSS positioning simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the Monte Carlo experiment described by a config file")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", help="CSV destination (default: stdout)")
    sim.add_argument("--seed", type=_u64, help="override the config seed")
    sim.add_argument("--trials", type=int, help="override the config trial count")
    sim.add_argument("--jobs", type=int, default=1, help="worker processes")
    sim.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")

    sub.add_parser("availability", help="print the observation/unknown count grid")

    a = sub.add_parser("almanac", help="satellite ECEF positions and elevations at a GPS time")
    a.add_argument("--almanac", help="Yuma almanac file (default: bundled nominal almanac)")
    a.add_argument("--at", type=float, required=True, help="GPS seconds of week")
    a.add_argument("--receiver", type=_xyz, required=True, help="receiver ECEF x,y,z in meters")
    a.add_argument("--mask", type=float, default=None, help="only list satellites above this elevation (deg)")
    return ap


def _simulate(args) -> int:
    from .harness import emit_csv, run_monte_carlo

    try:
        cfg = load_config(args.config, seed=args.seed, trials=args.trials)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    progress = None
    if args.verbose:
        def progress(row):
            print(f"N={row.N} L={row.L} sigma={row.sigma_m:g} rmse_fixed={row.rmse_fixed_m:.4g} "
                  f"success={row.success_rate:.4f} converged={row.converged_fraction:.4f}", file=sys.stderr)
    try:
        rows = run_monte_carlo(cfg, jobs=args.jobs, progress=progress)
    except (AlmanacParseError, OSError) as exc:
        print(f"almanac error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        with open(args.out, "w", newline="") as fh:
            emit_csv(rows, fh)
    else:
        emit_csv(rows, sys.stdout)
    return EXIT_OK


def _almanac(args) -> int:
    try:
        entries = alm.parse_yuma(alm.default_almanac_text()) if args.almanac is None else alm.load_yuma(args.almanac)
        prns, pos = alm.propagate_all(entries, args.at)
    except (AlmanacParseError, DomainError, OSError) as exc:
        print(f"almanac error: {exc}", file=sys.stderr)
        return EXIT_DATA
    el = np.degrees(alm.elevations(pos, args.receiver))
    print("prn,x,y,z,elevation_deg")
    for prn, p, e in zip(prns, pos, el):
        if args.mask is not None and not e > args.mask:
            continue
        print(f"{prn},{p[0]:.3f},{p[1]:.3f},{p[2]:.3f},{e:.4f}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "availability":
        print(format_table())
        return EXIT_OK
    if args.command == "almanac":
        if not all(math.isfinite(v) for v in args.receiver):
            print("receiver coordinates must be finite", file=sys.stderr)
            return EXIT_CONFIG
        return _almanac(args)
    return _simulate(args)


if __name__ == "__main__":
    sys.exit(main())
