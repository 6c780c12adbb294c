"""Command line entry point: simulate, verify, constants, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import cli_io


def _add_run_args(p):
    p.add_argument("config", type=Path, help="run configuration (JSON)")
    p.add_argument("--output", type=Path, default=None,
                   help=f"output directory (overrides the config and ${cli_io.OUTPUT_ENV})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vpcharge", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a configured run and write its time series")
    _add_run_args(p)
    p = sub.add_parser("verify", help="run the inequality checks on a stored (or fresh) run")
    _add_run_args(p)
    p = sub.add_parser("report", help="write SVG plots of a stored run")
    _add_run_args(p)
    p = sub.add_parser("constants", help="print the parameter table for (m, m0, T)")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--m0", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--K0", type=float, default=100.0)
    p.add_argument("--f0-l1", type=float, default=0.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "constants":
            doc = cli_io.constants_document(args.m, args.m0, args.T, args.K0, args.f0_l1, args.lam)
            print(json.dumps(doc, indent=1, sort_keys=True))
            return 0
        cfg = cli_io.parse_config(args.config)
        if args.command == "simulate":
            res = cli_io.simulate(cfg, args.output)
            print(f"wrote {len(res.rows)} rows to {res.directory / 'timeseries.csv'} "
                  f"({res.wall_time:.1f} s)")
            return 0
        if args.command == "verify":
            doc = cli_io.verify(cfg, args.output)
            for c in doc["checks"]:
                status = "skip" if c["details"].get("skipped") else ("pass" if c["passed"] else "FAIL")
                print(f"{status:4s} {c['check']:18s} worst_ratio={c['worst_ratio']}")
            return 0 if doc["passed"] else 1
        if args.command == "report":
            for p in cli_io.report(cfg, args.output):
                print(p)
            return 0
    except (cli_io.ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
