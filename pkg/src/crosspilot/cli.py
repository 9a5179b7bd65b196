"""Command-line interface for the Monte Carlo sweeps and the selftest."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import harness

SWEEPS = {
    "ber-vs-snr": harness.run_ber_vs_snr,
    "ber-vs-pdr": harness.run_ber_vs_pdr,
    "papr-vs-ber": harness.run_papr_vs_ber,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crosspilot",
        description="DoA-aided OTFS link simulator with superimposed "
                    "cross-pilot channel estimation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SWEEPS:
        p = sub.add_parser(name, help=f"run the {name} sweep and write a CSV")
        p.add_argument("--config", help="YAML experiment config "
                                        "(defaults to the built-in scenario)")
        p.add_argument("--seed", type=int, help="override the master RNG seed")
        p.add_argument("--frames", type=int, help="override frames per sweep point")
        p.add_argument("--out", default=f"{name}.csv", help="output CSV path")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes (results are identical "
                            "for any value)")
    sub.add_parser("selftest", help="run the built-in invariant suites")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return 0 if harness.selftest() else 1

    try:
        exp = (harness.load_config(args.config) if args.config
               else harness.default_config())
        if args.seed is not None:
            exp = replace(exp, seed=args.seed)
        if args.frames is not None:
            exp = replace(exp, frames=args.frames)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    rows = SWEEPS[args.command](exp, workers=args.workers)
    harness.write_csv(rows, exp, args.command, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
