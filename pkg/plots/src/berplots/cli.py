"""CLI: regenerate comparison figures from sweep CSVs."""
from __future__ import annotations

import argparse
import sys

from .render import KIND_ALIASES, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="berplots", description="figure regeneration from sweep CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a results CSV")
    p.add_argument("--csv", required=True, help="input results CSV")
    p.add_argument("--kind", required=True, choices=sorted(KIND_ALIASES),
                   help="figure kind: 3a/ber-vs-snr, 3b/ber-vs-pdr, "
                        "3c/papr-vs-ber")
    p.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        render(FigureSpec(input_csv=args.csv, kind=args.kind,
                          output_path=args.out))
    except (OSError, SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
