"""Command line front end: ``otfs-plot --kind ber --in ber.csv --out fig.png``."""

from __future__ import annotations

import argparse
import sys

from otfs_plots.figures import KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otfs-plot",
        description="Render figures from simulation result CSV files",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="in_path", required=True,
                        help="input CSV (schema-tagged harness output)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--xlabel")
    parser.add_argument("--ylabel")
    parser.add_argument("--title")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(csv_path=args.in_path, kind=args.kind,
                      out_path=args.out, xlabel=args.xlabel,
                      ylabel=args.ylabel, title=args.title)
    try:
        out = render(spec)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
