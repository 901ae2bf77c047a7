"""CLI: spsfigures render --figure ID --csv PATH --out PATH [--raster]."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURES, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spsfigures", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a result CSV")
    p.add_argument("--figure", required=True, help=f"one of: {', '.join(sorted(FIGURES))}")
    p.add_argument("--csv", required=True, help="input CSV from the workbench harness")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--raster", action="store_true", help="write PNG instead of SVG")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = render(args.figure, args.csv, args.out, raster=args.raster)
    except (RenderError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
