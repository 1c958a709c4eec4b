"""Command-line entry point: plotview <kind> [inputs...] --out FILE."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotInputError, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotview",
        description="Render experiment CSVs (loss curves, contours, tau ablation)",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument(
        "inputs",
        nargs="+",
        help="input CSVs; globs allowed; for contours each argument is one "
        "panel (comma-separate files to overlay)",
    )
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default="")
    parser.add_argument("--logy", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        kind=args.kind,
        inputs=list(args.inputs),
        output=args.out,
        title=args.title,
        logy=args.logy,
    )
    try:
        render(spec)
    except (PlotInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
