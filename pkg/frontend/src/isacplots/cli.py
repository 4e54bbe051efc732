"""Command line front end: plot --kind <...> --in <csv> --out <img>."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, NoDataError, SchemaError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="isac-plot", description="render experiment CSVs as figures"
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="input_csv", required=True, help="input CSV path")
    parser.add_argument("--out", dest="output_image", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        render(FigureSpec(args.input_csv, args.kind, args.output_image))
    except (SchemaError, NoDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
