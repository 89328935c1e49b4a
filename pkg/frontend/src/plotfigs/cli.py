"""Command line entry point: plot-figs --fig fig3 --in a.csv b.csv --out fig3.png"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURES, FigureRequest, RenderError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-figs",
        description="Render name-sim trajectory CSVs into figure files",
    )
    parser.add_argument("--fig", required=True, choices=FIGURES)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="input trajectory CSV files")
    parser.add_argument("--out", required=True, help="output image (png or svg)")
    parser.add_argument("--format", default=None, choices=("png", "svg"),
                        help="override the format implied by --out")
    args = parser.parse_args(argv)
    try:
        path, panels = render(FigureRequest(
            figure=args.fig, inputs=args.inputs, output=args.out,
            format=args.format,
        ))
    except (RenderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{path} ({panels} panels)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
