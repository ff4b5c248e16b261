"""plot_results: render comparison panels from one or more run summaries."""

from __future__ import annotations

import argparse
import sys

from .render import PANELS, AlignmentError, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot_results",
        description="Render frequency / power / deviation panels from "
                    "simulator metrics JSON files (1-4 runs overlaid).")
    parser.add_argument("metrics", nargs="+",
                        help="metrics JSON files, one per run")
    parser.add_argument("--panels", default="a,b,c",
                        help="comma list: a/frequencies, b/power, c/deviation")
    parser.add_argument("--labels", default=None,
                        help="comma list of run labels (defaults to control mode)")
    parser.add_argument("--out", default="figure.png",
                        help="output image path (.png or .svg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    panels = tuple(p.strip() for p in args.panels.split(",") if p.strip())
    labels = tuple(s.strip() for s in args.labels.split(",")) if args.labels else ()
    try:
        spec = PlotSpec(metrics_paths=tuple(args.metrics), panels=panels,
                        out_path=args.out, labels=labels)
        out = render(spec)
    except (SchemaError, AlignmentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    print(f"wrote {out} ({', '.join(spec.panels)})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
