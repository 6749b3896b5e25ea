"""irs-plot: render an experiment CSV into a figure."""

import argparse
import logging
import sys

from .figure import FigureSpec, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="irs-plot",
        description="Render simulation CSVs into comparison figures")
    parser.add_argument("--spec", default=None,
                        help="JSON file with FigureSpec fields")
    parser.add_argument("--csv", default=None, help="input CSV path")
    parser.add_argument("--out", default=None, help="output PNG/SVG path")
    parser.add_argument("--x", default="sweep_value")
    parser.add_argument("--y", default="metric")
    parser.add_argument("--group-by", default="scheme")
    parser.add_argument("--median", action="store_true",
                        help="aggregate trials by median instead of mean")
    parser.add_argument("--dbm", action="store_true",
                        help="convert the y axis from watts to dBm")
    parser.add_argument("--x-label", default=None)
    parser.add_argument("--y-label", default=None)
    parser.add_argument("--title", default=None)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def spec_from_args(args):
    if args.spec is not None:
        return FigureSpec.from_file(args.spec)
    if args.csv is None or args.out is None:
        raise SystemExit("either --spec or both --csv and --out are required")
    return FigureSpec(csv_path=args.csv, out_path=args.out, x=args.x,
                      y=args.y, group_by=args.group_by,
                      aggregate="median" if args.median else "mean",
                      dbm_axis=args.dbm, x_label=args.x_label,
                      y_label=args.y_label, title=args.title)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    spec = spec_from_args(args)
    series = render(spec)
    print("wrote %s (%d series)" % (spec.out_path, len(series)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
