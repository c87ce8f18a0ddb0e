"""Command-line front end: render experiment CSVs to PNG + SVG figures."""

import argparse
import json
import sys

from . import __version__
from .render import KINDS, PlotJob, render


def cmd_render(args):
    job = PlotJob(kind=args.kind, inputs=tuple(args.inputs), output=args.output,
                  logx=args.logx, logy=args.logy, normalize=args.normalize,
                  title=args.title)
    for path in render(job):
        print(path)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cwlab-plots",
        description="Render figures from the experiment runner's CSV files.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one figure (writes PNG and SVG)")
    p.add_argument("kind", choices=KINDS, help="figure kind")
    p.add_argument("inputs", nargs="+", metavar="input.csv",
                   help="input CSV file(s); rows are concatenated")
    p.add_argument("-o", "--output", required=True,
                   help="output image path (.png or .svg; both get written)")
    p.add_argument("--logx", action=argparse.BooleanOptionalAction, default=None,
                   help="force a log (or linear) x axis")
    p.add_argument("--logy", action=argparse.BooleanOptionalAction, default=None,
                   help="force a log (or linear) y axis")
    p.add_argument("--no-normalize", dest="normalize", action="store_false",
                   help="keep raw step counts on time axes")
    p.add_argument("--title", default=None, help="figure title")
    p.set_defaults(func=cmd_render, normalize=True)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        code = getattr(exc, "exit_code", 3)
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return int(code)


if __name__ == "__main__":
    sys.exit(main())
