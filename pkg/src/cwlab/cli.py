"""Command-line front end: one subcommand per experiment kind.

Every run writes one CSV (fixed wide header, LF line endings, 17 significant
digits) plus a ``<output>.json`` sidecar holding the effective spec, the tool
version, and the wall clock.  A ``--config spec.json`` file supplies defaults;
flags given on the command line override it field by field, and the merged
spec is what lands in the sidecar.  Errors print a one-line JSON object to
stderr and exit 2 (bad spec), 3 (numeric/structural failure), or 4 (horizon
exhausted before the event).
"""

import argparse
import json
import sys

from . import __version__
from .errors import SpecError
from .experiments import (
    FIGURES,
    KINDS,
    figure_data,
    run_to_files,
    spec_from_dict,
)


def _int_or_list(text):
    parts = [p for p in text.split(",") if p]
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected int or comma list of ints, got {text!r}")
    return vals[0] if len(vals) == 1 else tuple(vals)


def _float_or_list(text):
    parts = [p for p in text.split(",") if p]
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected float or comma list, got {text!r}")
    return vals[0] if len(vals) == 1 else tuple(vals)


def _float_list(text):
    return tuple(float(p) for p in text.split(",") if p)


def _int_list(text):
    return tuple(int(p) for p in text.split(",") if p)


def _add_common(p):
    p.add_argument("--config", metavar="JSON", default=None,
                   help="spec file supplying defaults; flags override")
    p.add_argument("--n", type=_int_or_list, default=None,
                   help="system size (comma list allowed under sweep)")
    p.add_argument("--beta", type=_float_or_list, default=None,
                   help="inverse temperature (comma list allowed under sweep)")
    p.add_argument("--censored", action=argparse.BooleanOptionalAction, default=None,
                   help="run the censored dynamics (reflect into S >= 0)")
    p.add_argument("--start", default=None,
                   help="bottom | top | all-plus | all-minus | numeric s")
    p.add_argument("--start2", default=None, help="second start (coalesce)")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None,
                   help="max steps / largest exact time to compute")
    p.add_argument("--stride", type=int, default=None,
                   help="record every STRIDE-th step (simulate)")
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, dest="base_seed",
                   help="base seed; replica k uses the stream (seed, k)")
    p.add_argument("--epsilons", type=_float_list, default=None,
                   help="comma list of TV levels (tmix)")
    p.add_argument("--times", type=_int_list, default=None,
                   help="comma list of times (tv-profile grid / two-coord checkpoints)")
    p.add_argument("--threshold", type=float, default=None,
                   help="magnetization level to hit")
    p.add_argument("--kind", default=None, dest="sweep_kind",
                   help="inner kind to run at every sweep point")
    p.add_argument("--jobs", type=int, default=None,
                   help="sweep workers (default: CWLAB_JOBS or 1)")
    p.add_argument("-o", "--output", default=None,
                   help="CSV path (default: <kind>.csv)")


def _build_spec(args):
    data = {}
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise SpecError(f"config {args.config} must hold a JSON object")
        data.update(loaded)
    for name in ("n", "beta", "censored", "start", "start2", "steps", "horizon",
                 "stride", "replicas", "base_seed", "epsilons", "times",
                 "threshold", "sweep_kind", "jobs", "output"):
        val = getattr(args, name)
        if val is not None:
            data[name] = val
    data["kind"] = args.command  # the subcommand names the kind
    if data.get("censored") is None:
        data["censored"] = False
    return spec_from_dict(data)


def cmd_run(args):
    out = run_to_files(_build_spec(args))
    print(out)
    return 0


def cmd_figure_data(args):
    out = figure_data(args.which, out_dir=args.out_dir, base_seed=args.base_seed,
                      offset=args.offset, jobs=args.jobs)
    print(out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cwlab",
        description="Censored and ordinary mean-field Glauber dynamics: "
                    "exact magnetization-chain analysis and spin Monte Carlo.",
    )
    parser.add_argument("--version", action="version", version=f"cwlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    kind_help = {
        "zeta": "positive root of tanh(beta s) = s",
        "kernel-dump": "birth-and-death transition rates on the magnetization lattice",
        "stationary": "exact stationary law of the magnetization chain",
        "tv-profile": "exact total-variation distance to stationarity over time",
        "tmix": "mixing times at the requested TV levels",
        "gap": "spectral gap of the magnetization chain",
        "conductance": "bottleneck ratio over interval cuts",
        "simulate": "n-spin Monte Carlo trajectories with threshold crossings",
        "hitting": "first time the magnetization walk reaches a level",
        "coalesce": "monotone-coupling coalescence time of two censored walks",
        "two-coord": "two-block coordinate counts along a censored pair",
        "oracle-check": "cross-check the lumped chain against 2^n brute force",
        "sweep": "run an inner kind over n x beta grids",
    }
    for kind in KINDS:
        p = sub.add_parser(kind, help=kind_help[kind])
        _add_common(p)
        p.set_defaults(func=cmd_run)

    p = sub.add_parser("figure-data", help="write the CSV behind a named figure")
    p.add_argument("which", choices=FIGURES)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--seed", type=int, default=0, dest="base_seed")
    p.add_argument("--offset", type=float, default=0.1,
                   help="beta offset from 1 for the equilibrium-law figure")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_figure_data)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 -- single choke point for exit codes
        code = getattr(exc, "exit_code", 3)
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return int(code)


if __name__ == "__main__":
    sys.exit(main())
