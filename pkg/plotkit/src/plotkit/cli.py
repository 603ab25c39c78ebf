"""plotkit command line: one subcommand per figure kind."""

from __future__ import annotations

import argparse
import sys

from .data import DataFormatError
from .figures import PlotSpec, plot


def make_parser():
    ap = argparse.ArgumentParser(prog="plotkit",
                                 description="figures from flow trajectory CSVs and snapshots")
    sub = ap.add_subparsers(dest="kind", required=True)

    ts = sub.add_parser("timeseries", help="columns of one or more trajectory CSVs vs t")
    ts.add_argument("--csv", nargs="+", required=True)
    ts.add_argument("--columns", nargs="+", default=["ratio"])
    ts.add_argument("--logx", action="store_true")
    ts.add_argument("--logy", action="store_true")
    ts.add_argument("--out", required=True)
    ts.add_argument("--title", default="")

    bc = sub.add_parser("bound-check", help="quantity vs fitted C t^alpha envelope")
    bc.add_argument("--csv", required=True)
    bc.add_argument("--quantity", default="kappa_max")
    bc.add_argument("--alpha", type=float, default=-1.0)
    bc.add_argument("--out", required=True)
    bc.add_argument("--title", default="")

    ol = sub.add_parser("outlines", help="planar body outlines from snapshots")
    ol.add_argument("--snapshots", nargs="+", required=True)
    ol.add_argument("--raw", action="store_true", help="skip unit-area normalization")
    ol.add_argument("--out", required=True)
    ol.add_argument("--title", default="")
    return ap


def spec_from_args(args) -> PlotSpec:
    if args.kind == "timeseries":
        return PlotSpec("timeseries", list(args.csv), args.out, columns=args.columns,
                        logx=args.logx, logy=args.logy, title=args.title)
    if args.kind == "bound-check":
        return PlotSpec("bound-check", [args.csv], args.out, quantity=args.quantity,
                        alpha=args.alpha, title=args.title)
    return PlotSpec("outlines", list(args.snapshots), args.out,
                    normalize=not args.raw, title=args.title)


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        out = plot(spec_from_args(args))
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
