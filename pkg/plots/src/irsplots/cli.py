"""The `plot` command: render sweep or convergence figures from CSVs."""

import argparse
import sys

from .render import FigureSpec, infer_sweep_kind, render_convergence, render_sweep


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="plot", description="render figures from irsec CSV outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="secrecy rate vs sweep value per strategy")
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   help="results.csv (repeatable, first is used)")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("sweep-ni", "sweep-na"),
                   help="x-axis variable; inferred from the CSV when omitted")
    p.add_argument("--agg", choices=("mean", "median"), default="mean")

    p = sub.add_parser("convergence", help="objective/residual vs iteration")
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   help="trace CSV (repeat for several settings)")
    p.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    fmt = "png" if args.out.lower().endswith(".png") else "svg"
    if args.command == "sweep":
        kind = args.kind or infer_sweep_kind(args.inputs[0])
        spec = FigureSpec(inputs=args.inputs[:1], kind=kind, output=args.out,
                          image_format=fmt, aggregate=args.agg)
        strategies = render_sweep(spec)
        print(f"wrote {args.out} ({', '.join(strategies)})")
    else:
        spec = FigureSpec(inputs=args.inputs, kind="convergence",
                          output=args.out, image_format=fmt)
        labels = render_convergence(spec)
        print(f"wrote {args.out} ({', '.join(labels)})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
