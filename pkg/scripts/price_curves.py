"""Dump plot-ready price curves of M_C,lin and M_PC for one market.

    python3 scripts/price_curves.py --lam 10 --T 12 --h 2.8 --nsub 2 4 --out curves.csv
"""

import argparse
import csv

import numpy as np

from postprice.mechanisms import MarketParams, build_mc_lin, mpc_from_nsub


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=10.0)
    ap.add_argument("--T", type=float, default=12.0)
    ap.add_argument("--h", type=float, default=2.8)
    ap.add_argument("--nsub", type=int, nargs="+", default=[2, 4])
    ap.add_argument("--grid", type=int, default=481)
    ap.add_argument("--out", default="price_curves.csv")
    args = ap.parse_args()

    params = MarketParams(args.lam, args.T, args.h)
    mc = build_mc_lin(params)
    curves = {"mc_lin": mc}
    for n in args.nsub:
        curves[f"mpc_nsub{n}"] = mpc_from_nsub(params, mc.discount, n, mc.t0)
    t = np.linspace(0.0, params.T, args.grid)
    cols = {name: s.price_at(t) for name, s in curves.items()}
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *cols])
        for i, ti in enumerate(t):
            w.writerow([repr(float(ti)), *(repr(float(c[i])) for c in cols.values())])
    print(f"t0={mc.t0:.6g} k={mc.meta.k:.6g}; wrote {args.out}")


if __name__ == "__main__":
    main()
