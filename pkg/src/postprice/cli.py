"""Command-line entry point: ``postprice {solve,price-table,simulate,experiment,check}``."""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import valuations
from .analytics import k_star
from .checks import perturbed_strategy, run_checks
from .discounting import make_discount
from .experiments import (EXPERIMENT_IDS, default_spec, fields_for, rows_to_csv,
                          rows_to_json, run_experiment)
from .mechanisms import (ConstructionError, MarketParams, build_benchmark_iv,
                         build_esoes_ss, build_mc_general, build_mc_lin, build_mpc,
                         competitive_ratio_mc, eq_t0_residual, mpc_from_nsub, t0_upper_bound)
from .numerics import NumericsError
from .simulator import monte_carlo

DEFAULT_SEED = 20240601
SIM_FIELDS = ("mechanism", "lambda", "T", "h", "discount", "distribution", "n_runs", "seed",
              "mean_revenue", "normalized_mean", "std_error", "sell_rate")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("POSTPRICE_SEED")
    return int(env) if env else DEFAULT_SEED


def _emit(args, rows, fields, config):
    if args.format == "json":
        text = rows_to_json(rows, fields, config)
    else:
        text = rows_to_csv(rows, fields, config)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params(args) -> MarketParams:
    return MarketParams(args.lam, args.T, args.h)


def _mc(params, discount):
    if discount.kind == "linear":
        return build_mc_lin(params)
    return build_mc_general(params, discount)


def _strategy(args, params, discount):
    mech = args.mechanism
    if mech == "benchmark":
        return build_benchmark_iv(params, discount, args.v if args.v is not None else 1.0)
    if mech == "mc":
        return _mc(params, discount)
    if mech == "mc_general":
        return build_mc_general(params, discount)
    if mech == "mpc":
        t0 = args.t0 if args.t0 is not None else _mc(params, discount).t0
        if args.delta is not None:
            return build_mpc(params, discount, args.delta, t0)
        return mpc_from_nsub(params, discount, args.nsub, t0)
    if mech == "esoes_ss":
        return build_esoes_ss(params, args.delta or 2.0, discount)
    raise ConstructionError(f"unknown mechanism {mech!r}")


def _base_config(args, **extra) -> dict:
    cfg = {"subcommand": args.command}
    for key in ("lam", "T", "h", "discount", "mechanism", "nsub", "delta", "v", "t0",
                "dist", "n_runs", "epsilon"):
        if hasattr(args, key):
            cfg["lambda" if key == "lam" else key] = getattr(args, key)
    cfg.update(extra)
    return cfg


# --- subcommands -------------------------------------------------------------

def cmd_solve(args) -> int:
    params = _params(args)
    discount = make_discount(args.discount, params.T)
    s = _mc(params, discount)
    meta = s.meta
    ks = k_star(params, discount)
    row = {"t0": meta.t0, "k": meta.k, "a": meta.a, "k_star": ks,
           "rho": 1.0 if meta.t0 == 0 else competitive_ratio_mc(meta, params),
           "t0_upper_bound": t0_upper_bound(params) if params.h > 1 else 0.0}
    fields = ["t0", "k", "a", "k_star", "rho", "t0_upper_bound"]
    if discount.kind == "linear" and meta.t0 > 0:
        row["eq_t0_residual"] = eq_t0_residual(meta.t0, params)
        fields.append("eq_t0_residual")
    _emit(args, [row], tuple(fields), _base_config(args))
    return 0


def cmd_price_table(args) -> int:
    params = _params(args)
    discount = make_discount(args.discount, params.T)
    s = _strategy(args, params, discount)
    if not s.time_indexed:
        raise ConstructionError("price-table needs a time-indexed mechanism")
    t = np.linspace(0.0, params.T, args.grid)
    prices = np.asarray(s.price_at(t), dtype=float)
    rows = [{"t": float(a), "price": float(b)} for a, b in zip(t, prices)]
    _emit(args, rows, ("t", "price"), _base_config(args, grid=args.grid, meta=s.describe()))
    return 0


def _distribution(args, h):
    if args.dist == "point":
        return valuations.point(args.v if args.v is not None else 1.0, h)
    if args.dist == "uniform":
        return valuations.uniform(h)
    return valuations.truncated_normal(h)


def cmd_simulate(args) -> int:
    params = _params(args)
    discount = make_discount(args.discount, params.T)
    s = _strategy(args, params, discount)
    dist = _distribution(args, params.h)
    seed = _seed(args)
    rep = monte_carlo(s, params, dist, discount, args.n_runs, seed, threads=args.threads,
                      keep_runs=args.runs_out is not None)
    if args.runs_out:
        rep.dump_runs(args.runs_out)
    row = {"mechanism": s.kind, "lambda": params.lam, "T": params.T, "h": params.h,
           "discount": discount.kind, "distribution": dist.kind, **rep.to_dict()}
    _emit(args, [row], SIM_FIELDS, _base_config(args, seed=seed, meta=s.describe()))
    return 0


def cmd_experiment(args) -> int:
    spec = default_spec(args.id, full=args.full, seed=_seed(args), n_runs=args.n_runs,
                        h=args.h, threads=args.threads)
    rows = run_experiment(spec)
    _emit(args, rows, fields_for(spec.id), {"subcommand": "experiment", **spec.to_config()})
    return 0


def cmd_check(args) -> int:
    extra = [perturbed_strategy()] if args.perturb else []
    results = run_checks(extra)
    lines = [r.line() for r in results]
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} invariants passed")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 1 if n_fail else 0


# --- parser ------------------------------------------------------------------

def _positive(x):
    v = float(x)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {x}")
    return v


def _seed_arg(x):
    v = int(x)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=_seed_arg, default=None,
                        help="master seed (falls back to $POSTPRICE_SEED)")
    common.add_argument("--threads", type=int, default=1)

    market = argparse.ArgumentParser(add_help=False)
    market.add_argument("--lambda", dest="lam", type=_positive, required=True)
    market.add_argument("--T", type=_positive, required=True)
    market.add_argument("--h", type=float, required=True)
    market.add_argument("--discount", choices=("linear", "constant_one"), default="linear")

    mech = argparse.ArgumentParser(add_help=False)
    mech.add_argument("--mechanism", default="mc",
                      choices=("benchmark", "mc", "mc_general", "mpc", "esoes_ss"))
    mech.add_argument("--nsub", type=int, default=4)
    mech.add_argument("--delta", type=float, default=None)
    mech.add_argument("--t0", type=float, default=None, help="switch time for mpc")
    mech.add_argument("--v", type=float, default=None,
                      help="valuation for benchmark / point distribution")
    mech.add_argument("--epsilon", type=float, default=None)

    p = argparse.ArgumentParser(prog="postprice", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", parents=[common, market], help="construct M_C and report t0, k, rho")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("price-table", parents=[common, market, mech], help="dump (t, price)")
    sp.add_argument("--grid", type=int, default=201)
    sp.set_defaults(func=cmd_price_table)

    sp = sub.add_parser("simulate", parents=[common, market, mech], help="Monte Carlo revenue")
    sp.add_argument("--dist", choices=("point", "uniform", "truncated_normal"),
                    default="uniform")
    sp.add_argument("--n-runs", dest="n_runs", type=int, default=1000)
    sp.add_argument("--runs-out", default=None, help="per-run CSV dump")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("experiment", parents=[common], help="run result1..result4")
    sp.add_argument("id", choices=EXPERIMENT_IDS)
    sp.add_argument("--full", action="store_true", help="use the full lambda 1..20, T {10,20,50,100} grid")
    sp.add_argument("--n-runs", dest="n_runs", type=int, default=None)
    sp.add_argument("--h", type=float, default=None)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("check", parents=[common], help="run the invariant suite")
    sp.add_argument("--perturb", action="store_true",
                    help="add a non-monotone price to demonstrate a failing check")
    sp.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConstructionError, NumericsError, ValueError) as exc:
        print(f"postprice: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
