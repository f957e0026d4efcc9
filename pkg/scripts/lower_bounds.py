"""Tabulate the RV lower bounds against simulated ratios for uniform valuations.

    python3 scripts/lower_bounds.py --h 2.8 10 --lamT 25 100 --n-runs 20000
"""

import argparse

from postprice import valuations
from postprice.mechanisms import (MarketParams, build_mc_lin, build_mpc, kappa_tau,
                                  lower_bound_mc, lower_bound_mpc, tightest_bound)
from postprice.simulator import monte_carlo_many


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=float, nargs="+", default=[2.8, 10.0])
    ap.add_argument("--lamT", type=float, nargs="+", default=[25.0, 100.0])
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--n-runs", dest="n_runs", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    print("h,lamT,eps_mc,bound_mc,rho_mc,eps_mpc,bound_mpc,rho_mpc")
    for h in args.h:
        for lamT in args.lamT:
            p = MarketParams(lamT / args.T, args.T, h)
            mc = build_mc_lin(p)
            mpc = build_mpc(p, mc.discount, 2.0, mc.t0)
            b_mc = tightest_bound(lambda e: lower_bound_mc(
                mc.meta, p, e, kappa_tau(mc, p.T ** (1 - e) * p.lam ** (-e))), p)
            b_mpc = tightest_bound(lambda e: lower_bound_mpc(mpc.meta, p, e, mc.discount), p)
            dist = valuations.uniform(h)
            bench = valuations.expected_max_discounted(dist, lamT)
            r_mc, r_mpc = monte_carlo_many([mc, mpc], p, dist, mc.discount, args.n_runs,
                                           args.seed)
            print(f"{h},{lamT},{b_mc.epsilon:.2f},{b_mc.value:.5f},"
                  f"{r_mc.mean_revenue / bench:.5f},{b_mpc.epsilon:.2f},{b_mpc.value:.5f},"
                  f"{r_mpc.mean_revenue / bench:.5f}")


if __name__ == "__main__":
    main()
