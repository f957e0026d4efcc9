"""Run the four experiments and write one CSV per id into an output directory.

    python3 scripts/run_experiments.py --outdir results [--full] [--threads 4]
"""

import argparse
import time
from pathlib import Path

from postprice.experiments import (EXPERIMENT_IDS, default_spec, fields_for, rows_to_csv,
                                   run_experiment)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--ids", nargs="+", default=list(EXPERIMENT_IDS), choices=EXPERIMENT_IDS)
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--n-runs", dest="n_runs", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for exp_id in args.ids:
        spec = default_spec(exp_id, full=args.full, seed=args.seed, n_runs=args.n_runs,
                            threads=args.threads)
        t = time.perf_counter()
        rows = run_experiment(spec)
        path = out / f"{exp_id}.csv"
        path.write_text(rows_to_csv(rows, fields_for(exp_id), spec.to_config()),
                        encoding="utf-8")
        print(f"{exp_id}: {len(rows)} rows -> {path} ({time.perf_counter() - t:.1f}s)")


if __name__ == "__main__":
    main()
