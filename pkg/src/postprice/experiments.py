"""Parameter sweeps behind the four empirical results.

Every (experiment, lambda, T, h) cell draws its traces from a seed derived by
hashing those coordinates with the master seed, so one cell can be rerun on
its own and reproduce exactly. Mechanisms within a cell share traces.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

from . import valuations
from .analytics import half_step_grid, loss_indices, revenue_curve
from .discounting import make_discount
from .mechanisms import (MarketParams, build_esoes_ss, build_mc_general, build_mc_lin,
                         mpc_from_nsub)
from .simulator import monte_carlo_many

EXPERIMENT_IDS = ("result1", "result2", "result3", "result4")
DESK_LAMBDAS = (1, 5, 10, 15, 20)
DESK_TS = (10, 50)
FULL_LAMBDAS = tuple(range(1, 21))
FULL_TS = (10, 20, 50, 100)
NSUB_DEFAULT = (2, 4, 13, 232)
DEFAULT_SEED = 20240601

CSV_FIELDS = ("experiment_id", "lambda", "T", "h", "mechanism", "nsub", "n_runs", "seed",
              "mean_revenue", "normalized_mean", "std_error")
RESULT4_FIELDS = CSV_FIELDS + ("beats_mc",)
LOSS_FIELDS = ("experiment_id", "lambda", "T", "h", "n_valuations",
               "loss_esoes_vs_mc", "argmax_v_esoes_loss",
               "loss_mc_vs_esoes", "argmax_v_mc_loss",
               "raw_loss_esoes_vs_mc", "raw_loss_mc_vs_esoes")

_DISCOUNT = {"result1": "constant_one", "result2": "constant_one",
             "result3": "constant_one", "result4": "linear"}


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    lam_grid: tuple = DESK_LAMBDAS
    T_grid: tuple = DESK_TS
    h: float = 10.0
    n_runs: int = 1000
    nsub_list: tuple = NSUB_DEFAULT
    seed: int = DEFAULT_SEED
    discount_kind: Optional[str] = None
    esoes_delta: float = 2.0
    threads: int = 1

    def __post_init__(self):
        if self.id not in EXPERIMENT_IDS:
            raise ExperimentError(f"unknown experiment id {self.id!r}")
        if self.discount_kind is None:
            object.__setattr__(self, "discount_kind", _DISCOUNT[self.id])
        elif self.discount_kind != _DISCOUNT[self.id]:
            raise ExperimentError(
                f"{self.id} runs with discount {_DISCOUNT[self.id]!r}, got {self.discount_kind!r}")
        for name in ("lam_grid", "T_grid", "nsub_list"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.lam_grid or any(not (x > 0 and math.isfinite(x)) for x in self.lam_grid):
            raise ExperimentError("lambda grid must hold positive finite values")
        if not self.T_grid or any(not (x > 0 and math.isfinite(x)) for x in self.T_grid):
            raise ExperimentError("T grid must hold positive finite values")
        if not self.h > 1:
            raise ExperimentError("experiments need h > 1")
        if self.n_runs < 1 or any(n < 1 for n in self.nsub_list):
            raise ExperimentError("n_runs and every nsub must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ExperimentError("seed must be an unsigned 64-bit integer")

    def to_config(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        return d


def default_spec(exp_id: str, full: bool = False, **overrides) -> ExperimentSpec:
    base = dict(id=exp_id)
    if full:
        base.update(lam_grid=FULL_LAMBDAS, T_grid=FULL_TS)
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentSpec(**base)


def cell_seed(seed: int, exp_id: str, lam: float, T: float, h: float) -> int:
    key = json.dumps([int(seed), exp_id, float(lam), float(T), float(h)]).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _mechanisms(spec: ExperimentSpec, params: MarketParams, with_esoes: bool):
    discount = make_discount(spec.discount_kind, params.T)
    if spec.discount_kind == "linear":
        mc = build_mc_lin(params)
    else:
        mc = build_mc_general(params, discount)
    out = [("M_C", None, mc)]
    for n in spec.nsub_list:
        out.append(("M_PC", n, mpc_from_nsub(params, discount, n, mc.meta.t0)))
    if with_esoes:
        out.append(("ESoES-SS", None, build_esoes_ss(params, spec.esoes_delta, discount)))
    return discount, out


def _distribution(spec: ExperimentSpec):
    if spec.id == "result3":
        return valuations.truncated_normal(spec.h)
    return valuations.uniform(spec.h)


def run_cell(spec: ExperimentSpec, lam: float, T: float, threads: int = 1) -> list:
    """Simulated rows for one (lambda, T) cell of result1/3/4."""
    params = MarketParams(lam, T, spec.h)
    discount, mechs = _mechanisms(spec, params, with_esoes=spec.id != "result4")
    seed = cell_seed(spec.seed, spec.id, lam, T, spec.h)
    reports = monte_carlo_many([m[2] for m in mechs], params, _distribution(spec), discount,
                               spec.n_runs, seed, threads=threads)
    rows = []
    for (name, nsub, _), rep in zip(mechs, reports):
        rows.append({"experiment_id": spec.id, "lambda": lam, "T": T, "h": spec.h,
                     "mechanism": name, "nsub": nsub, "n_runs": spec.n_runs, "seed": seed,
                     "mean_revenue": rep.mean_revenue,
                     "normalized_mean": rep.normalized_mean,
                     "std_error": rep.std_error})
    return rows


def _grid_rows(spec: ExperimentSpec, fn) -> list:
    cells = [(lam, T) for T in spec.T_grid for lam in spec.lam_grid]
    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as ex:
            parts = list(ex.map(lambda c: fn(spec, *c), cells))
    else:
        parts = [fn(spec, *c) for c in cells]
    rows = [r for part in parts for r in part]
    return sorted(rows, key=_sort_key)


_MECH_ORDER = {"M_C": 0, "M_PC": 1, "ESoES-SS": 2}


def _sort_key(row):
    return (row["T"], row["lambda"], _MECH_ORDER.get(row.get("mechanism"), 9),
            row.get("nsub") or 0)


def run_result1(spec: ExperimentSpec) -> list:
    if spec.id != "result1":
        raise ExperimentError("run_result1 needs a result1 spec")
    return _grid_rows(spec, run_cell)


def run_result3(spec: ExperimentSpec) -> list:
    if spec.id != "result3":
        raise ExperimentError("run_result3 needs a result3 spec")
    return _grid_rows(spec, run_cell)


def run_result4(spec: ExperimentSpec) -> list:
    """Linear discount; flags M_PC variants beating M_C by more than 2 SE."""
    if spec.id != "result4":
        raise ExperimentError("run_result4 needs a result4 spec")
    rows = _grid_rows(spec, run_cell)
    mc = {(r["lambda"], r["T"]): r for r in rows if r["mechanism"] == "M_C"}
    for r in rows:
        base = mc[(r["lambda"], r["T"])]
        se = math.hypot(r["std_error"], base["std_error"])
        r["beats_mc"] = r["mechanism"] != "M_C" and \
            r["mean_revenue"] - base["mean_revenue"] > 2 * se
    return rows


def loss_cell(spec: ExperimentSpec, lam: float, T: float) -> list:
    params = MarketParams(lam, T, spec.h)
    discount = make_discount(spec.discount_kind, T)
    mc = build_mc_general(params, discount)
    es = build_esoes_ss(params, spec.esoes_delta, discount)
    grid = half_step_grid(spec.h)
    li = loss_indices(revenue_curve(mc, params, discount, grid),
                      revenue_curve(es, params, discount, grid), spec.h)
    return [{"experiment_id": spec.id, "lambda": lam, "T": T, "h": spec.h,
             "n_valuations": len(grid),
             "loss_esoes_vs_mc": li.max_loss_b_vs_a, "argmax_v_esoes_loss": li.argmax_v_b_vs_a,
             "loss_mc_vs_esoes": li.max_loss_a_vs_b, "argmax_v_mc_loss": li.argmax_v_a_vs_b,
             "raw_loss_esoes_vs_mc": li.max_loss_b_vs_a * spec.h,
             "raw_loss_mc_vs_esoes": li.max_loss_a_vs_b * spec.h}]


def run_result2(spec: ExperimentSpec) -> list:
    """Exact IV loss indices between M_C and ESoES-SS, no sampling noise."""
    if spec.id != "result2":
        raise ExperimentError("run_result2 needs a result2 spec")
    rows = _grid_rows(spec, loss_cell)
    return sorted(rows, key=lambda r: (r["T"], r["lambda"]))


RUNNERS = {"result1": run_result1, "result2": run_result2,
           "result3": run_result3, "result4": run_result4}


def run_experiment(spec: ExperimentSpec) -> list:
    return RUNNERS[spec.id](spec)


def fields_for(exp_id: str) -> tuple:
    if exp_id == "result2":
        return LOSS_FIELDS
    if exp_id == "result4":
        return RESULT4_FIELDS
    return CSV_FIELDS


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def rows_to_csv(rows: list, fields: tuple, config: Optional[dict] = None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write("# " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r.get(f)) for f in fields])
    return buf.getvalue()


def rows_to_json(rows: list, fields: tuple, config: Optional[dict] = None) -> str:
    body = {"config": config, "rows": [{f: r.get(f) for f in fields} for r in rows]}
    return json.dumps(body, sort_keys=True, indent=2) + "\n"
