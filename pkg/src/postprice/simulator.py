"""Seeded Monte Carlo of the posted-price market.

Run ``r`` under master seed ``s`` draws from its own Philox stream keyed by
``s`` with counter block ``r``, so a run's outcome never depends on which
worker executed it or on how runs were chunked. Several strategies can be
evaluated on the same traces (common random numbers).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .discounting import DiscountFunction
from .mechanisms import MarketParams, PricingStrategy
from .valuations import ValuationDistribution

CHUNK = 4096
SEED_MASK = (1 << 64) - 1


def run_stream(seed: int, run_index: int) -> np.random.Generator:
    """Independent generator for one run, derived from (seed, run_index)."""
    if not 0 <= seed <= SEED_MASK:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, run_index, 0]))


@dataclass(frozen=True)
class ArrivalTrace:
    times: np.ndarray
    valuations: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.valuations):
            raise ValueError("times and valuations differ in length")

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class RunOutcome:
    sold: bool
    sale_time: Optional[float] = None
    sale_price: Optional[float] = None
    buyer_index: Optional[int] = None

    @property
    def revenue(self) -> float:
        return self.sale_price if self.sold else 0.0


@dataclass
class McReport:
    n_runs: int
    mean_revenue: float
    std_error: float
    sell_rate: float
    normalized_mean: float
    seed: int
    per_run_revenues: Optional[np.ndarray] = None
    per_run_sale_times: Optional[np.ndarray] = None
    per_run_buyers: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        return {"n_runs": self.n_runs, "mean_revenue": self.mean_revenue,
                "std_error": self.std_error, "sell_rate": self.sell_rate,
                "normalized_mean": self.normalized_mean, "seed": self.seed}

    def dump_runs(self, path):
        if self.per_run_revenues is None:
            raise ValueError("per-run data was not kept; pass keep_runs=True")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["run_index", "revenue", "sale_time", "buyer_index"])
            for r, (rev, st, b) in enumerate(zip(self.per_run_revenues, self.per_run_sale_times,
                                                 self.per_run_buyers)):
                sold = b > 0
                w.writerow([r, repr(float(rev)), repr(float(st)) if sold else "",
                            int(b) if sold else ""])


def sample_arrivals(rng: np.random.Generator, params: MarketParams,
                    dist: ValuationDistribution) -> ArrivalTrace:
    """Exponential(lam) gaps until the horizon, then one valuation per arrival."""
    lam, T = params.lam, params.T
    mean = lam * T
    batch = int(mean + 6.0 * math.sqrt(mean) + 16)
    times = np.cumsum(rng.exponential(1.0 / lam, size=batch))
    while times[-1] <= T:
        more = np.cumsum(rng.exponential(1.0 / lam, size=batch)) + times[-1]
        times = np.concatenate([times, more])
    times = times[: np.searchsorted(times, T, side="right")]
    vals = np.asarray(dist.sample(rng, len(times)), dtype=float)
    return ArrivalTrace(times, vals)


def _prices(strategy: PricingStrategy, times, index):
    if strategy.time_indexed:
        return np.asarray(strategy.price_at(times), dtype=float)
    return np.asarray(strategy.price_for_arrival(index, times), dtype=float)


def run_once(strategy: PricingStrategy, trace: ArrivalTrace,
             discount: DiscountFunction) -> RunOutcome:
    """First arrival with ``V * xi(W) >= price`` buys at the posted price."""
    for i, (w, v) in enumerate(zip(trace.times, trace.valuations), start=1):
        w = float(w)
        if strategy.time_indexed:
            price = float(strategy.price_at(w))
        else:
            price = float(strategy.price_for_arrival(i, w))
        if v * float(discount.eval(w)) >= price:
            return RunOutcome(True, w, price, i)
    return RunOutcome(False)


@dataclass
class TraceBlock:
    """Traces for runs ``start .. start + n - 1`` packed into padded arrays."""
    start: int
    times: np.ndarray        # (n, width), padded with T
    valuations: np.ndarray   # (n, width), padded with 0
    counts: np.ndarray       # (n,)

    @property
    def mask(self):
        return np.arange(self.times.shape[1])[None, :] < self.counts[:, None]


def trace_block(params, dist, seed: int, start: int, stop: int) -> TraceBlock:
    traces = [sample_arrivals(run_stream(seed, r), params, dist) for r in range(start, stop)]
    counts = np.array([len(tr) for tr in traces], dtype=int)
    width = max(1, int(counts.max(initial=0)))
    times = np.full((len(traces), width), float(params.T))
    vals = np.zeros((len(traces), width))
    for j, tr in enumerate(traces):
        times[j, : len(tr)] = tr.times
        vals[j, : len(tr)] = tr.valuations
    return TraceBlock(start, times, vals, counts)


def evaluate_block(strategy: PricingStrategy, block: TraceBlock, discount: DiscountFunction):
    """Vectorised ``run_once`` over a block: (revenue, sale_time, buyer_index)."""
    n, width = block.times.shape
    index = np.broadcast_to(np.arange(1, width + 1), (n, width))
    prices = _prices(strategy, block.times, index)
    disc = block.valuations * np.asarray(discount.eval(block.times), dtype=float)
    buys = (disc >= prices) & block.mask
    sold = buys.any(axis=1)
    first = np.argmax(buys, axis=1)
    rows = np.arange(n)
    revenue = np.where(sold, prices[rows, first], 0.0)
    sale_time = np.where(sold, block.times[rows, first], np.nan)
    buyer = np.where(sold, first + 1, 0)
    return revenue, sale_time, buyer


def _chunks(n_runs, chunk):
    return [(s, min(s + chunk, n_runs)) for s in range(0, n_runs, chunk)]


def _report(rev, times, buyers, h, seed, keep_runs) -> McReport:
    n = len(rev)
    mean = math.fsum(rev) / n
    var = math.fsum((rev - mean) ** 2) / (n - 1) if n > 1 else 0.0
    rep = McReport(n, mean, math.sqrt(var / n), float(np.count_nonzero(buyers)) / n,
                   mean / h, seed)
    if keep_runs:
        rep.per_run_revenues, rep.per_run_sale_times, rep.per_run_buyers = rev, times, buyers
    return rep


def monte_carlo_many(strategies: Sequence[PricingStrategy], params: MarketParams,
                     dist: ValuationDistribution, discount: DiscountFunction,
                     n_runs: int, seed: int, threads: int = 1, keep_runs: bool = False,
                     chunk: int = CHUNK) -> list:
    """Evaluate several strategies on the same simulated traces."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")

    def job(span):
        block = trace_block(params, dist, seed, *span)
        return [evaluate_block(s, block, discount) for s in strategies]

    spans = _chunks(n_runs, chunk)
    if threads == 1 or len(spans) == 1:
        parts = [job(sp) for sp in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(job, spans))
    reports = []
    for k in range(len(strategies)):
        rev = np.concatenate([p[k][0] for p in parts])
        times = np.concatenate([p[k][1] for p in parts])
        buyers = np.concatenate([p[k][2] for p in parts])
        reports.append(_report(rev, times, buyers, params.h, seed, keep_runs))
    return reports


def monte_carlo(strategy: PricingStrategy, params: MarketParams, dist: ValuationDistribution,
                discount: DiscountFunction, n_runs: int, seed: int, threads: int = 1,
                keep_runs: bool = False, chunk: int = CHUNK) -> McReport:
    return monte_carlo_many([strategy], params, dist, discount, n_runs, seed, threads,
                            keep_runs, chunk)[0]


def max_valuations(params, dist, discount, n_runs: int, seed: int, chunk: int = CHUNK):
    """Per-trace maxima of V and of V * xi(W); empty traces give 0."""
    raw, disc = [], []
    for start, stop in _chunks(n_runs, chunk):
        b = trace_block(params, dist, seed, start, stop)
        raw.append(np.max(np.where(b.mask, b.valuations, 0.0), axis=1))
        d = b.valuations * np.asarray(discount.eval(b.times), dtype=float)
        disc.append(np.max(np.where(b.mask, d, 0.0), axis=1))
    return np.concatenate(raw), np.concatenate(disc)
