"""Seeded Monte Carlo over the exact channel physics.

Batches draw from substreams keyed on ``(seed, batch index)`` so the sample
set never depends on how batches are scheduled across workers.
"""
from __future__ import annotations

import enum
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .analytics import SystemParams, sep_kernel
from .channels import fso_sample, rf_sample

CONFIDENCE = 0.99
LOW_COUNT_EVENTS = 100
WORKERS_ENV = "RISFSO_WORKERS"


class Combiner(enum.Enum):
    MIN = "min"
    HARMONIC = "harmonic"


def combine(g1: np.ndarray, g2: np.ndarray, combiner: Combiner) -> np.ndarray:
    if combiner is Combiner.MIN:
        return np.minimum(g1, g2)
    return g1 * g2 / (g1 + g2)


@dataclass(frozen=True)
class SimPlan:
    params: SystemParams
    trials: int
    seed: int
    batch_size: int = 1 << 16
    combiner: Combiner = Combiner.MIN

    def __post_init__(self):
        if self.trials < 1 or self.batch_size < 1:
            raise ValueError("trials and batch_size must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def batches(self) -> list[tuple[int, int]]:
        full, rest = divmod(self.trials, self.batch_size)
        out = [(i, self.batch_size) for i in range(full)]
        if rest:
            out.append((full, rest))
        return out


@dataclass(frozen=True)
class EstimateWithCI:
    estimate: float
    ci_low: float
    ci_high: float
    trials: int
    seconds: float
    low_count: bool = False


def batch_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def draw_e2e(plan: SimPlan, index: int, size: int) -> np.ndarray:
    """End-to-end SNR samples for one batch."""
    rng = batch_rng(plan.seed, index)
    g1 = rf_sample(rng, plan.params.rf, size)
    g2 = fso_sample(rng, plan.params.fso, size)
    return combine(g1, g2, plan.combiner)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _run_batches(plan: SimPlan, reducer, workers: int | None):
    workers = default_workers() if workers is None else max(1, int(workers))
    jobs = plan.batches()
    task = lambda job: reducer(draw_e2e(plan, *job))
    if workers == 1:
        return [task(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map keeps batch order, so the reduction below is order-fixed
        return list(pool.map(task, jobs))


def wilson_interval(successes: int, trials: int, confidence: float = CONFIDENCE):
    z = stats.norm.ppf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def simulate_outage(plan: SimPlan, workers: int | None = None) -> EstimateWithCI:
    """Fraction of trials whose end-to-end SNR is at most ``gamma_out``."""
    t0 = time.perf_counter()
    thr = plan.params.gamma_out
    counts = _run_batches(plan, lambda g: int(np.count_nonzero(g <= thr)), workers)
    hits = sum(counts)
    lo, hi = wilson_interval(hits, plan.trials)
    est = hits / plan.trials
    return EstimateWithCI(
        est, min(lo, est), max(hi, est), plan.trials, time.perf_counter() - t0,
        low_count=hits < LOW_COUNT_EVENTS,
    )


def simulate_sep(plan: SimPlan, workers: int | None = None) -> EstimateWithCI:
    """Sample mean of ``a Q(sqrt(2 b gamma_D))`` with a normal-theory interval."""
    t0 = time.perf_counter()
    a, b = plan.params.modulation.a, plan.params.modulation.b

    def reduce(g):
        e = sep_kernel(g, a, b)
        return math.fsum(e), math.fsum(e * e)

    parts = _run_batches(plan, reduce, workers)
    n = plan.trials
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    half = stats.norm.ppf(0.5 + CONFIDENCE / 2) * math.sqrt(var / n)
    return EstimateWithCI(
        mean, max(0.0, mean - half), mean + half, n, time.perf_counter() - t0,
        low_count=mean * n < LOW_COUNT_EVENTS,
    )


def ks_distance_bound(samples: np.ndarray, cdf, n_eval: int = 20000) -> tuple[float, float]:
    """Bracket the Kolmogorov-Smirnov distance between samples and a CDF.

    The CDF is evaluated at ``n_eval`` order statistics only. Between two
    evaluated points both the empirical and the analytic CDF are monotone,
    which gives a rigorous upper bound on the supremum; the lower bound is
    the largest gap seen at the evaluated points.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    idx = np.unique(np.linspace(0, n - 1, min(n_eval, n)).astype(int))
    # ties share the right-continuous empirical value
    right = np.searchsorted(x, x[idx], side="right") / n
    left = np.searchsorted(x, x[idx], side="left") / n
    F = np.asarray(cdf(x[idx]), dtype=float)
    lower = max(np.max(np.abs(right - F)), np.max(np.abs(F - left)))
    # between evaluated points x_i < x < x_{i+1}:
    #   F_n in [right_i, left_{i+1}], F in [F_i, F_{i+1}]
    gaps_hi = left[1:] - F[:-1]
    gaps_lo = F[1:] - right[:-1]
    upper = max(lower, float(np.max(gaps_hi)), float(np.max(gaps_lo)))
    # outside the evaluated range
    upper = max(upper, float(F[0]), 1.0 - float(F[-1]))
    return float(lower), float(upper)
