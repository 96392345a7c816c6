"""Empirical cost of GIBBON acquisition queries.

A query at ``(n, B)`` is the value of one B-batch given n observations, as the
inner loop computes it: a pending batch of ``B - 1`` points is fixed and a
block of candidates is scored against it.  The per-query time is the block's
wall-clock time (scorer set-up included) divided by the block size, which
amortises interpreter overhead so the arithmetic dominates.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .acquisition import AcquisitionContext, GibbonScorer
from .exceptions import InputValidationError
from .gp import Dataset, Kernel, condition
from .maxvalue import MaxValueSamples

AXES = ("n", "B")
MIN_TRIAL_SECONDS = 0.05
MAX_REPEATS = 1 << 16


@dataclass(frozen=True)
class ProbePoint:
    axis: str
    value: int
    median_s: float
    trials: tuple
    repeats: int

    @property
    def cv(self) -> float:
        t = np.asarray(self.trials)
        return float(np.std(t, ddof=1) / np.mean(t)) if t.size > 1 else 0.0


@dataclass(frozen=True)
class ScalingReport:
    axis: str
    points: tuple
    slope: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["axis", "value", "median_s", "slope"])
        for p in self.points:
            w.writerow([self.axis, p.value, repr(p.median_s), repr(self.slope)])
        return buf.getvalue()


def _query_setup(n: int, B: int, dim: int, block: int, seed: int):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, dim))
    y = np.sin(3.0 * x).sum(axis=1) + 0.1 * rng.standard_normal(n)
    kernel = Kernel("matern52", 1.0, np.full(dim, 0.3))
    post = condition(Dataset(x, y), kernel, noise_variance=1e-2)
    top = float(np.max(y))
    ctx = AcquisitionContext(post, MaxValueSamples(top + np.linspace(0.2, 1.0, 5), 0, "fixed"))
    ctx = ctx.with_pending(rng.uniform(size=(B - 1, dim)), 0) if B > 1 else ctx
    return ctx, rng.uniform(size=(block, dim))


def query_time(n: int, B: int, *, dim: int = 4, block: int = 512, repeats: int = 1, seed: int = 0) -> float:
    """Seconds per GIBBON query at (n, B), averaged over ``repeats`` blocks."""
    ctx, cand = _query_setup(n, B, dim, block, seed)
    start = time.perf_counter()
    for _ in range(repeats):
        GibbonScorer(ctx).score(cand, 0)
    return (time.perf_counter() - start) / (repeats * block)


def _calibrate(n, B, dim, block, seed) -> int:
    repeats = 1
    while repeats < MAX_REPEATS:
        if query_time(n, B, dim=dim, block=block, repeats=repeats, seed=seed) * repeats * block >= MIN_TRIAL_SECONDS:
            break
        repeats *= 2
    return repeats


def loglog_slope(values, times) -> float:
    return float(np.polyfit(np.log(values), np.log(times), 1)[0])


def scaling_probe(axis: str, values, trials: int = 5, *, fixed: int | None = None, dim: int = 4,
                  block: int = 512, seed: int = 0) -> ScalingReport:
    """Median query time along ``axis`` ("n" or "B") plus the fitted log-log slope.

    The other size is held at ``fixed`` (B = 1 on the n axis, n = 100 on the
    B axis by default).  Each trial repeats the query block until it lasts at
    least ``MIN_TRIAL_SECONDS`` so timer resolution never dominates.
    """
    if axis not in AXES:
        raise InputValidationError(f"axis must be one of {AXES}")
    values = [int(v) for v in values]
    if len(values) < 4 or any(b <= a for a, b in zip(values, values[1:])) or values[0] < 1:
        raise InputValidationError("need at least 4 strictly increasing positive values")
    if trials < 1:
        raise InputValidationError("trials must be at least 1")
    if fixed is None:
        fixed = 1 if axis == "n" else 100
    points = []
    for v in values:
        n, B = (v, fixed) if axis == "n" else (fixed, v)
        query_time(n, B, dim=dim, block=block, seed=seed)          # warm-up
        reps = _calibrate(n, B, dim, block, seed)
        ts = tuple(query_time(n, B, dim=dim, block=block, repeats=reps, seed=seed) for _ in range(trials))
        points.append(ProbePoint(axis, v, float(np.median(ts)), ts, reps))
    slope = loglog_slope(values, [p.median_s for p in points])
    return ScalingReport(axis, tuple(points), slope)
