"""Inner-loop maximisation: multi-start local search and greedy batch construction."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .acquisition import (
    AcquisitionContext,
    DppExploreScorer,
    GibbonScorer,
    PenalisedScorer,
    gibbon,
    gibbon_modified,
)
from .exceptions import InputValidationError

FD_STEP = 1e-5
MAX_ITER = 200
_BAD = -1e10


@dataclass(frozen=True)
class SearchSpace:
    """A box (continuous) or a finite candidate set, with per-level query costs."""

    bounds: np.ndarray | None = None
    candidates: np.ndarray | None = None
    costs: tuple = (1.0,)

    def __post_init__(self):
        if (self.bounds is None) == (self.candidates is None):
            raise InputValidationError("give exactly one of bounds or candidates")
        if self.bounds is not None:
            b = np.array(self.bounds, dtype=float)
            if b.ndim != 2 or b.shape[1] != 2 or not np.all(b[:, 0] < b[:, 1]):
                raise InputValidationError("bounds must be (d, 2) with lo < hi")
            object.__setattr__(self, "bounds", b)
        else:
            c = np.array(self.candidates, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            if c.shape[0] == 0 or not np.all(np.isfinite(c)):
                raise InputValidationError("candidate set must be nonempty and finite")
            object.__setattr__(self, "candidates", c)
        costs = tuple(float(v) for v in self.costs)
        if not costs or any(not v > 0 for v in costs):
            raise InputValidationError("fidelity costs must be positive")
        object.__setattr__(self, "costs", costs)

    @property
    def is_discrete(self) -> bool:
        return self.candidates is not None

    @property
    def dim(self) -> int:
        return self.bounds.shape[0] if self.bounds is not None else self.candidates.shape[1]

    @property
    def n_levels(self) -> int:
        return len(self.costs)

    @property
    def lower(self) -> np.ndarray:
        return self.bounds[:, 0] if self.bounds is not None else self.candidates.min(0)

    @property
    def upper(self) -> np.ndarray:
        return self.bounds[:, 1] if self.bounds is not None else self.candidates.max(0)

    def sample(self, n: int, rng) -> np.ndarray:
        if self.is_discrete:
            return self.candidates[rng.integers(0, self.candidates.shape[0], n)]
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        return lo + (hi - lo) * rng.uniform(size=(n, self.dim))


@dataclass(frozen=True)
class BatchProposal:
    x: np.ndarray
    s: np.ndarray
    acquisition_value: float
    cost: float
    warning: bool = False
    step_values: tuple = field(default=(), repr=False)

    @property
    def elements(self) -> list:
        return [(xi.copy(), int(si)) for xi, si in zip(self.x, self.s)]

    def __len__(self) -> int:
        return self.x.shape[0]


def _safe(values):
    v = np.asarray(values, dtype=float)
    return np.where(np.isfinite(v), v, _BAD)


def multistart_maximise(objective, space: SearchSpace, restarts: int | None = None, seed=0,
                        *, raw_samples: int | None = None, maxiter: int = MAX_ITER):
    """Maximise a vectorised objective ``f(X) -> values`` over ``space``.

    Discrete spaces are scanned exhaustively (lowest index wins ties).  For a
    box, ``raw_samples`` uniform points are screened and the best ``restarts``
    seed one stacked L-BFGS-B run with central finite-difference gradients.
    Returns ``(x_best, value)``.
    """
    if space.is_discrete:
        vals = _safe(objective(space.candidates))
        i = int(np.argmax(vals))
        return space.candidates[i].copy(), float(vals[i])

    d = space.dim
    restarts = 10 * d if restarts is None else int(restarts)
    if restarts < 1:
        raise InputValidationError("restarts must be at least 1")
    raw_samples = max(restarts, 200 * d if raw_samples is None else int(raw_samples))
    rng = np.random.default_rng(seed)
    lo, span = space.lower, space.upper - space.lower

    def f_unit(u):
        return _safe(objective(lo + span * u))

    raw = rng.uniform(size=(raw_samples, d))
    raw_vals = f_unit(raw)
    order = np.argsort(-raw_vals, kind="stable")[:restarts]
    starts = raw[order]
    k = starts.shape[0]

    def fun(flat):
        u = flat.reshape(k, d)
        probes = [u]
        lows, highs = [], []
        for q in range(d):
            up = u.copy()
            dn = u.copy()
            up[:, q] = np.minimum(u[:, q] + FD_STEP, 1.0)
            dn[:, q] = np.maximum(u[:, q] - FD_STEP, 0.0)
            lows.append(dn)
            highs.append(up)
        vals = f_unit(np.vstack(probes + highs + lows)).reshape(2 * d + 1, k)
        grad = np.empty((k, d))
        for q in range(d):
            width = highs[q][:, q] - lows[q][:, q]
            grad[:, q] = (vals[1 + q] - vals[1 + d + q]) / np.where(width > 0, width, 1.0)
        return -float(np.sum(vals[0])), -grad.ravel()

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = optimize.minimize(
            fun, starts.ravel(), jac=True, method="L-BFGS-B",
            bounds=[(0.0, 1.0)] * (k * d), options={"maxiter": maxiter},
        )
    final = np.clip(res.x.reshape(k, d), 0.0, 1.0)
    cand = np.vstack([final, starts[:1]])
    vals = f_unit(cand)
    i = int(np.argmax(vals))
    return lo + span * cand[i], float(vals[i])


def _pick_seed(seed, index):
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, index])


def greedy_select(make_scorer, ctx: AcquisitionContext, space: SearchSpace, B: int,
                  restarts: int | None = None, seed=0, *, cost_weighted: bool = False,
                  levels=None, raw_samples: int | None = None, final_value=None) -> BatchProposal:
    """Greedy batch construction driven by a scorer factory.

    ``make_scorer(ctx)`` returns an object with ``score(X, s)`` (increment of
    the batch objective for appending X at level s) and ``offset`` (value of
    the pending batch).  Each pick searches every allowed level with the same
    seed; with ``cost_weighted`` the level is chosen by value / batch cost.
    """
    if B < 1:
        raise InputValidationError("batch size must be at least 1")
    if levels is None:
        levels = range(space.n_levels)
    levels = list(levels)
    start_pending = ctx.pending_x.shape[0]
    pending_cost = sum(space.costs[s] for s in ctx.pending_s)
    flagged = False
    steps = []
    for i in range(B):
        scorer = make_scorer(ctx)
        pick_seed = _pick_seed(seed, i)
        best = None
        for s in levels:
            x, v = multistart_maximise(
                lambda X, s=s: scorer.score(X, s), space, restarts, pick_seed, raw_samples=raw_samples
            )
            total = v + scorer.offset
            key = total / (pending_cost + space.costs[s]) if cost_weighted else total
            if best is None or key > best[0]:
                best = (key, x, s, total)
        if best[3] <= _BAD / 2:
            flagged = True
        _, x, s, total = best
        steps.append(total)
        pending_cost += space.costs[s]
        ctx = ctx.with_pending(x[None, :], s)
    xs = ctx.pending_x[start_pending:]
    ss = ctx.pending_s[start_pending:]
    value = final_value(xs, ss) if final_value is not None else steps[-1]
    cost = float(sum(space.costs[s] for s in ss))
    return BatchProposal(xs, ss, float(value), cost, flagged, tuple(steps))


def greedy_batch(ctx: AcquisitionContext, space: SearchSpace, B: int, restarts: int | None = None,
                 seed=0, *, modified: bool = False, **kwargs) -> BatchProposal:
    """Greedy GIBBON batch: element i maximises gibbon({x} + chosen so far)."""
    weight = 0.5 / B**2 if modified else 0.5
    exact = gibbon_modified if modified else gibbon

    return greedy_select(lambda c: GibbonScorer(c, weight), ctx, space, B, restarts, seed,
                         final_value=lambda xs, ss: exact(ctx, xs, ss), **kwargs)


def cost_weighted_select(ctx: AcquisitionContext, space: SearchSpace, B: int,
                         restarts: int | None = None, seed=0, *, modified: bool = False,
                         **kwargs) -> BatchProposal:
    """Greedy GIBBON where each pick maximises batch value over batch cost."""
    weight = 0.5 / B**2 if modified else 0.5
    exact = gibbon_modified if modified else gibbon
    return greedy_select(lambda c: GibbonScorer(c, weight), ctx, space, B, restarts, seed,
                         cost_weighted=True, final_value=lambda xs, ss: exact(ctx, xs, ss), **kwargs)


def local_penalisation_batch(ctx: AcquisitionContext, space: SearchSpace, B: int, base: str,
                             lipschitz: float, g_star: float, restarts: int | None = None,
                             seed=0, **kwargs) -> BatchProposal:
    """Batch of a base acquisition (EI or MES) with soft local penalisers."""
    return greedy_select(lambda c: PenalisedScorer(c, base, lipschitz, g_star), ctx, space, B,
                         restarts, seed, levels=[0], **kwargs)


def dpp_explore_batch(ctx: AcquisitionContext, space: SearchSpace, B: int, restarts: int | None = None,
                      seed=0, **kwargs) -> BatchProposal:
    """First element by EI, the rest by greedy log-determinant of the posterior covariance."""

    def make(c):
        if c.pending_x.shape[0] == ctx.pending_x.shape[0]:
            return PenalisedScorer(c, "ei", 0.0, 0.0)
        return DppExploreScorer(c)

    return greedy_select(make, ctx, space, B, restarts, seed, levels=[0], **kwargs)


def random_batch(space: SearchSpace, B: int, seed=0) -> BatchProposal:
    rng = np.random.default_rng(_pick_seed(seed, 0))
    xs = space.sample(B, rng)
    return BatchProposal(xs, np.zeros(B, dtype=int), float("nan"), B * space.costs[0])
