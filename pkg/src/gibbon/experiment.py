"""Seeded Bayesian-optimisation runs, regret traces and CSV output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .acquisition import AcquisitionContext, incumbent_mean
from .benchmarks import REGISTRY, Benchmark, get_benchmark
from .exceptions import FactorisationError, FitError, InputValidationError
from .gp import Dataset, Kernel, fit
from .maxvalue import gumbel_sample
from .multifidelity import FidelityLevel, default_mf_kernel, mf_fit
from .optimize import (
    SearchSpace,
    cost_weighted_select,
    dpp_explore_batch,
    greedy_batch,
    local_penalisation_batch,
    random_batch,
)

ACQUISITIONS = ("gibbon", "gibbon-modified", "mes", "ei", "lp-ei", "lp-mes", "dpp-explore", "random")
MULTI_FIDELITY_ACQUISITIONS = ("gibbon", "gibbon-modified")
CSV_HEADER = ("run_id", "seed", "iteration", "cum_cost", "incumbent_value", "regret", "overhead_s")


@dataclass(frozen=True)
class RunConfig:
    benchmark: str
    acquisition: str = "gibbon"
    batch_size: int = 1
    budget: float | None = None
    iterations: int | None = None
    seeds: tuple = (0,)
    max_value_samples: int = 5
    grid_size: int | None = None
    restarts: int | None = None
    raw_samples: int | None = None
    init_size: int | None = None
    fit_restarts: int = 8
    refit_restarts: int = 2
    noise_variance: float | None = None
    mask_overhead: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.benchmark not in REGISTRY:
            raise InputValidationError(f"unknown benchmark {self.benchmark!r}")
        if self.acquisition not in ACQUISITIONS:
            raise InputValidationError(f"unknown acquisition {self.acquisition!r}")
        if self.batch_size < 1:
            raise InputValidationError("batch size must be at least 1")
        if self.budget is None and self.iterations is None:
            raise InputValidationError("set a budget, an iteration count, or both")
        if self.budget is not None and not self.budget > 0:
            raise InputValidationError("budget must be positive")
        if self.iterations is not None and self.iterations < 0:
            raise InputValidationError("iterations must be nonnegative")
        if self.acquisition in ("mes", "ei") and self.batch_size > 1:
            raise InputValidationError(f"{self.acquisition} is sequential; use lp-{self.acquisition} for batches")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise InputValidationError("at least one seed is required")

    def run_id(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k not in ("seeds", "out")}
        blob = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        """Build from string values (config file or CLI), converting by field type."""
        kwargs = {}
        known = {f.name: f for f in fields(cls)}
        for key, raw in mapping.items():
            key = key.replace("-", "_")
            if key == "acq":
                key = "acquisition"
            if key not in known:
                raise InputValidationError(f"unknown configuration key {key!r}")
            kwargs[key] = _convert(key, raw)
        return cls(**kwargs)


_INT_KEYS = {"batch_size", "iterations", "max_value_samples", "grid_size", "restarts", "raw_samples",
             "init_size", "fit_restarts", "refit_restarts"}
_FLOAT_KEYS = {"budget", "noise_variance"}


def _convert(key, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if raw.lower() in ("", "none"):
        return None
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key == "seeds":
        return parse_seeds(raw)
    if key == "mask_overhead":
        return raw.lower() in ("1", "true", "yes", "on")
    return raw


def parse_seeds(text: str) -> tuple:
    """'0,1,2' or '0-19' or a mix of both."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else part[1:].split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def load_config(path) -> dict:
    """Flat ``key = value`` file; blank lines and ``#`` comments are ignored."""
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputValidationError(f"{path}:{lineno}: expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            mapping[key] = value
    return mapping


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    cum_cost: float
    incumbent_x: tuple
    incumbent_value: float
    regret: float
    overhead_s: float


@dataclass
class RegretTrace:
    run_id: str
    seed: int
    records: list = field(default_factory=list)
    truncated: bool = False
    failure: str | None = None

    @property
    def final_regret(self) -> float:
        return self.records[-1].regret

    def regrets(self) -> np.ndarray:
        return np.array([r.regret for r in self.records])

    def costs(self) -> np.ndarray:
        return np.array([r.cum_cost for r in self.records])


def _stream(seed: int, purpose: int, step: int = 0):
    return np.random.SeedSequence([seed, purpose, step])


class _Runner:
    """State of one seeded run."""

    def __init__(self, config: RunConfig, seed: int):
        self.cfg = config
        self.seed = seed
        self.bench: Benchmark = get_benchmark(config.benchmark, seed=_stream(seed, 1),
                                              noise_variance=config.noise_variance)
        self.multi = self.bench.n_levels > 1 and config.acquisition in MULTI_FIDELITY_ACQUISITIONS
        costs = self.bench.costs if self.multi else self.bench.costs[:1]
        self.space = SearchSpace(bounds=self.bench.bounds, costs=costs)
        self.model = None
        self.data = None
        self.cum_cost = 0.0

    # ------------------------------------------------------------ model
    def fit(self, step: int):
        cfg = self.cfg
        restarts = cfg.fit_restarts if self.model is None else cfg.refit_restarts
        kwargs = dict(
            input_bounds=self.bench.bounds,
            learn_noise=not self.bench.exact,
            restarts=restarts,
            seed=_stream(self.seed, 2, step),
            warm_start=self.model,
        )
        try:
            return self._fit(**kwargs)
        except (FactorisationError, FitError):
            # one retry with a larger fixed nugget before giving up
            kwargs.update(learn_noise=False, noise_init=1e-4 * float(np.var(self.data.observations) + 1.0),
                          warm_start=None)
            return self._fit(**kwargs)

    def _fit(self, **kwargs):
        if self.multi:
            levels = [FidelityLevel(i, c) for i, c in enumerate(self.space.costs)]
            return mf_fit(self.data, levels, default_mf_kernel(self.bench.dim, len(levels)), **kwargs)
        return fit(self.data, Kernel(lengthscales=(0.3,) * self.bench.dim), **kwargs)

    # ------------------------------------------------------- bookkeeping
    def evaluate(self, x, s):
        s = np.asarray(s, dtype=int)
        y = np.empty(s.size)
        for level in np.unique(s):
            mask = s == level
            y[mask] = self.bench.evaluate(x[mask], int(level))
        self.cum_cost += float(sum(self.space.costs[int(si)] for si in s))
        if self.data is None:
            self.data = Dataset(x, y, self.bench.noise_variance, s)
        else:
            self.data = self.data.append(x, y, s)

    def incumbent(self):
        """Believed optimum: best posterior mean over observed objective-level inputs."""
        mask = self.data.fidelities == 0
        xs = self.data.inputs[mask]
        if self.cfg.acquisition == "random" or self.model is None:
            ys = self.data.observations[mask]
            i = int(np.argmax(ys))
            return xs[i], float(ys[i])
        current = self.model.with_data(self.data)
        mu, _ = current.predict_marginal(xs)
        i = int(np.argmax(mu))
        return xs[i], float(mu[i])

    def record(self, trace, iteration, overhead):
        x, value = self.incumbent()
        trace.records.append(TraceRecord(
            iteration, self.cum_cost, tuple(float(v) for v in x), value,
            self.bench.regret(x), 0.0 if self.cfg.mask_overhead else overhead,
        ))

    # -------------------------------------------------------------- loop
    def initial_design(self):
        rng = np.random.default_rng(_stream(self.seed, 0))
        d = self.bench.dim
        if self.space.n_levels > 1:
            n = self.cfg.init_size or 2 * d
            x = self.space.sample(n, rng)
            levels = range(self.space.n_levels)
            self.evaluate(np.vstack([x] * len(levels)), np.repeat(np.arange(len(levels)), n))
        else:
            n = self.cfg.init_size or 2 * d + 2
            self.evaluate(self.space.sample(n, rng), np.zeros(n, dtype=int))

    def select(self, step: int):
        cfg = self.cfg
        B = cfg.batch_size
        opt_seed = int(np.random.default_rng(_stream(self.seed, 3, step)).integers(2**31))
        if cfg.acquisition == "random":
            return random_batch(self.space, B, opt_seed)
        remaining = (cfg.budget - self.cum_cost) if cfg.budget is not None else np.inf
        levels = [s for s, c in enumerate(self.space.costs) if c <= remaining] or [0]
        ctx_kwargs = dict(costs=self.space.costs)
        if cfg.acquisition in ("gibbon", "gibbon-modified", "mes", "lp-mes"):
            grid = cfg.grid_size or 10_000 * self.bench.dim
            mv = gumbel_sample(self.model, self.space, cfg.max_value_samples, grid, _stream(self.seed, 4, step))
            ctx_kwargs["max_values"] = mv
        ctx = AcquisitionContext(self.model, **ctx_kwargs)
        common = dict(raw_samples=cfg.raw_samples)
        if cfg.acquisition in ("gibbon", "gibbon-modified"):
            modified = cfg.acquisition == "gibbon-modified"
            if self.multi:
                return cost_weighted_select(ctx, self.space, B, cfg.restarts, opt_seed,
                                            modified=modified, levels=levels, **common)
            return greedy_batch(ctx, self.space, B, cfg.restarts, opt_seed, modified=modified, **common)
        if cfg.acquisition == "dpp-explore":
            return dpp_explore_batch(ctx, self.space, B, cfg.restarts, opt_seed, **common)
        base = "ei" if cfg.acquisition in ("ei", "lp-ei") else "mes"
        lipschitz, g_star = 0.0, 0.0
        if B > 1:
            rng = np.random.default_rng(_stream(self.seed, 5, step))
            probe = np.vstack([self.data.inputs, self.space.sample(1000 * self.bench.dim, rng)])
            lipschitz = float(np.max(self.model.mean_gradient_norm(probe)))
            g_star = incumbent_mean(self.model)
        return local_penalisation_batch(ctx, self.space, B, base, lipschitz, g_star, cfg.restarts,
                                        opt_seed, **common)

    def run(self) -> RegretTrace:
        cfg = self.cfg
        trace = RegretTrace(cfg.run_id(), self.seed)
        self.initial_design()
        t0 = time.perf_counter()
        if cfg.acquisition != "random":
            try:
                self.model = self.fit(0)
            except (FactorisationError, FitError) as exc:
                trace.truncated, trace.failure = True, f"initial fit: {exc}"
                self.record(trace, 0, time.perf_counter() - t0)
                return trace
        self.record(trace, 0, time.perf_counter() - t0)
        min_cost = min(self.space.costs)
        step = 0
        while True:
            if cfg.iterations is not None and step >= cfg.iterations:
                break
            if cfg.budget is not None and self.cum_cost + cfg.batch_size * min_cost > cfg.budget:
                break
            step += 1
            t0 = time.perf_counter()
            if cfg.acquisition != "random" and step > 1:
                try:
                    self.model = self.fit(step)
                except (FactorisationError, FitError) as exc:
                    trace.truncated, trace.failure = True, f"step {step}: {exc}"
                    break
            proposal = self.select(step)
            overhead = time.perf_counter() - t0
            self.evaluate(proposal.x, proposal.s)
            self.record(trace, step, overhead)
        return trace


def run_seed(config: RunConfig, seed: int) -> RegretTrace:
    return _Runner(config, seed).run()


def run(config: RunConfig, jobs: int = 1) -> list[RegretTrace]:
    """One trace per seed, in seed order; seeds run in parallel when ``jobs > 1``."""
    if jobs <= 1 or len(config.seeds) == 1:
        return [run_seed(config, s) for s in config.seeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_seed, [config] * len(config.seeds), config.seeds))


# ------------------------------------------------------------------ output
def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def traces_to_csv(traces) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for t in traces:
        for r in t.records:
            writer.writerow([t.run_id, t.seed, r.iteration, _fmt(r.cum_cost), _fmt(r.incumbent_value),
                             _fmt(r.regret), _fmt(r.overhead_s)])
    return buf.getvalue()


def write_csv(traces, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(traces_to_csv(traces))


@dataclass(frozen=True)
class Summary:
    """Mean and standard error of regret across seeds at each x (iteration or cost)."""

    x: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    count: np.ndarray


def _summarise(x, table):
    count = np.sum(np.isfinite(table), axis=0)
    mean = np.full(table.shape[1], np.nan)
    mean[count > 0] = np.nanmean(table[:, count > 0], axis=0)
    sd = np.array([np.nanstd(col, ddof=1) if c > 1 else 0.0 for col, c in zip(table.T, count)])
    return Summary(np.asarray(x, dtype=float), mean, sd / np.sqrt(np.maximum(count, 1)), count)


def aggregate(traces, cost_grid=None) -> Summary:
    """Across-seed mean and standard error of regret.

    Without ``cost_grid`` rows are aligned by iteration (shorter traces leave
    gaps).  With it, each trace contributes the regret of its last record whose
    cumulative cost is within the grid value.
    """
    traces = list(traces)
    if not traces:
        raise InputValidationError("nothing to aggregate")
    if cost_grid is None:
        n = max(len(t.records) for t in traces)
        table = np.full((len(traces), n), np.nan)
        for i, t in enumerate(traces):
            table[i, :len(t.records)] = t.regrets()
        return _summarise(np.arange(n), table)
    grid = np.asarray(cost_grid, dtype=float)
    table = np.full((len(traces), grid.size), np.nan)
    for i, t in enumerate(traces):
        costs, regrets = t.costs(), t.regrets()
        idx = np.searchsorted(costs, grid, side="right") - 1
        ok = idx >= 0
        table[i, ok] = regrets[idx[ok]]
    return _summarise(grid, table)
