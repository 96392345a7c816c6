"""Synthetic benchmark objectives, single- and multi-fidelity.

Raw functions (``shekel4``, ``hartmann6_mf`` ...) return the published values,
minimisation or maximisation as published.  :class:`Benchmark` wraps them in
maximisation form (minimisation problems are negated) with per-level costs, an
optional observation-noise generator, and an oracle-derived optimum for regret.
Run ``python -m gibbon.benchmarks`` to re-derive ``data/optima.json``.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import optimize

from .exceptions import InputValidationError

DATA_PACKAGE = "gibbon.data"


# ------------------------------------------------------------------ constants
def _data_text(name: str) -> str:
    return resources.files(DATA_PACKAGE).joinpath(name).read_text(encoding="utf-8")


def constants_checksum() -> str:
    return hashlib.sha256(_data_text("constants.txt").encode("utf-8")).hexdigest()


@lru_cache(maxsize=None)
def _constants() -> dict:
    blocks, name, scale, rows = {}, None, 1.0, []

    def close():
        if name is not None:
            arr = np.array(rows, dtype=float) * scale
            arr.setflags(write=False)
            blocks[name] = arr

    for line in _data_text("constants.txt").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            close()
            head, _, rest = line.partition("]")
            name, rows = head[1:], []
            scale = float(rest.split("=", 1)[1]) if "scale=" in rest else 1.0
        else:
            rows.append([float(v) for v in line.split()])
    close()
    return blocks


def constant(name: str) -> np.ndarray:
    return _constants()[name]


def _points(x, d):
    a = np.asarray(x, dtype=float)
    single = a.ndim == 1
    a = np.atleast_2d(a)
    if a.shape[1] != d:
        raise InputValidationError(f"expected {d}-dimensional input")
    return a, single


def _ret(v, single):
    return float(v[0]) if single else v


# ---------------------------------------------------------- raw functions
def shekel4(x):
    x, single = _points(x, 4)
    a = constant("shekel.A")          # (4, 10)
    beta = constant("shekel.beta")[:, 0]
    sq = np.sum((x[:, :, None] - a[None, :, :]) ** 2, axis=1)   # (n, 10)
    return _ret(-np.sum(1.0 / (sq + beta[None, :]), axis=1), single)


def ackley4(x):
    x, single = _points(x, 4)
    d = x.shape[1]
    t1 = -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x * x, axis=1) / d))
    t2 = -np.exp(np.sum(np.cos(2.0 * np.pi * x), axis=1) / d)
    # grouped so the value at the origin is exactly zero
    return _ret((t1 + 20.0) + (t2 + np.e), single)


def _hartmann(x, a, alpha, p):
    inner = np.sum(a[None, :, :] * (x[:, None, :] - p[None, :, :]) ** 2, axis=2)  # (n, 4)
    return -np.exp(-inner) @ alpha


def hartmann6(x):
    x, single = _points(x, 6)
    v = _hartmann(x, constant("hartmann6.A"), constant("hartmann6.alpha")[:, 0], constant("hartmann6.P"))
    return _ret(v, single)


def _level(m, n_levels):
    m = int(m)
    if not 0 <= m < n_levels:
        raise InputValidationError(f"fidelity must be in 0..{n_levels - 1}")
    return m


def hartmann6_mf(x, m=0):
    x, single = _points(x, 6)
    alpha = constant("hartmann6_mf.alpha")
    m = _level(m, alpha.shape[1])
    v = _hartmann(x, constant("hartmann6.A"), alpha[:, m], constant("hartmann6.P"))
    return _ret(v, single)


def hartmann3_mf(x, m=0):
    x, single = _points(x, 3)
    alpha = constant("hartmann3_mf.alpha")
    m = _level(m, alpha.shape[1])
    v = _hartmann(x, constant("hartmann3_mf.A"), alpha[:, m], constant("hartmann3_mf.P"))
    return _ret(v, single)


def _currin_high(x1, x2):
    with np.errstate(divide="ignore"):
        factor = 1.0 - np.exp(-1.0 / (2.0 * x2))
    num = 2300 * x1**3 + 1900 * x1**2 + 2092 * x1 + 60
    den = 100 * x1**3 + 500 * x1**2 + 4 * x1 + 20
    return factor * num / den


def currin_mf(x, m=0):
    x, single = _points(x, 2)
    m = _level(m, 2)
    x1, x2 = x[:, 0], x[:, 1]
    if m == 0:
        return _ret(_currin_high(x1, x2), single)
    lo2 = np.maximum(0.0, x2 - 0.05)
    v = 0.25 * (
        _currin_high(x1 + 0.05, x2 + 0.05)
        + _currin_high(x1 + 0.05, lo2)
        + _currin_high(x1 - 0.05, x2 + 0.05)
        + _currin_high(x1 - 0.05, lo2)
    )
    return _ret(v, single)


def borehole_mf(x, m=0):
    x, single = _points(x, 8)
    m = _level(m, 2)
    lead, one = (2.0 * np.pi, 1.0) if m == 0 else (5.0, 1.5)
    x1, x2, x3, x4, x5, x6, x7, x8 = x.T
    logr = np.log(x2 / x1)
    v = lead * x3 * (x4 - x6) / (logr * (one + 2 * x7 * x3 / (logr * x1**2 * x8) + x3 / x5))
    return _ret(v, single)


# ---------------------------------------------------------------- wrapper
@dataclass(frozen=True)
class Benchmark:
    """Maximisation-form benchmark over a box with discrete fidelity levels."""

    name: str
    bounds: np.ndarray
    function: object = field(repr=False)
    sign: float = 1.0
    costs: tuple = (1.0,)
    noise_variance: float = 0.0
    optimum: float | None = None
    rng: np.random.Generator | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def n_levels(self) -> int:
        return len(self.costs)

    @property
    def exact(self) -> bool:
        return self.noise_variance == 0.0

    def objective(self, x, s=0):
        """Noise-free maximisation-form value at level ``s``."""
        if self.n_levels == 1:
            _level(s, 1)
            return self.sign * np.asarray(self.function(x))
        return self.sign * np.asarray(self.function(x, s))

    def truth(self, x):
        return self.objective(x, 0)

    def evaluate(self, x, s=0):
        """Observed value: the objective plus seeded Gaussian noise if noisy."""
        v = self.objective(x, s)
        if self.noise_variance > 0:
            rng = self.rng if self.rng is not None else np.random.default_rng()
            v = v + rng.normal(0.0, np.sqrt(self.noise_variance), np.shape(v))
        return v

    def regret(self, x) -> float:
        if self.optimum is None:
            raise InputValidationError(f"no reference optimum stored for {self.name}")
        return float(self.optimum - self.truth(np.asarray(x, dtype=float)))


def noisy(benchmark: Benchmark, sigma2: float, seed=0) -> Benchmark:
    """Copy of ``benchmark`` whose ``evaluate`` adds N(0, sigma2) noise from a seeded generator."""
    if not (np.isfinite(sigma2) and sigma2 >= 0):
        raise InputValidationError("noise variance must be nonnegative")
    return replace(benchmark, noise_variance=float(sigma2), rng=np.random.default_rng(seed))


def _box(lo, hi, d):
    return np.tile([[lo, hi]], (d, 1)).astype(float)


def _base(name: str) -> Benchmark:
    if name == "shekel4":
        return Benchmark(name, _box(0, 10, 4), shekel4, -1.0)
    if name == "ackley4":
        return Benchmark(name, _box(-32.768, 32.768, 4), ackley4, -1.0)
    if name == "hartmann6":
        return Benchmark(name, _box(0, 1, 6), hartmann6, -1.0)
    if name == "hartmann6_mf":
        costs = tuple(constant("hartmann6_mf.costs")[0])
        return Benchmark(name, _box(0, 1, 6), hartmann6_mf, -1.0, costs)
    if name == "hartmann3_mf":
        costs = tuple(constant("hartmann3_mf.costs")[0])
        return Benchmark(name, _box(0, 1, 3), hartmann3_mf, -1.0, costs)
    if name == "currin_mf":
        return Benchmark(name, _box(0, 1, 2), currin_mf, 1.0, tuple(constant("currin_mf.costs")[0]))
    if name == "borehole_mf":
        return Benchmark(name, np.array(constant("borehole_mf.domain")), borehole_mf, 1.0,
                         tuple(constant("borehole_mf.costs")[0]))
    raise InputValidationError(f"unknown benchmark {name!r}")


# registry name -> (base benchmark, observation noise variance)
REGISTRY = {
    "shekel4": ("shekel4", 0.0),
    "ackley4": ("ackley4", 0.0),
    "ackley4-noisy": ("ackley4", 0.25),
    "hartmann6": ("hartmann6", 0.0),
    "hartmann6-noisy": ("hartmann6", 0.25),
    "hartmann6_mf": ("hartmann6_mf", 0.0),
    "hartmann3_mf": ("hartmann3_mf", 0.0),
    "currin_mf": ("currin_mf", 0.0),
    "borehole_mf": ("borehole_mf", 0.0),
}


@lru_cache(maxsize=None)
def stored_optima() -> dict:
    return json.loads(_data_text("optima.json"))


def get_benchmark(name: str, seed=0, noise_variance: float | None = None) -> Benchmark:
    """Benchmark by registry name, with its stored optimum and a seeded noise generator."""
    if name not in REGISTRY:
        raise InputValidationError(f"unknown benchmark {name!r}; choose from {sorted(REGISTRY)}")
    base_name, sigma2 = REGISTRY[name]
    b = _base(base_name)
    opt = stored_optima().get(base_name, {}).get("value")
    b = replace(b, optimum=opt)
    sigma2 = sigma2 if noise_variance is None else noise_variance
    return noisy(b, sigma2, seed) if sigma2 > 0 else b


# ------------------------------------------------------------ optimum oracle
def derive_optimum(benchmark: Benchmark, seed=0, n_raw: int = 200_000, n_starts: int = 64) -> dict:
    """Maximise the level-0 objective: dense random screen, then L-BFGS-B refinement.

    The box centre and the best raw points seed the local searches.
    """
    rng = np.random.default_rng(seed)
    lo, hi = benchmark.bounds[:, 0], benchmark.bounds[:, 1]
    raw = lo + (hi - lo) * rng.uniform(size=(n_raw, benchmark.dim))
    vals = benchmark.truth(raw)
    starts = np.vstack([(lo + hi) / 2, raw[np.argsort(-vals)[:n_starts]]])
    best_x, best_v = None, -np.inf
    for x0 in starts:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = optimize.minimize(
                lambda x: -float(benchmark.truth(x)), x0, method="L-BFGS-B",
                bounds=list(zip(lo, hi)), options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 2000},
            )
        v = float(benchmark.truth(res.x))
        if v > best_v:
            best_x, best_v = res.x, v
    return {
        "value": best_v,
        "x": [float(v) for v in best_x],
        "method": "uniform screen + L-BFGS-B refinement",
        "seed": seed,
        "n_raw": n_raw,
        "n_starts": n_starts + 1,
        "constants_sha256": constants_checksum(),
    }


ORACLE_BENCHMARKS = ("shekel4", "ackley4", "hartmann6", "hartmann6_mf", "hartmann3_mf", "currin_mf", "borehole_mf")


def main() -> None:
    import pathlib

    out = {name: derive_optimum(_base(name)) for name in ORACLE_BENCHMARKS}
    path = pathlib.Path(__file__).with_name("data") / "optima.json"
    path.write_text(json.dumps(out, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
