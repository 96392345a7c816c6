"""Samplers for the objective maximum g*."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .exceptions import InputValidationError
from .linalg import clamp_psd, jittered_cholesky

THOMPSON_MAX_GRID = 4096
_QUARTILES = (0.25, 0.5, 0.75)


@dataclass(frozen=True)
class MaxValueSamples:
    values: np.ndarray
    grid_size: int
    method: str
    grid_mean_max: float = np.nan
    grid_std_max: float = np.nan

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise InputValidationError("max-value samples must be finite and nonempty")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def _grid(posterior, space, n, rng, include_data=True):
    if getattr(space, "is_discrete", False):
        return np.asarray(space.candidates, dtype=float)
    pts = space.sample(n, rng)
    if include_data and len(posterior.dataset):
        pts = np.vstack([posterior.dataset.inputs, pts])
    return pts


def _log_cdf_max(y, mu, sd):
    return float(np.sum(special.log_ndtr((y - mu) / sd)))


def gumbel_parameters(mu, sd):
    """Location and scale of a Gumbel matched to the quartiles of prod_i Phi((y - mu_i)/sd_i)."""
    mu = np.asarray(mu, dtype=float)
    sd = np.asarray(sd, dtype=float)
    live = sd > 0
    top = float(np.max(mu))
    if not np.any(live):
        return top, 0.0
    # points with no variance act as a hard floor on the maximum
    floor = float(np.max(mu[~live])) if np.any(~live) else -np.inf
    mu, sd = mu[live], sd[live]
    lo = max(top - 5.0 * float(np.max(sd)), floor) if np.isfinite(floor) else top - 5.0 * float(np.max(sd))
    hi = float(np.max(mu + 5.0 * sd))
    width = hi - lo + 1.0
    while _log_cdf_max(hi, mu, sd) < np.log(0.75):
        hi += width
    quart = []
    for q in _QUARTILES:
        target = np.log(q)
        if _log_cdf_max(lo, mu, sd) >= target:
            quart.append(lo)
            continue
        quart.append(optimize.brentq(lambda y: _log_cdf_max(y, mu, sd) - target, lo, hi, xtol=1e-12, rtol=1e-12))
    y25, y50, y75 = quart
    scale = (y75 - y25) / (np.log(-np.log(0.25)) - np.log(-np.log(0.75)))
    loc = y50 + scale * np.log(-np.log(0.5))
    return float(loc), float(max(scale, 0.0))


def gumbel_sample(posterior, space, M: int = 5, N: int | None = None, rng_seed=0) -> MaxValueSamples:
    """Draw M maxima from a Gumbel fitted to the independence approximation.

    The grid is the training inputs plus N uniform points from ``space`` (or the
    candidate set for discrete spaces); moments are those of the latent
    objective (level 0).
    """
    if M < 1:
        raise InputValidationError("M must be at least 1")
    if N is None:
        N = 10_000 * space.dim
    if N < 2:
        raise InputValidationError("grid size N must be at least 2")
    rng = np.random.default_rng(rng_seed)
    grid = _grid(posterior, space, N, rng)
    mu, var = posterior.predict_marginal(grid)
    sd = np.sqrt(var)
    top, sd_max = float(np.max(mu)), float(np.max(sd))
    loc, scale = gumbel_parameters(mu, sd)
    u = rng.uniform(size=M)
    if scale == 0.0:
        values = np.full(M, loc)
    else:
        values = loc - scale * np.log(-np.log(u))
    return MaxValueSamples(values, N, "gumbel", top, sd_max)


def thompson_sample(posterior, space, M: int = 5, N: int = 1024, rng_seed=0) -> MaxValueSamples:
    """Maxima of M joint posterior sample paths over an N-point grid."""
    if M < 1:
        raise InputValidationError("M must be at least 1")
    if N < 1 or N > THOMPSON_MAX_GRID:
        raise InputValidationError(f"N must lie in [1, {THOMPSON_MAX_GRID}] for exact sampling")
    rng = np.random.default_rng(rng_seed)
    grid = _grid(posterior, space, N, rng, include_data=False)
    mean, cov = posterior.predict_joint(grid)
    cov = clamp_psd(cov)
    top = float(np.max(mean))
    sd_max = float(np.sqrt(np.max(np.diag(cov))))
    if sd_max == 0.0:
        return MaxValueSamples(np.full(M, top), grid.shape[0], "thompson", top, 0.0)
    chol, _ = jittered_cholesky(cov)
    paths = mean[:, None] + chol @ rng.standard_normal((grid.shape[0], M))
    return MaxValueSamples(paths.max(axis=0), grid.shape[0], "thompson", top, sd_max)
