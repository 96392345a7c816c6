"""Acquisition functions: GIBBON and its variants, MES, EI, penalisers and DPP forms.

Exact batch functions (``gibbon``, ``gibbon_modified``, ``gibbon_decomposed``,
``dpp_logdet``, ``correlation_penaliser``) evaluate a whole batch at once from
its predictive bundle.  The ``*Scorer`` classes evaluate many single candidates
against a fixed pending batch, which is what the greedy inner loop needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .exceptions import InputValidationError
from .gp import GPPosterior, _as_2d
from .linalg import clamped_logdet, correlation_from_covariance, jittered_cholesky, solve_lower
from .maxvalue import MaxValueSamples
from .stats import hazard, hazard_product, log_one_minus_rho2_product, mes_term, norm_cdf, norm_pdf

RHO_CLAMP = 1.0 - 1e-9
EIG_FLOOR = 1e-9
_VAR_FLOOR = 1e-300


@dataclass(frozen=True)
class HazardTerm:
    gamma: np.ndarray
    hazard: np.ndarray

    @classmethod
    def from_gamma(cls, gamma) -> "HazardTerm":
        g = np.asarray(gamma, dtype=float)
        return cls(g, np.asarray(hazard(g)))

    @property
    def product(self) -> np.ndarray:
        """h (gamma + h), kept inside (0, 1)."""
        return np.asarray(hazard_product(self.gamma))


@dataclass(frozen=True)
class AcquisitionContext:
    """Everything an acquisition evaluation depends on besides the candidates.

    ``pending_x`` / ``pending_s`` hold batch elements already chosen in the
    current step.  ``costs`` lists the query cost per fidelity level.
    ``incumbent`` is the EI reference value (defaults to the best posterior
    mean over observed objective-level inputs).
    """

    model: GPPosterior
    max_values: MaxValueSamples | None = None
    pending_x: np.ndarray | None = None
    pending_s: np.ndarray | None = None
    costs: tuple = (1.0,)
    incumbent: float | None = None
    _incumbent_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        d = self.model.dataset.dim
        px = np.zeros((0, d)) if self.pending_x is None else _as_2d(self.pending_x)
        ps = np.zeros(px.shape[0], dtype=int) if self.pending_s is None else np.asarray(self.pending_s, dtype=int)
        if ps.shape != (px.shape[0],):
            raise InputValidationError("pending fidelities must match pending points")
        object.__setattr__(self, "pending_x", px)
        object.__setattr__(self, "pending_s", ps)
        costs = tuple(float(c) for c in self.costs)
        if len(costs) < self.model.n_levels or any(not c > 0 for c in costs):
            raise InputValidationError("need one positive cost per fidelity level")
        object.__setattr__(self, "costs", costs)

    @property
    def m(self) -> np.ndarray:
        if self.max_values is None or len(self.max_values) == 0:
            raise InputValidationError("max-value samples are required for this acquisition")
        return self.max_values.values

    def with_pending(self, x, s=0) -> "AcquisitionContext":
        x = _as_2d(x)
        s = np.broadcast_to(np.asarray(s, dtype=int), (x.shape[0],))
        return replace(
            self,
            pending_x=np.vstack([self.pending_x, x]),
            pending_s=np.r_[self.pending_s, s],
            _incumbent_cache=self._incumbent_cache,
        )

    def reference_value(self) -> float:
        if self.incumbent is not None:
            return float(self.incumbent)
        if "best" not in self._incumbent_cache:
            self._incumbent_cache["best"] = incumbent_mean(self.model)
        return self._incumbent_cache["best"]


def incumbent_mean(model: GPPosterior) -> float:
    """Largest posterior mean over observed inputs at the objective level."""
    ds = model.dataset
    x = ds.inputs[ds.fidelities == 0]
    if x.shape[0] == 0:
        x = ds.inputs
    if x.shape[0] == 0:
        return float(model.y_shift)
    mu, _ = model.predict_marginal(x)
    return float(np.max(mu))


# ----------------------------------------------------------- shared pieces
def _gamma(m, mu, var):
    sd = np.sqrt(np.maximum(var, _VAR_FLOOR))
    return (np.asarray(m, dtype=float)[:, None] - np.asarray(mu)[None, :]) / sd[None, :]


def single_point_terms(m, mu_c, var_c, rho) -> np.ndarray:
    """Per-candidate GIBBON quality terms -1/(2|M|) sum_m log(1 - rho^2 h (gamma + h))."""
    rho = np.clip(np.asarray(rho, dtype=float), -RHO_CLAMP, RHO_CLAMP)
    g = _gamma(m, mu_c, var_c)
    return -0.5 * np.mean(log_one_minus_rho2_product(g, rho[None, :]), axis=0)


def _normalise_candidates(ctx, candidates, fidelities):
    x = _as_2d(candidates)
    if x.shape[0] == 0:
        raise InputValidationError("candidates must be nonempty")
    s = np.zeros(x.shape[0], dtype=int) if fidelities is None else np.broadcast_to(
        np.asarray(fidelities, dtype=int), (x.shape[0],))
    return x, np.asarray(s)


def _bundle_pieces(ctx, candidates, fidelities):
    x, s = _normalise_candidates(ctx, candidates, fidelities)
    b = ctx.model.bundle(x, s)
    corr = correlation_from_covariance(b.Sigma_A)
    quality = single_point_terms(ctx.m, b.mu_C, np.diag(b.Sigma_C), b.rho)
    return b, corr, quality


# ------------------------------------------------------------ batch values
def gibbon_decomposed(ctx: AcquisitionContext, candidates, fidelities=None) -> tuple[float, float]:
    """(diversity, quality): 1/2 log|R| and the sum of single-point terms."""
    _, corr, quality = _bundle_pieces(ctx, candidates, fidelities)
    return 0.5 * clamped_logdet(corr, EIG_FLOOR), float(np.sum(quality))


def gibbon(ctx: AcquisitionContext, candidates, fidelities=None) -> float:
    """GIBBON value of a batch of (x, s) candidates."""
    diversity, quality = gibbon_decomposed(ctx, candidates, fidelities)
    return diversity + quality


def gibbon_modified(ctx: AcquisitionContext, candidates, fidelities=None) -> float:
    """GIBBON with the diversity term down-weighted by 1/B^2 for large batches."""
    x, _ = _normalise_candidates(ctx, candidates, fidelities)
    diversity, quality = gibbon_decomposed(ctx, candidates, fidelities)
    return diversity / x.shape[0] ** 2 + quality


def gibbon_single(ctx: AcquisitionContext, candidates, fidelities=None) -> np.ndarray:
    """Vector of single-point GIBBON values for many candidates."""
    x, s = _normalise_candidates(ctx, candidates, fidelities)
    st = ctx.model.candidate_stats(x, s)
    return single_point_terms(ctx.m, st.mu_C, st.var_C, st.rho)


def dpp_logdet(ctx: AcquisitionContext, candidates, fidelities=None) -> float:
    """1/2 log|L| with L_ij = q_i q_j R_ij and q_i = exp(single-point GIBBON)."""
    _, corr, quality = _bundle_pieces(ctx, candidates, fidelities)
    q = np.exp(quality)
    kernel = np.outer(q, q) * corr
    sign, logdet = np.linalg.slogdet(kernel)
    return 0.5 * logdet if sign > 0 else -np.inf


def correlation_penaliser(x, batch, model: GPPosterior, x_fidelity=0, batch_fidelities=None) -> float:
    """|R| of the predictive correlation of ``batch`` plus ``x``; 1 for an empty batch."""
    x = _as_2d(x)
    batch = np.zeros((0, x.shape[1])) if batch is None else _as_2d(batch)
    if batch.shape[0] == 0:
        return 1.0
    bs = np.zeros(batch.shape[0], dtype=int) if batch_fidelities is None else np.asarray(batch_fidelities)
    pts = np.vstack([batch, x])
    fid = np.r_[bs, np.broadcast_to(x_fidelity, (x.shape[0],))]
    corr = correlation_from_covariance(model.bundle(pts, fid).Sigma_A)
    return float(np.exp(clamped_logdet(corr, EIG_FLOOR)))


# -------------------------------------------------------------- baselines
def mes_values(ctx: AcquisitionContext, candidates) -> np.ndarray:
    """Max-value entropy search for exact single-fidelity observations."""
    mu, var = ctx.model.predict_marginal(candidates)
    g = _gamma(ctx.m, mu, var)
    return np.mean(mes_term(g), axis=0)


def mes(ctx: AcquisitionContext, candidate) -> float:
    return float(mes_values(ctx, _as_2d(candidate)[:1])[0])


def expected_improvement_values(ctx: AcquisitionContext, candidates) -> np.ndarray:
    mu, var = ctx.model.predict_marginal(candidates)
    return ei_from_moments(mu, np.sqrt(var), ctx.reference_value())


def ei_from_moments(mu, sd, best):
    mu = np.asarray(mu, dtype=float)
    sd = np.asarray(sd, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (mu - best) / sd
        val = sd * (z * norm_cdf(z) + norm_pdf(z))
    return np.where(sd > 0, np.maximum(val, 0.0), np.maximum(mu - best, 0.0))


def expected_improvement(ctx: AcquisitionContext, candidate) -> float:
    return float(expected_improvement_values(ctx, _as_2d(candidate)[:1])[0])


def soft_penaliser(x, x_prev, L: float, g_star: float, posterior: GPPosterior) -> np.ndarray | float:
    """Soft local penaliser 1/2 erfc(-z), z = (L |x - x'| - g* + mu(x')) / sigma(x')."""
    xs = _as_2d(x)
    xp = _as_2d(x_prev)[:1]
    mu, var = posterior.predict_marginal(xp)
    dist = np.linalg.norm(xs - xp, axis=1)
    sd = np.sqrt(var[0])
    num = L * dist - g_star + mu[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = num / sd if sd > 0 else np.where(num > 0, np.inf, np.where(num < 0, -np.inf, 0.0))
    out = 0.5 * special.erfc(-z)
    return out if np.ndim(x) > 1 else float(out[0])


def degenerate_pair(u) -> tuple:
    """Single-point GIBBON and MES for a noiseless objective query at standardised gap u.

    GIBBON: -1/2 log(1 - h(u)(u + h(u))); MES: u h(u)/2 - log Phi(u).
    """
    u = np.asarray(u, dtype=float)
    g = -0.5 * np.asarray(log_one_minus_rho2_product(u, 1.0))
    m = mes_term(u)
    if g.ndim == 0:
        return float(g), float(m)
    return g, np.asarray(m)


# ------------------------------------------------------- greedy scorers
class GibbonScorer:
    """Scores single candidates against a fixed pending batch.

    ``score(X, s)`` is the change in batch value from appending each row of X
    at fidelity s: alpha(x) + w * log(1 - r^T R^{-1} r), where r holds the
    correlations between x and the pending batch.  ``w`` is 1/2 for standard
    GIBBON and 1/(2 B^2) for the modified form.
    """

    def __init__(self, ctx: AcquisitionContext, diversity_weight: float = 0.5):
        self.ctx = ctx
        self.w = float(diversity_weight)
        self.m = ctx.m
        model = ctx.model
        if ctx.pending_x.shape[0]:
            self.pending = model.candidate_stats(ctx.pending_x, ctx.pending_s)
            b = model.bundle(ctx.pending_x, ctx.pending_s)
            self.pending_sd = np.sqrt(np.maximum(np.diag(b.Sigma_A), _VAR_FLOOR))
            corr = correlation_from_covariance(b.Sigma_A)
            self.chol, _ = jittered_cholesky(corr)
            self.offset = self.w * clamped_logdet(corr, EIG_FLOOR) + float(np.sum(
                single_point_terms(self.m, b.mu_C, np.diag(b.Sigma_C), b.rho)))
        else:
            self.pending = None
            self.offset = 0.0

    def quality(self, stats) -> np.ndarray:
        return single_point_terms(self.m, stats.mu_C, stats.var_C, stats.rho)

    def log_schur(self, stats) -> np.ndarray:
        if self.pending is None:
            return np.zeros(stats.x.shape[0])
        c = self.ctx.model.cross_observation_cov(stats, self.pending)
        sd = np.sqrt(np.maximum(stats.var_A, _VAR_FLOOR))
        r = c / (sd[:, None] * self.pending_sd[None, :])
        w = solve_lower(self.chol, r.T)
        schur = 1.0 - np.sum(w * w, axis=0)
        return np.log(np.maximum(schur, EIG_FLOOR))

    def score(self, x, s=0) -> np.ndarray:
        stats = self.ctx.model.candidate_stats(x, np.full(_as_2d(x).shape[0], s))
        return self.quality(stats) + self.w * self.log_schur(stats)


class DppExploreScorer:
    """Log conditional predictive variance given the pending batch (pure exploration)."""

    def __init__(self, ctx: AcquisitionContext):
        self.ctx = ctx
        model = ctx.model
        self.offset = 0.0
        if ctx.pending_x.shape[0]:
            self.pending = model.candidate_stats(ctx.pending_x, ctx.pending_s)
            b = model.bundle(ctx.pending_x, ctx.pending_s)
            self.chol, _ = jittered_cholesky(b.Sigma_A)
        else:
            self.pending = None

    def score(self, x, s=0) -> np.ndarray:
        stats = self.ctx.model.candidate_stats(x, np.full(_as_2d(x).shape[0], s))
        var = stats.var_A
        if self.pending is not None:
            c = self.ctx.model.cross_observation_cov(stats, self.pending)
            w = solve_lower(self.chol, c.T)
            var = var - np.sum(w * w, axis=0)
        return np.log(np.maximum(var, _VAR_FLOOR))


class PenalisedScorer:
    """Log of a base acquisition times soft local penalisers around pending points.

    ``base`` is ``"ei"`` or ``"mes"``.  With no pending points this is just the
    log of the base acquisition.
    """

    def __init__(self, ctx: AcquisitionContext, base: str, lipschitz: float, g_star: float):
        if base not in ("ei", "mes"):
            raise InputValidationError(f"unknown base acquisition {base!r}")
        self.ctx = ctx
        self.base = base
        self.L = float(lipschitz)
        self.g_star = float(g_star)
        self.offset = 0.0

    def score(self, x, s=0) -> np.ndarray:
        x = _as_2d(x)
        if self.base == "ei":
            val = expected_improvement_values(self.ctx, x)
        else:
            val = mes_values(self.ctx, x)
        out = np.log(np.maximum(val, 1e-300))
        for xp in self.ctx.pending_x:
            psi = soft_penaliser(x, xp[None, :], self.L, self.g_star, self.ctx.model)
            out = out + np.log(np.maximum(psi, 1e-300))
        return out
