"""Monte Carlo and quadrature oracles for the truncation results behind GIBBON.

A :class:`TruncationScenario` describes B objective values C ~ N(mu_C, Sigma_C)
and B observations A with A_j = mu_A_j + D_jj (C_j - mu_C_j) + eps_j, where the
eps_j are independent N(0, S_jj).  This is the most general law in which each
A_j depends on C only through C_j.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special, stats
from scipy.spatial import cKDTree

from .exceptions import InputValidationError, RejectionSamplingError
from .linalg import cho_solve, correlation_from_covariance, jittered_cholesky
from .stats import bivariate_normal_cdf, log_one_minus_rho2_product, norm_cdf, norm_logpdf

MIN_ACCEPTANCE = 1e-3
ENTROPY_ESTIMATOR = "kozachenko-leonenko (k=1, whitened, bootstrap SE over log-distances)"
_CHUNK = 200_000


@dataclass(frozen=True)
class TruncationScenario:
    mu_A: np.ndarray
    mu_C: np.ndarray
    Sigma_C: np.ndarray
    Sigma_A_diag: np.ndarray
    rho: np.ndarray
    m: float

    def __post_init__(self):
        fields = {}
        for name in ("mu_A", "mu_C", "Sigma_A_diag", "rho"):
            fields[name] = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
        sc = np.atleast_2d(np.asarray(self.Sigma_C, dtype=float))
        b = fields["mu_C"].size
        if sc.shape != (b, b) or any(v.shape != (b,) for v in fields.values()):
            raise InputValidationError("scenario arrays must share the batch size")
        if np.any(np.abs(fields["rho"]) > 1) or np.any(fields["Sigma_A_diag"] <= 0):
            raise InputValidationError("need |rho| <= 1 and positive observation variances")
        if np.any(np.diag(sc) <= 0) or not np.allclose(sc, sc.T):
            raise InputValidationError("Sigma_C must be symmetric with a positive diagonal")
        for name, v in fields.items():
            object.__setattr__(self, name, v)
        object.__setattr__(self, "Sigma_C", sc)
        object.__setattr__(self, "m", float(self.m))

    @property
    def B(self) -> int:
        return self.mu_C.size

    @property
    def D(self) -> np.ndarray:
        return self.rho * np.sqrt(self.Sigma_A_diag / np.diag(self.Sigma_C))

    @property
    def S(self) -> np.ndarray:
        return (1.0 - self.rho**2) * self.Sigma_A_diag

    @property
    def Sigma_A(self) -> np.ndarray:
        d = self.D
        return d[:, None] * self.Sigma_C * d[None, :] + np.diag(self.S)

    @property
    def gamma(self) -> np.ndarray:
        return (self.m - self.mu_C) / np.sqrt(np.diag(self.Sigma_C))

    def digest(self) -> str:
        payload = json.dumps({k: np.round(np.asarray(v, dtype=float), 12).tolist()
                              for k, v in asdict(self).items()}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def random_scenario(B: int, rng, *, rho_max: float = 0.95, quantile_range=(0.05, 0.95)) -> TruncationScenario:
    """Wishart-style Sigma_C, rho ~ U[-rho_max, rho_max], m at a random quantile of max C."""
    rng = np.random.default_rng(rng)
    w = rng.standard_normal((B, B + 2))
    sigma_c = w @ w.T / (B + 2) + 0.05 * np.eye(B)
    mu_c = rng.normal(0.0, 1.0, B)
    chol = np.linalg.cholesky(sigma_c)
    draws = mu_c + rng.standard_normal((20_000, B)) @ chol.T
    q = rng.uniform(*quantile_range)
    m = float(np.quantile(draws.max(axis=1), q))
    return TruncationScenario(
        mu_A=rng.normal(0.0, 1.0, B),
        mu_C=mu_c,
        Sigma_C=sigma_c,
        Sigma_A_diag=rng.uniform(0.5, 2.0, B),
        rho=rng.uniform(-rho_max, rho_max, B),
        m=m,
    )


# ------------------------------------------------------------- sampling
@dataclass(frozen=True)
class ConditionalSamples:
    A: np.ndarray
    acceptance_rate: float
    proposals: int


def rejection_sample_conditional(scenario: TruncationScenario, n_samples: int, seed=0) -> ConditionalSamples:
    """``n_samples`` draws of A | max(C) < m by joint sampling and rejection."""
    if n_samples < 1:
        raise InputValidationError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    chol, _ = jittered_cholesky(scenario.Sigma_C)
    d, s_sd = scenario.D, np.sqrt(scenario.S)
    out, kept, proposed = [], 0, 0
    while kept < n_samples:
        z = rng.standard_normal((_CHUNK, scenario.B))
        c = scenario.mu_C + z @ chol.T
        eps = rng.standard_normal((_CHUNK, scenario.B)) * s_sd
        ok = c.max(axis=1) < scenario.m
        proposed += _CHUNK
        if proposed == _CHUNK and ok.mean() < MIN_ACCEPTANCE:
            raise RejectionSamplingError(
                f"acceptance rate {ok.mean():.2e} is below {MIN_ACCEPTANCE:g}; use a larger m"
            )
        a = scenario.mu_A + d * (c[ok] - scenario.mu_C) + eps[ok]
        out.append(a)
        kept += a.shape[0]
    samples = np.vstack(out)[:n_samples]
    return ConditionalSamples(samples, kept / proposed, proposed)


# -------------------------------------------------------------- densities
def _mvn_cdf(upper, cov):
    """P(X <= upper) for X ~ N(0, cov); rows of ``upper`` are evaluation points."""
    upper = np.atleast_2d(upper)
    b = cov.shape[0]
    sd = np.sqrt(np.diag(cov))
    z = upper / sd
    if b == 1:
        return norm_cdf(z[:, 0])
    if b == 2:
        r = cov[0, 1] / (sd[0] * sd[1])
        return bivariate_normal_cdf(z[:, 0], z[:, 1], np.clip(r, -1 + 1e-15, 1 - 1e-15))
    corr = cov / np.outer(sd, sd)
    mvn = stats.multivariate_normal(np.zeros(b), corr, allow_singular=True)
    return np.atleast_1d(mvn.cdf(z))


def prob_max_below(scenario: TruncationScenario) -> float:
    return float(_mvn_cdf(scenario.m - scenario.mu_C[None, :], scenario.Sigma_C)[0])


def conditional_density(scenario: TruncationScenario, a) -> np.ndarray | float:
    """Density of A | max(C) < m at ``a`` (a single B-vector or rows of them)."""
    a_arr = np.asarray(a, dtype=float)
    single = a_arr.ndim <= 1
    a_arr = a_arr.reshape(-1, scenario.B)
    p = prob_max_below(scenario)
    if scenario.B == 1 and abs(scenario.rho[0]) == 1.0:
        # A is an affine image of C: a truncated Gaussian
        d = scenario.D[0]
        sc = np.sqrt(scenario.Sigma_C[0, 0])
        c = scenario.mu_C[0] + (a_arr[:, 0] - scenario.mu_A[0]) / d
        dens = np.exp(norm_logpdf((c - scenario.mu_C[0]) / sc)) / (sc * abs(d) * p)
        out = np.where(c < scenario.m, dens, 0.0)
        return float(out[0]) if single else out
    if np.any(scenario.S <= 0):
        raise InputValidationError("perfect correlations are only supported for B = 1")
    d, s = scenario.D, scenario.S
    x1 = stats.multivariate_normal(scenario.mu_A, scenario.Sigma_A, allow_singular=False)
    sigma = np.linalg.inv(scenario.Sigma_C) + np.diag(d * d / s)
    chol, _ = jittered_cholesky(sigma)
    sigma_inv = cho_solve(chol, np.eye(scenario.B))
    sigma_inv = 0.5 * (sigma_inv + sigma_inv.T)
    shift = (a_arr - scenario.mu_A) * (d / s)            # rows of D S^-1 (a - mu_A)
    mean2 = scenario.mu_C + shift @ sigma_inv.T
    cdf = _mvn_cdf(scenario.m - mean2, sigma_inv)
    out = np.atleast_1d(x1.pdf(a_arr)) * cdf / p
    return float(out[0]) if single else out


def gauss_legendre_integral(fn, lows, highs, n_nodes: int = 200) -> float:
    """Tensor Gauss-Legendre integral of a vectorised density over a box (B <= 2)."""
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    lows, highs = np.atleast_1d(lows), np.atleast_1d(highs)
    half, mid = (highs - lows) / 2, (highs + lows) / 2
    axes = [mid[i] + half[i] * nodes for i in range(lows.size)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, lows.size)
    w = weights
    for _ in range(lows.size - 1):
        w = np.multiply.outer(w, weights)
    return float(np.sum(fn(grid) * w.reshape(-1)) * np.prod(half))


def density_normalisation(scenario: TruncationScenario, width: float = 8.0, n_nodes: int = 200) -> float:
    """Integral of :func:`conditional_density` over mu_A +/- width * sd."""
    if scenario.B > 2:
        raise InputValidationError("quadrature normalisation is implemented for B <= 2")
    sd = np.sqrt(scenario.Sigma_A_diag)
    return gauss_legendre_integral(lambda g: conditional_density(scenario, g),
                                   scenario.mu_A - width * sd, scenario.mu_A + width * sd, n_nodes)


# ---------------------------------------------------------------- moments
def esg_variance(mu_A_j, Sigma_A_jj, mu_C_j, Sigma_C_jj, rho_j, m) -> float:
    """Var(A_j | C_j < m) = Sigma_A_jj (1 - rho^2 h(g) (g + h(g))), g = (m - mu_C_j)/sd_C_j."""
    g = (m - mu_C_j) / np.sqrt(Sigma_C_jj)
    return float(Sigma_A_jj * np.exp(log_one_minus_rho2_product(g, rho_j)))


def ig_approx(scenario: TruncationScenario) -> float:
    """Analytic lower bound on H(A) - H(A | max C < m)."""
    corr = correlation_from_covariance(scenario.Sigma_A)
    _, logdet = np.linalg.slogdet(corr)
    return float(0.5 * logdet - 0.5 * np.sum(log_one_minus_rho2_product(scenario.gamma, scenario.rho)))


# ----------------------------------------------------------- entropy oracle
def knn_entropy(samples: np.ndarray, n_boot: int = 200, seed=0) -> tuple[float, float]:
    """Kozachenko-Leonenko entropy estimate (k = 1) and a bootstrap standard error.

    The standard error resamples the per-point log nearest-neighbour distances,
    which sidesteps zero distances from duplicated bootstrap points.
    """
    x = np.asarray(samples, dtype=float)
    n, d = x.shape
    dist, _ = cKDTree(x).query(x, k=2)
    eps = np.maximum(dist[:, 1], np.finfo(float).tiny)
    logs = np.log(eps)
    log_unit_ball = 0.5 * d * np.log(np.pi) - special.gammaln(0.5 * d + 1)
    const = special.digamma(n) - special.digamma(1) + log_unit_ball
    h = const + d * logs.mean()
    rng = np.random.default_rng(seed)
    boots = np.array([logs[rng.integers(0, n, n)].mean() for _ in range(n_boot)])
    return float(h), float(d * boots.std(ddof=1))


@dataclass(frozen=True)
class InformationGainEstimate:
    value: float
    standard_error: float
    n_samples: int
    estimator: str = ENTROPY_ESTIMATOR


def mc_information_gain(scenario: TruncationScenario, n_samples: int = 200_000, seed=0) -> InformationGainEstimate:
    """Monte Carlo estimate of H(A) - H(A | max C < m).

    H(A) is the exact Gaussian entropy; the conditional entropy comes from
    :func:`knn_entropy` on rejection samples whitened by the Cholesky factor of
    Sigma_A (the log-determinant of the map is added back).
    """
    if scenario.B > 3:
        raise InputValidationError("the nearest-neighbour oracle is only trusted for B <= 3")
    cov = scenario.Sigma_A
    chol = np.linalg.cholesky(cov)
    draws = rejection_sample_conditional(scenario, n_samples, seed).A
    white = np.linalg.solve(chol, (draws - scenario.mu_A).T).T
    h_white, se = knn_entropy(white, seed=seed)
    log_jac = float(np.sum(np.log(np.diag(chol))))
    h_cond = h_white + log_jac
    h_prior = 0.5 * scenario.B * np.log(2 * np.pi * np.e) + log_jac
    return InformationGainEstimate(float(h_prior - h_cond), se, n_samples)


# ------------------------------------------------------------------ report
@dataclass(frozen=True)
class BoundRecord:
    scenario: str
    B: int
    ig_approx: float
    ig_mc: float
    standard_error: float
    passed: bool
    estimator: str = ENTROPY_ESTIMATOR


def check_lower_bound(scenario: TruncationScenario, n_samples: int = 200_000, seed=0,
                      n_se: float = 3.0) -> BoundRecord:
    approx = ig_approx(scenario)
    est = mc_information_gain(scenario, n_samples, seed)
    ok = approx <= est.value + n_se * est.standard_error
    return BoundRecord(scenario.digest(), scenario.B, approx, est.value, est.standard_error, bool(ok))


def lower_bound_suite(n_scenarios: int = 50, seed=0, n_samples: int = 200_000) -> list[BoundRecord]:
    """Random scenarios cycling through B = 1, 2, 3."""
    ss = np.random.SeedSequence(seed)
    records = []
    for i, child in enumerate(ss.spawn(n_scenarios)):
        rng = np.random.default_rng(child)
        sc = random_scenario(1 + i % 3, rng)
        records.append(check_lower_bound(sc, n_samples, seed=int(rng.integers(2**31))))
    return records


def write_report(records, stream) -> None:
    """One JSON object per line."""
    for r in records:
        stream.write(json.dumps(asdict(r), sort_keys=True) + "\n")
