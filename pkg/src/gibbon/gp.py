"""Exact Gaussian-process regression with Cholesky factorisation.

The posterior works on internally normalised data: inputs are mapped to the
unit cube (given box bounds) and observations are standardised.  Every public
prediction is returned in the original units.

Kernels and the multi-fidelity kernel share a small duck-typed interface used
by the fitting engine:

``cov(X1, s1, X2, s2)``, ``cov_diag(X, s)``, ``cov_pair_diag(X, s1, s2)``,
``cov_and_grads(X, s)``,
``free_params()``, ``with_free_params(theta)``, ``param_bounds()``,
``random_free_params(rng)`` and ``n_levels``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .exceptions import FactorisationError, FitError, InputValidationError
from .linalg import cho_solve, clamp_psd, jittered_cholesky, solve_lower

FAMILIES = ("matern52", "rbf")
_SQRT5 = np.sqrt(5.0)
_LOG_2PI = np.log(2.0 * np.pi)

# bounds in log space, in standardised units on the unit cube
LOG_VARIANCE_BOUNDS = (np.log(1e-2), np.log(1e2))
LOG_LENGTHSCALE_BOUNDS = (np.log(1e-2), np.log(2e1))
LOG_NOISE_BOUNDS = (np.log(1e-6), np.log(1e1))
EXACT_NOISE = 1e-8


def _as_2d(points, name="points") -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None] if x.size else x.reshape(0, 1)
    if x.ndim != 2:
        raise InputValidationError(f"{name} must be a 2-d array of shape (n, d)")
    if not np.all(np.isfinite(x)):
        raise InputValidationError(f"{name} contain non-finite values")
    return x


def _fidelity_vector(fidelities, n: int) -> np.ndarray:
    if fidelities is None:
        return np.zeros(n, dtype=int)
    s = np.asarray(fidelities)
    if s.ndim == 0:
        s = np.full(n, int(s))
    if s.shape != (n,):
        raise InputValidationError("fidelities must have one entry per point")
    if s.size and (np.any(s < 0) or np.any(s != np.round(s))):
        raise InputValidationError("fidelities must be nonnegative integers")
    return s.astype(int)


@dataclass(frozen=True)
class Kernel:
    """Stationary ARD kernel, Matern-5/2 or squared-exponential."""

    family: str = "matern52"
    variance: float = 1.0
    lengthscales: tuple = (1.0,)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputValidationError(f"unknown kernel family {self.family!r}")
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "variance", float(self.variance))
        if not (np.isfinite(self.variance) and self.variance > 0):
            raise InputValidationError("kernel variance must be positive")
        if not ls or not all(np.isfinite(v) and v > 0 for v in ls):
            raise InputValidationError("lengthscales must be positive")

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    n_levels = 1

    def _scaled_sqdist(self, x1, x2):
        ls = np.asarray(self.lengthscales)
        a = x1 / ls
        b = x2 / ls
        d2 = np.sum(a * a, 1)[:, None] + np.sum(b * b, 1)[None, :] - 2.0 * a @ b.T
        return np.maximum(d2, 0.0)

    def _profile(self, d2):
        if self.family == "rbf":
            return np.exp(-0.5 * d2)
        r = np.sqrt(d2)
        return (1.0 + _SQRT5 * r + (5.0 / 3.0) * d2) * np.exp(-_SQRT5 * r)

    def __call__(self, x1, x2=None) -> np.ndarray:
        x1 = _as_2d(x1)
        x2 = x1 if x2 is None else _as_2d(x2)
        if x1.shape[1] != self.dim or x2.shape[1] != self.dim:
            raise InputValidationError("input dimension does not match the kernel")
        return self.variance * self._profile(self._scaled_sqdist(x1, x2))

    def diag(self, x) -> np.ndarray:
        return np.full(np.asarray(x).shape[0], self.variance)

    # engine interface ------------------------------------------------------
    def cov(self, x1, s1, x2, s2):
        return self.variance * self._profile(self._scaled_sqdist(x1, x2))

    def cov_diag(self, x, s):
        return np.full(x.shape[0], self.variance)

    def cov_pair_diag(self, x, s1, s2):
        return np.full(x.shape[0], self.variance)

    def cov_and_grads(self, x, s):
        """Gram matrix and its derivatives w.r.t. log variance and log lengthscales."""
        ls = np.asarray(self.lengthscales)
        diff2 = np.square((x[:, None, :] - x[None, :, :]) / ls)
        d2 = diff2.sum(-1)
        k = self.variance * self._profile(d2)
        if self.family == "rbf":
            dprof = k
        else:
            r = np.sqrt(d2)
            dprof = self.variance * (5.0 / 3.0) * (1.0 + _SQRT5 * r) * np.exp(-_SQRT5 * r)
        grads = [k] + [dprof * diff2[:, :, q] for q in range(self.dim)]
        return k, grads

    def free_params(self) -> np.ndarray:
        return np.log(np.r_[self.variance, self.lengthscales])

    def with_free_params(self, theta) -> "Kernel":
        theta = np.asarray(theta, dtype=float)
        return replace(self, variance=float(np.exp(theta[0])), lengthscales=tuple(np.exp(theta[1:])))

    def param_bounds(self) -> list:
        return [LOG_VARIANCE_BOUNDS] + [LOG_LENGTHSCALE_BOUNDS] * self.dim

    def random_free_params(self, rng) -> np.ndarray:
        return np.r_[rng.uniform(np.log(0.2), np.log(5.0)), rng.uniform(np.log(0.05), np.log(2.0), self.dim)]


@dataclass(frozen=True)
class Dataset:
    """Observed inputs and values, optionally tagged with fidelity levels."""

    inputs: np.ndarray
    observations: np.ndarray
    noise_variance: float = 0.0
    fidelities: np.ndarray | None = None

    def __post_init__(self):
        x = np.array(self.inputs, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if x.size else x.reshape(0, 1)
        y = np.array(self.observations, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise InputValidationError("inputs and observations must have equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InputValidationError("dataset contains non-finite values")
        if not (np.isfinite(self.noise_variance) and self.noise_variance >= 0):
            raise InputValidationError("noise_variance must be nonnegative")
        s = _fidelity_vector(self.fidelities, y.shape[0]).copy()
        x.setflags(write=False)
        y.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "observations", y)
        object.__setattr__(self, "fidelities", s)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    def __len__(self) -> int:
        return self.observations.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def append(self, inputs, observations, fidelities=None) -> "Dataset":
        x = _as_2d(inputs, "inputs")
        y = np.asarray(observations, dtype=float).reshape(-1)
        s = _fidelity_vector(fidelities, y.shape[0])
        return Dataset(
            np.vstack([self.inputs, x]) if len(self) else x,
            np.r_[self.observations, y],
            self.noise_variance,
            np.r_[self.fidelities, s].astype(int),
        )


@dataclass(frozen=True)
class CandidateStats:
    """Per-candidate predictive moments, all in original units.

    ``var_A`` is the observation variance at the candidate's fidelity (noise
    included), ``var_C`` the latent objective variance, ``cov_AC`` their
    covariance.  ``V_A`` / ``V_C`` are the whitened cross-covariances with the
    training set, kept so that cross terms with other candidates are cheap.
    """

    x: np.ndarray
    s: np.ndarray
    mu_A: np.ndarray
    var_A: np.ndarray
    mu_C: np.ndarray
    var_C: np.ndarray
    cov_AC: np.ndarray
    V_A: np.ndarray = field(repr=False)

    @property
    def rho(self) -> np.ndarray:
        return _safe_rho(self.cov_AC, self.var_A, self.var_C, self.s == 0)


def _safe_rho(cov, var_a, var_c, same_level):
    den = np.sqrt(np.maximum(var_a, 0.0) * np.maximum(var_c, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(den > 0, cov / den, 0.0)
        # at the objective level the observation is f + noise
        direct = np.where(var_a > 0, np.sqrt(np.maximum(var_c, 0.0) / var_a), 1.0)
    rho = np.where(same_level, direct, rho)
    return np.clip(rho, -1.0, 1.0)


@dataclass(frozen=True)
class PredictiveBundle:
    """Joint predictive quantities of a candidate batch (original units)."""

    mu_A: np.ndarray
    Sigma_A: np.ndarray
    mu_C: np.ndarray
    Sigma_C: np.ndarray
    rho: np.ndarray


@dataclass(frozen=True)
class GPPosterior:
    """Conditioned GP.  Immutable; build a new one to add data.

    ``kernel`` and ``noise`` live in standardised units on the normalised
    inputs; ``y_shift`` / ``y_scale`` and ``x_lower`` / ``x_span`` map back.
    ``noise`` holds one variance per fidelity level.
    """

    kernel: object
    dataset: Dataset
    noise: np.ndarray
    factorisation: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    x_lower: np.ndarray = field(repr=False)
    x_span: np.ndarray = field(repr=False)
    y_shift: float = 0.0
    y_scale: float = 1.0
    jitter: float = 0.0
    learn_noise: bool = True

    # ------------------------------------------------------------------ helpers
    @property
    def n_levels(self) -> int:
        return int(getattr(self.kernel, "n_levels", 1))

    @property
    def noise_variance(self) -> np.ndarray:
        """Per-level observation noise in original units."""
        return self.noise * self.y_scale**2

    def normalise(self, points) -> np.ndarray:
        return (_as_2d(points) - self.x_lower) / self.x_span

    def _train_x(self):
        return (self.dataset.inputs - self.x_lower) / self.x_span

    def _check(self, points, fidelities):
        x = _as_2d(points)
        if x.shape[0] == 0:
            raise InputValidationError("points must be nonempty")
        if x.shape[1] != self.dataset.dim:
            raise InputValidationError("point dimension does not match the data")
        s = _fidelity_vector(fidelities, x.shape[0])
        if np.any(s >= self.n_levels):
            raise InputValidationError("fidelity index outside the model's levels")
        return (x - self.x_lower) / self.x_span, s

    def _cross(self, z, s):
        zt = self._train_x()
        if zt.shape[0] == 0:
            return np.zeros((0, z.shape[0]))
        return self.kernel.cov(zt, self.dataset.fidelities, z, s)

    # -------------------------------------------------------------- prediction
    def predict_joint(self, points, fidelities=None, *, clamp: bool = True):
        """Latent mean vector and covariance at ``points`` (original units)."""
        z, s = self._check(points, fidelities)
        kx = self._cross(z, s)
        v = solve_lower(self.factorisation, kx) if kx.shape[0] else kx
        mean = kx.T @ self.weights
        cov = self.kernel.cov(z, s, z, s) - v.T @ v
        cov = 0.5 * (cov + cov.T)
        if clamp:
            cov = clamp_psd(cov)
        return self.y_shift + self.y_scale * mean, cov * self.y_scale**2

    def predict_marginal(self, points, fidelities=None):
        """Latent means and variances, vectorised over many points."""
        z, s = self._check(points, fidelities)
        kx = self._cross(z, s)
        mean = kx.T @ self.weights
        var = self.kernel.cov_diag(z, s)
        if kx.shape[0]:
            v = solve_lower(self.factorisation, kx)
            var = var - np.einsum("ij,ij->j", v, v)
        var = np.maximum(var, 0.0)
        return self.y_shift + self.y_scale * mean, var * self.y_scale**2

    def candidate_stats(self, points, fidelities=None) -> CandidateStats:
        z, s = self._check(points, fidelities)
        zero = np.zeros_like(s)
        k_a = self._cross(z, s)
        var_a = self.kernel.cov_diag(z, s)
        var_c = self.kernel.cov_diag(z, zero)
        k_ac = self.kernel.cov_pair_diag(z, s, zero)
        mu_a = k_a.T @ self.weights
        if k_a.shape[0]:
            v_a = solve_lower(self.factorisation, k_a)
            var_a = var_a - np.einsum("ij,ij->j", v_a, v_a)
        else:
            v_a = k_a
        if np.any(s):
            k_c = self._cross(z, zero)
            mu_c = k_c.T @ self.weights
            v_c = solve_lower(self.factorisation, k_c) if k_c.shape[0] else k_c
            var_c = var_c - np.einsum("ij,ij->j", v_c, v_c)
            k_ac = k_ac - np.einsum("ij,ij->j", v_a, v_c)
        else:
            mu_c, var_c, k_ac = mu_a, var_a, var_a
        var_a = np.maximum(var_a, 0.0)
        var_c = np.maximum(var_c, 0.0)
        k_ac = np.where(s == 0, var_c, k_ac)
        sc2 = self.y_scale**2
        return CandidateStats(
            x=z,
            s=s,
            mu_A=self.y_shift + self.y_scale * mu_a,
            var_A=(var_a + self.noise[s]) * sc2,
            mu_C=self.y_shift + self.y_scale * mu_c,
            var_C=var_c * sc2,
            cov_AC=k_ac * sc2,
            V_A=v_a,
        )

    def cross_observation_cov(self, a: CandidateStats, b: CandidateStats) -> np.ndarray:
        """Cov(A_a, A_b) between two candidate sets, ignoring noise (distinct queries)."""
        prior = self.kernel.cov(a.x, a.s, b.x, b.s)
        if a.V_A.shape[0]:
            prior = prior - a.V_A.T @ b.V_A
        return prior * self.y_scale**2

    def bundle(self, points, fidelities=None) -> PredictiveBundle:
        """Joint predictive quantities for a candidate batch."""
        z, s = self._check(points, fidelities)
        zero = np.zeros_like(s)
        k_a = self._cross(z, s)
        k_c = self._cross(z, zero)
        kaa = self.kernel.cov(z, s, z, s)
        kcc = self.kernel.cov(z, zero, z, zero)
        kac = self.kernel.cov_pair_diag(z, s, zero)
        mu_a = k_a.T @ self.weights
        mu_c = k_c.T @ self.weights
        if k_a.shape[0]:
            v_a = solve_lower(self.factorisation, k_a)
            v_c = solve_lower(self.factorisation, k_c)
            kaa = kaa - v_a.T @ v_a
            kcc = kcc - v_c.T @ v_c
            kac = kac - np.einsum("ij,ij->j", v_a, v_c)
        sigma_c = clamp_psd(kcc)
        latent_a = clamp_psd(kaa)
        sigma_a = latent_a + np.diag(self.noise[s])
        var_a = np.diag(sigma_a)
        var_c = np.diag(sigma_c)
        kac = np.where(s == 0, var_c, kac)
        rho = _safe_rho(kac, var_a, var_c, s == 0)
        sc2 = self.y_scale**2
        return PredictiveBundle(
            mu_A=self.y_shift + self.y_scale * mu_a,
            Sigma_A=sigma_a * sc2,
            mu_C=self.y_shift + self.y_scale * mu_c,
            Sigma_C=sigma_c * sc2,
            rho=rho,
        )

    def mean_gradient_norm(self, points) -> np.ndarray:
        """Euclidean norm of the posterior-mean gradient (original units) at level 0."""
        x = _as_2d(points)
        eps = 1e-5
        z, _ = self._check(x, None)
        grads = np.empty_like(z)
        for q in range(z.shape[1]):
            step = np.zeros(z.shape[1])
            step[q] = eps
            up, _ = self.predict_marginal((z + step) * self.x_span + self.x_lower)
            dn, _ = self.predict_marginal((z - step) * self.x_span + self.x_lower)
            grads[:, q] = (up - dn) / (2 * eps * self.x_span[q])
        return np.linalg.norm(grads, axis=1)

    # ------------------------------------------------------------ likelihood
    def log_marginal_likelihood(self) -> float:
        """Gaussian log-density of the observations, in original units."""
        y = self._standardised_y()
        n = y.shape[0]
        if n == 0:
            return 0.0
        lml = (
            -0.5 * float(y @ self.weights)
            - float(np.sum(np.log(np.diag(self.factorisation))))
            - 0.5 * n * _LOG_2PI
        )
        return lml - n * np.log(self.y_scale)

    def _standardised_y(self):
        return (self.dataset.observations - self.y_shift) / self.y_scale

    def with_data(self, dataset: Dataset) -> "GPPosterior":
        """Recondition on ``dataset`` keeping hyperparameters and transforms."""
        return _build(
            self.kernel, dataset, self.noise, self.x_lower, self.x_span,
            self.y_shift, self.y_scale, self.learn_noise,
        )


# ---------------------------------------------------------------- construction
def _build(kernel, dataset, noise, x_lower, x_span, y_shift, y_scale, learn_noise=True):
    z = (dataset.inputs - x_lower) / x_span
    y = (dataset.observations - y_shift) / y_scale
    s = dataset.fidelities
    noise = np.asarray(noise, dtype=float)
    if len(dataset):
        gram = kernel.cov(z, s, z, s) + np.diag(noise[s])
        chol, jitter = jittered_cholesky(gram)
        weights = cho_solve(chol, y)
    else:
        chol, jitter, weights = np.zeros((0, 0)), 0.0, np.zeros(0)
    return GPPosterior(
        kernel=kernel,
        dataset=dataset,
        noise=noise,
        factorisation=chol,
        weights=weights,
        x_lower=np.asarray(x_lower, dtype=float),
        x_span=np.asarray(x_span, dtype=float),
        y_shift=float(y_shift),
        y_scale=float(y_scale),
        jitter=jitter,
        learn_noise=learn_noise,
    )


def _input_transform(dataset, input_bounds):
    d = dataset.dim
    if input_bounds is None:
        return np.zeros(d), np.ones(d)
    b = np.asarray(input_bounds, dtype=float)
    if b.shape != (d, 2) or np.any(b[:, 1] <= b[:, 0]):
        raise InputValidationError("input_bounds must be a (d, 2) array with lo < hi")
    return b[:, 0], b[:, 1] - b[:, 0]


def _output_transform(y):
    if y.size == 0:
        return 0.0, 1.0
    shift = float(np.mean(y))
    scale = float(np.std(y))
    if not scale > 1e-12 * max(1.0, abs(shift)):
        scale = 1.0
    return shift, scale


def _noise_vector(noise, n_levels):
    v = np.broadcast_to(np.asarray(noise, dtype=float), (n_levels,)).copy()
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise InputValidationError("noise variances must be nonnegative")
    return v


def condition(dataset: Dataset, kernel, noise_variance=None, *, input_bounds=None,
              standardize: bool = False) -> GPPosterior:
    """Condition a GP with fixed hyperparameters.

    ``noise_variance`` (scalar or per level, original units) defaults to the
    dataset's.  Without ``standardize`` and ``input_bounds`` this is plain GP
    algebra on the raw data.
    """
    x_lower, x_span = _input_transform(dataset, input_bounds)
    shift, scale = _output_transform(dataset.observations) if standardize else (0.0, 1.0)
    nv = dataset.noise_variance if noise_variance is None else noise_variance
    noise = _noise_vector(nv, getattr(kernel, "n_levels", 1)) / scale**2
    if len(dataset) and np.any(dataset.fidelities >= getattr(kernel, "n_levels", 1)):
        raise InputValidationError("dataset references a fidelity the kernel does not model")
    return _build(kernel, dataset, noise, x_lower, x_span, shift, scale)


def _neg_lml_and_grad(theta, kernel, z, s, y, n_levels, learn_noise, fixed_noise):
    nk = kernel.free_params().size
    kern = kernel.with_free_params(theta[:nk])
    noise = np.exp(theta[nk:]) if learn_noise else fixed_noise
    k, grads = kern.cov_and_grads(z, s)
    k = k + np.diag(noise[s])
    try:
        chol, _ = jittered_cholesky(k)
    except FactorisationError:
        return 1e25, np.zeros_like(theta)
    alpha = cho_solve(chol, y)
    n = y.shape[0]
    lml = -0.5 * y @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * n * _LOG_2PI
    kinv = cho_solve(chol, np.eye(n))
    w = np.outer(alpha, alpha) - kinv
    g = [0.5 * np.sum(w * dk) for dk in grads]
    if learn_noise:
        wd = np.diag(w)
        for level in range(n_levels):
            g.append(0.5 * noise[level] * np.sum(wd[s == level]))
    return -lml, -np.asarray(g)


def fit_hyperparameters(dataset: Dataset, kernel_init, *, learn_noise: bool = True,
                        noise_init=None, input_bounds=None, restarts: int = 8,
                        seed=0, warm_start: GPPosterior | None = None) -> GPPosterior:
    """Maximise the log marginal likelihood from several starts (L-BFGS-B).

    Starts: the warm-start posterior's parameters if given, ``kernel_init``,
    then random draws until ``restarts`` starts have been run.
    """
    n = len(dataset)
    if n < 1:
        raise InputValidationError("fitting needs at least one observation")
    n_levels = int(getattr(kernel_init, "n_levels", 1))
    if np.any(dataset.fidelities >= n_levels):
        raise InputValidationError("dataset references a fidelity the kernel does not model")
    x_lower, x_span = _input_transform(dataset, input_bounds)
    shift, scale = _output_transform(dataset.observations)
    z = (dataset.inputs - x_lower) / x_span
    y = (dataset.observations - shift) / scale
    s = dataset.fidelities

    if learn_noise:
        base_noise = 1e-2 if noise_init is None else noise_init
        noise0 = np.clip(_noise_vector(base_noise, n_levels) / scale**2, 1e-6, 10.0)
        fixed = None
    else:
        nv = dataset.noise_variance if noise_init is None else noise_init
        fixed = np.maximum(_noise_vector(nv, n_levels) / scale**2, EXACT_NOISE)
        noise0 = fixed

    bounds = list(kernel_init.param_bounds())
    if learn_noise:
        bounds += [LOG_NOISE_BOUNDS] * n_levels
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def pack(kern, noise):
        t = kern.free_params()
        return np.r_[t, np.log(noise)] if learn_noise else t

    rng = np.random.default_rng(seed)
    starts = []
    if warm_start is not None and type(warm_start.kernel) is type(kernel_init):
        warm_noise = warm_start.noise * warm_start.y_scale**2 / scale**2
        starts.append(pack(warm_start.kernel, np.clip(warm_noise, 1e-6, 10.0)))
    starts.append(pack(kernel_init, noise0))
    while len(starts) < max(restarts, 1):
        t = kernel_init.random_free_params(rng)
        if learn_noise:
            t = np.r_[t, rng.uniform(np.log(1e-4), np.log(0.3), n_levels)]
        starts.append(t)

    best_theta, best_val = None, np.inf
    args = (kernel_init, z, s, y, n_levels, learn_noise, fixed)
    for t0 in starts:
        t0 = np.clip(t0, lo, hi)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = optimize.minimize(
                _neg_lml_and_grad, t0, args=args, jac=True, method="L-BFGS-B",
                bounds=bounds, options={"maxiter": 200},
            )
        if np.isfinite(res.fun) and res.fun < best_val:
            best_val, best_theta = float(res.fun), res.x
    if best_theta is None:
        raise FitError("marginal-likelihood optimisation failed from every start")

    nk = kernel_init.free_params().size
    kernel = kernel_init.with_free_params(best_theta[:nk])
    noise = np.exp(best_theta[nk:]) if learn_noise else fixed
    return _build(kernel, dataset, noise, x_lower, x_span, shift, scale, learn_noise)


def fit(dataset: Dataset, kernel_init: Kernel | None = None, **kwargs) -> GPPosterior:
    """Fit a single-fidelity GP by marginal-likelihood maximisation.

    Keyword arguments are passed to :func:`fit_hyperparameters`.  Noise is
    learned unless ``learn_noise=False``, in which case the dataset's noise
    variance is used (floored at a tiny nugget).
    """
    if kernel_init is None:
        kernel_init = Kernel(lengthscales=(0.3,) * dataset.dim)
    if kernel_init.dim != dataset.dim:
        raise InputValidationError("kernel dimension does not match the data")
    if len(dataset) and np.any(dataset.fidelities != 0):
        raise InputValidationError("single-fidelity fit got fidelity-tagged data")
    return fit_hyperparameters(dataset, kernel_init, **kwargs)


def predict_joint(posterior: GPPosterior, points, fidelities=None):
    return posterior.predict_joint(points, fidelities)


def log_marginal_likelihood(posterior: GPPosterior) -> float:
    return posterior.log_marginal_likelihood()
