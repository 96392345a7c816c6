"""Linear multi-fidelity GP over discrete fidelity levels.

Level 0 is the true objective.  Cheaper levels are generated from it by the
autoregressive recursion ``f_l = rho_l * f_{l-1} + delta_l`` with independent
GP discrepancies ``delta_l`` (``f_0 = delta_0``).  Because every level is the
objective at the same location plus independent noise processes, an
observation at ``(x, l)`` depends on the objective only through ``f_0(x)``:
the Markov property needed by the batch information bound holds by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import FitError, InputValidationError
from .gp import Dataset, GPPosterior, Kernel, PredictiveBundle, fit_hyperparameters

MIXING_BOUNDS = (-10.0, 10.0)


@dataclass(frozen=True)
class FidelityLevel:
    index: int
    query_cost: float

    def __post_init__(self):
        if self.index < 0:
            raise InputValidationError("fidelity index must be nonnegative")
        if not (np.isfinite(self.query_cost) and self.query_cost > 0):
            raise InputValidationError("query costs must be positive")


def _coefficients(mixing, n_levels):
    """a[l, i] = prod_{j=i+1..l} rho_j for i <= l, else 0."""
    a = np.zeros((n_levels, n_levels))
    for l in range(n_levels):
        for i in range(l + 1):
            a[l, i] = np.prod(mixing[i:l])  # mixing[j-1] is rho_j
    return a


def _coefficient_derivative(mixing, n_levels, j):
    """d a[l, i] / d rho_j."""
    da = np.zeros((n_levels, n_levels))
    for l in range(n_levels):
        for i in range(l + 1):
            if i < j <= l:
                others = [mixing[k - 1] for k in range(i + 1, l + 1) if k != j]
                da[l, i] = np.prod(others)
    return da


@dataclass(frozen=True)
class MFKernel:
    """Per-level base kernels plus mixing coefficients rho_1..rho_{L-1}."""

    kernels: tuple
    mixing: tuple = ()

    def __post_init__(self):
        ks = tuple(self.kernels)
        if not ks:
            raise InputValidationError("at least one level kernel is required")
        if len(self.mixing) != len(ks) - 1:
            raise InputValidationError("need one mixing coefficient per non-objective level")
        if len({k.dim for k in ks}) != 1:
            raise InputValidationError("level kernels must share the input dimension")
        object.__setattr__(self, "kernels", ks)
        object.__setattr__(self, "mixing", tuple(float(r) for r in self.mixing))

    @property
    def n_levels(self) -> int:
        return len(self.kernels)

    @property
    def dim(self) -> int:
        return self.kernels[0].dim

    @property
    def coefficients(self) -> np.ndarray:
        return _coefficients(np.asarray(self.mixing), self.n_levels)

    def cov(self, x1, s1, x2, s2):
        a = self.coefficients
        out = np.zeros((x1.shape[0], x2.shape[0]))
        for i, k in enumerate(self.kernels):
            w = np.outer(a[s1, i], a[s2, i])
            if np.any(w):
                out += w * k.cov(x1, None, x2, None)
        return out

    def cov_pair_diag(self, x, s1, s2):
        a = self.coefficients
        return sum(a[s1, i] * a[s2, i] * k.variance for i, k in enumerate(self.kernels))

    def cov_diag(self, x, s):
        return self.cov_pair_diag(x, s, s)

    def cov_and_grads(self, x, s):
        a = self.coefficients
        gram = np.zeros((x.shape[0], x.shape[0]))
        grads, bases = [], []
        for i, k in enumerate(self.kernels):
            w = np.outer(a[s, i], a[s, i])
            ki, gi = k.cov_and_grads(x, None)
            bases.append(ki)
            gram += w * ki
            grads.extend(w * g for g in gi)
        mix = np.asarray(self.mixing)
        for j in range(1, self.n_levels):
            da = _coefficient_derivative(mix, self.n_levels, j)
            dk = np.zeros_like(gram)
            for i, ki in enumerate(bases):
                w = np.outer(da[s, i], a[s, i])
                if np.any(w):
                    dk += (w + w.T) * ki
            grads.append(dk)
        return gram, grads

    def free_params(self) -> np.ndarray:
        return np.concatenate([k.free_params() for k in self.kernels] + [np.asarray(self.mixing)])

    def with_free_params(self, theta) -> "MFKernel":
        theta = np.asarray(theta, dtype=float)
        kernels, pos = [], 0
        for k in self.kernels:
            m = k.free_params().size
            kernels.append(k.with_free_params(theta[pos:pos + m]))
            pos += m
        return replace(self, kernels=tuple(kernels), mixing=tuple(theta[pos:]))

    def param_bounds(self) -> list:
        out = []
        for k in self.kernels:
            out += k.param_bounds()
        return out + [MIXING_BOUNDS] * (self.n_levels - 1)

    def random_free_params(self, rng) -> np.ndarray:
        parts = [k.random_free_params(rng) for k in self.kernels]
        for p in parts[1:]:
            p[0] -= np.log(10.0)  # discrepancies start smaller than the objective
        return np.concatenate(parts + [rng.uniform(0.5, 1.5, self.n_levels - 1)])


def default_mf_kernel(dim: int, n_levels: int, family: str = "matern52") -> MFKernel:
    base = Kernel(family, 1.0, (0.3,) * dim)
    rest = [Kernel(family, 0.1, (0.3,) * dim) for _ in range(n_levels - 1)]
    return MFKernel(tuple([base] + rest), (1.0,) * (n_levels - 1))


def mf_fit(dataset: Dataset, levels, kernel_init: MFKernel | None = None, **kwargs) -> GPPosterior:
    """Fit the multi-fidelity model by marginal-likelihood maximisation.

    ``levels`` is a sequence of :class:`FidelityLevel`; each must have data.
    Noise is one variance per level.  Remaining keyword arguments go to
    :func:`gibbon.gp.fit_hyperparameters`.
    """
    levels = sorted(levels, key=lambda lv: lv.index)
    if not levels or levels[0].index != 0:
        raise InputValidationError("level 0 (the objective) must be present")
    if [lv.index for lv in levels] != list(range(len(levels))):
        raise InputValidationError("fidelity levels must be indexed 0..L-1")
    counts = np.bincount(dataset.fidelities, minlength=len(levels)) if len(dataset) else np.zeros(len(levels))
    if counts.size > len(levels):
        raise InputValidationError("dataset references an undeclared fidelity level")
    for lv in levels:
        if counts[lv.index] == 0:
            raise FitError(f"no observations at fidelity level {lv.index}")
    if kernel_init is None:
        kernel_init = default_mf_kernel(dataset.dim, len(levels))
    if kernel_init.n_levels != len(levels) or kernel_init.dim != dataset.dim:
        raise InputValidationError("kernel does not match the levels or dimension")
    return fit_hyperparameters(dataset, kernel_init, **kwargs)


def bundle(posterior: GPPosterior, candidates, fidelities=None) -> PredictiveBundle:
    """Predictive bundle for ``(x, s)`` candidates; see :meth:`GPPosterior.bundle`."""
    return posterior.bundle(candidates, fidelities)
