"""Small dense linear-algebra helpers shared by the surrogate models."""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla

from .exceptions import FactorisationError

JITTER_START = 1e-10
JITTER_STOP = 1e-4


def jittered_cholesky(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``matrix + jitter * mean(diag) * I``.

    The jitter ladder starts at 1e-10 and grows by 10x up to 1e-4 (relative to
    the mean diagonal).  Returns the factor and the absolute jitter used.
    """
    a = np.asarray(matrix, dtype=float)
    if a.shape[0] == 0:
        return np.zeros((0, 0)), 0.0
    if not np.all(np.isfinite(a)):
        raise FactorisationError("matrix contains non-finite entries")
    scale = float(np.mean(np.diag(a)))
    if not scale > 0.0:
        scale = 1.0
    eye = np.eye(a.shape[0])
    rel = JITTER_START
    while rel <= JITTER_STOP * (1 + 1e-9):
        jitter = rel * scale
        try:
            return np.linalg.cholesky(a + jitter * eye), jitter
        except np.linalg.LinAlgError:
            rel *= 10.0
    raise FactorisationError(
        f"matrix of size {a.shape[0]} is not positive definite even with jitter "
        f"{JITTER_STOP:g} x mean diagonal"
    )


def solve_lower(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return sla.solve_triangular(chol, rhs, lower=True, check_finite=False)


def cho_solve(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return sla.cho_solve((chol, True), rhs, check_finite=False)


def clamp_psd(cov: np.ndarray) -> np.ndarray:
    """Symmetrise and clip negative eigenvalues to zero."""
    c = 0.5 * (cov + cov.T)
    if c.shape[0] == 1:
        return np.maximum(c, 0.0)
    w, v = np.linalg.eigh(c)
    if w[0] >= 0.0:
        return c
    w = np.maximum(w, 0.0)
    out = (v * w) @ v.T
    return 0.5 * (out + out.T)


def correlation_from_covariance(cov: np.ndarray) -> np.ndarray:
    sd = np.sqrt(np.maximum(np.diag(cov), 1e-300))
    corr = cov / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, -1.0, 1.0)


def clamped_logdet(corr: np.ndarray, floor: float) -> float:
    """log|R| with the eigenvalues of the symmetric matrix R floored at ``floor``."""
    if corr.shape[0] == 1:
        return float(np.log(max(corr[0, 0], floor)))
    w = np.linalg.eigvalsh(0.5 * (corr + corr.T))
    return float(np.sum(np.log(np.maximum(w, floor))))
