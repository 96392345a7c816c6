"""Numerically careful standard-normal helpers.

Everything here is vectorised over numpy arrays.  The central quantity is the
hazard (inverse Mills ratio) ``h(g) = phi(g) / Phi(g)`` of an upper-truncated
standard normal, together with the variance ratio ``1 - h(g) * (g + h(g))`` of
``Z | Z < g``.
"""

from __future__ import annotations

import numpy as np
from scipy import special

_SQRT2 = np.sqrt(2.0)
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_TINY = np.finfo(float).tiny

# below this the truncated variance comes from its asymptotic series
_ASYMPTOTIC_LOWER = -25.0
# above this erfcx overflows; use exp(log phi - log Phi) instead
_ASYMPTOTIC_UPPER = 30.0


def norm_pdf(x):
    return np.exp(-0.5 * np.square(x) - _LOG_SQRT_2PI)


def norm_logpdf(x):
    return -0.5 * np.square(x) - _LOG_SQRT_2PI


def norm_cdf(x):
    return special.ndtr(x)


def norm_logcdf(x):
    return special.log_ndtr(x)


def hazard(gamma):
    """phi(gamma) / Phi(gamma), strictly positive for finite input.

    Uses ``sqrt(2/pi) / erfcx(-gamma/sqrt(2))`` on the bulk of the line and
    ``exp(log phi - log Phi)`` for large gamma where erfcx would overflow.  The
    result is floored at the smallest normal double so it never underflows to 0.
    """
    g = np.asarray(gamma, dtype=float)
    shape = g.shape
    g = g.reshape(-1)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        h = _SQRT_2_OVER_PI / special.erfcx(-g / _SQRT2)
        upper = g > _ASYMPTOTIC_UPPER
        if np.any(upper):
            gu = g[upper]
            h[upper] = np.exp(norm_logpdf(gu) - special.log_ndtr(gu))
    if not np.all(np.isfinite(g)):
        h = np.where(np.isposinf(g), 0.0, h)
        h = np.where(np.isneginf(g), np.inf, h)
    h = np.where(np.isfinite(g), np.maximum(h, _TINY), h).reshape(shape)
    return h if h.ndim else float(h)


def truncated_variance_ratio(gamma):
    """Var(Z | Z < gamma) for standard normal Z, i.e. ``1 - h (gamma + h)``.

    For gamma < -25 the direct formula loses digits to cancellation and the
    series ``1/t^2 - 6/t^4 + 50/t^6 - 518/t^8 + 6354/t^10 - 89782/t^12``
    (t = -gamma) is used instead.
    """
    g = np.asarray(gamma, dtype=float)
    r = _ratio_from_hazard(g, hazard(np.where(np.isfinite(g), g, 0.0)))
    return r if r.ndim else float(r)


def _ratio_from_hazard(g, h):
    with np.errstate(over="ignore", invalid="ignore"):
        direct = 1.0 - h * (g + h)
        t2 = 1.0 / np.square(np.minimum(g, -1.0))
        series = t2 * (1.0 - t2 * (6.0 - t2 * (50.0 - t2 * (518.0 - t2 * (6354.0 - 89782.0 * t2)))))
    r = np.where(g < _ASYMPTOTIC_LOWER, series, direct)
    r = np.where(np.isposinf(g), 1.0, r)
    r = np.where(np.isneginf(g), 0.0, r)
    return np.clip(r, 0.0, 1.0)


def _product_and_ratio(g):
    h = hazard(np.where(np.isfinite(g), g, 0.0))
    r = _ratio_from_hazard(g, h)
    with np.errstate(over="ignore", invalid="ignore"):
        p = h * (g + h)
    p = np.where(p > 0.5, 1.0 - r, p)
    finite = np.isfinite(g)
    p = np.where(finite, np.clip(p, _TINY, np.nextafter(1.0, 0.0)), np.where(g > 0, 0.0, 1.0))
    return p, r


def hazard_product(gamma):
    """``h(gamma) * (gamma + h(gamma))`` kept inside (0, 1) for finite gamma."""
    p, _ = _product_and_ratio(np.asarray(gamma, dtype=float))
    return p if p.ndim else float(p)


def log_one_minus_rho2_product(gamma, rho):
    """``log(1 - rho^2 h(gamma)(gamma + h(gamma)))`` without cancellation."""
    g = np.asarray(gamma, dtype=float)
    rho2 = np.square(np.asarray(rho, dtype=float))
    p, r = _product_and_ratio(g)
    with np.errstate(divide="ignore"):
        small = np.log1p(-rho2 * p)
        large = np.log((1.0 - rho2) + rho2 * r)
    out = np.where(p < 0.5, small, large)
    return out if out.ndim else float(out)


def mes_term(gamma):
    """Entropy reduction ``gamma phi/(2 Phi) - log Phi`` from upper truncation."""
    g = np.asarray(gamma, dtype=float)
    h = hazard(np.where(np.isfinite(g), g, 0.0))
    with np.errstate(invalid="ignore"):
        out = 0.5 * g * h - special.log_ndtr(g)
    out = np.where(np.isposinf(g), 0.0, out)
    return out if out.ndim else float(out)


def bivariate_normal_cdf(h, k, r):
    """P(X <= h, Y <= k) for a standard bivariate normal with correlation r.

    Owen's T representation; exact up to the accuracy of ``scipy.special.owens_t``.
    """
    h, k, r = np.broadcast_arrays(
        np.asarray(h, dtype=float), np.asarray(k, dtype=float), np.asarray(r, dtype=float)
    )
    if np.any(np.abs(r) >= 1.0):
        raise ValueError("correlation must lie strictly inside (-1, 1)")
    # the representation divides by h and k; the cdf is continuous there
    h = np.where(h == 0.0, 1e-12, h)
    k = np.where(k == 0.0, 1e-12, k)
    s = np.sqrt((1.0 - r) * (1.0 + r))
    t_h = special.owens_t(h, (k - r * h) / (h * s))
    t_k = special.owens_t(k, (h - r * k) / (k * s))
    delta = np.where(h * k < 0, 0.5, 0.0)
    out = 0.5 * (special.ndtr(h) + special.ndtr(k)) - t_h - t_k - delta
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)
