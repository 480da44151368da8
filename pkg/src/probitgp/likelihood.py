"""Probit Bernoulli likelihood for labels in {-1, +1}.

Exact log-likelihood and its Gaussian expectations (Gauss-Hermite), the
closed-form tilted moments used by EP, and the predictive class probability.
All cumulative-normal work goes through log_ndtr so nothing underflows for
|f| well past 30.
"""

from typing import NamedTuple

import numpy as np
from scipy.special import log_ndtr, ndtr

DEFAULT_QUAD_ORDER = 50

_LOG_2PI = np.log(2.0 * np.pi)

_hermgauss_cache = {}


class MarginalMoments(NamedTuple):
    """Mean and variance of a Gaussian marginal (scalars or aligned arrays)."""

    mean: float
    var: float


class ExpectationStats(NamedTuple):
    """E[log p(y|f)] and its derivatives w.r.t. the marginal mean and variance."""

    e: float
    g_m: float
    g_v: float


def _check_labels(y):
    y = np.asarray(y, dtype=float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must lie in {-1, +1}")
    return y


def _norm_logpdf(z):
    return -0.5 * (z * z + _LOG_2PI)


def _phi_over_cdf(z):
    # phi(z)/Phi(z), stable for z far into the left tail
    return np.exp(_norm_logpdf(z) - log_ndtr(z))


def log_lik(y, f):
    """log p(y|f) = log Phi(y f) for a single point."""
    y = float(y)
    if y not in (-1.0, 1.0):
        raise ValueError("labels must lie in {-1, +1}")
    if not np.isfinite(f):
        raise ValueError("latent value must be finite")
    return float(log_ndtr(y * f))


def _quad_nodes(order):
    if order < 3:
        raise ValueError("quadrature order must be >= 3")
    if order not in _hermgauss_cache:
        x, w = np.polynomial.hermite.hermgauss(order)
        _hermgauss_cache[order] = (x, w / np.sqrt(np.pi))
    return _hermgauss_cache[order]


def expectation_stats(y, mean, var, quad_order=DEFAULT_QUAD_ORDER):
    """Vectorized E[log Phi(y f)], dE/dmean, dE/dvar under f ~ N(mean, var).

    The mean derivative integrates d/df log Phi(y f); the variance derivative
    is half the expected second derivative.  Zero-variance entries collapse to
    the exact point evaluation.
    """
    y = _check_labels(np.atleast_1d(y))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    var = np.atleast_1d(np.asarray(var, dtype=float))
    if not (y.shape == mean.shape == var.shape):
        raise ValueError("y, mean, var must align")
    if np.any(var < 0):
        raise ValueError("variances must be >= 0")
    x, w = _quad_nodes(quad_order)

    f = mean[:, None] + np.sqrt(2.0 * var)[:, None] * x[None, :]
    z = y[:, None] * f
    lp = log_ndtr(z)
    ratio = _phi_over_cdf(z)
    d1 = y[:, None] * ratio           # d/df log Phi(y f)
    d2 = -ratio * (z + ratio)         # d^2/df^2, independent of y since y^2 = 1

    e = lp @ w
    g_m = d1 @ w
    g_v = 0.5 * (d2 @ w)

    point = var == 0.0
    if np.any(point):
        z0 = y[point] * mean[point]
        r0 = _phi_over_cdf(z0)
        e[point] = log_ndtr(z0)
        g_m[point] = y[point] * r0
        g_v[point] = -0.5 * r0 * (z0 + r0)
    return e, g_m, g_v


def expected_loglik(y, moments, quad_order=DEFAULT_QUAD_ORDER):
    """Scalar ExpectationStats of log p(y|f) under f ~ N(moments)."""
    e, g_m, g_v = expectation_stats(
        [y], [moments.mean], [moments.var], quad_order=quad_order
    )
    return ExpectationStats(e=float(e[0]), g_m=float(g_m[0]), g_v=float(g_v[0]))


def ep_tilted_moments(y, cavity):
    """Normalizer and moments of Phi(y f) * N(f; cavity) in closed form."""
    y = float(y)
    if y not in (-1.0, 1.0):
        raise ValueError("labels must lie in {-1, +1}")
    m, v = float(cavity.mean), float(cavity.var)
    if not (np.isfinite(m) and np.isfinite(v)) or v <= 0:
        raise ValueError("cavity must have finite mean and variance > 0")
    denom = np.sqrt(1.0 + v)
    z = y * m / denom
    log_z = float(log_ndtr(z))
    ratio = float(_phi_over_cdf(z))
    mean = m + y * v * ratio / denom
    var = v - v * v * ratio * (z + ratio) / (1.0 + v)
    var = float(np.clip(var, 1e-15 * v, v))
    return log_z, MarginalMoments(mean=float(mean), var=var)


def predictive_prob(y, moments):
    """p(y) = Phi(y mean / sqrt(1 + var)) for a latent Gaussian marginal."""
    y = float(y)
    if y not in (-1.0, 1.0):
        raise ValueError("labels must lie in {-1, +1}")
    m, v = float(moments.mean), float(moments.var)
    if v < 0:
        raise ValueError("variance must be >= 0")
    return float(ndtr(y * m / np.sqrt(1.0 + v)))
