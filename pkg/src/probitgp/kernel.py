"""Isotropic Matern-5/2 covariance with log-space hyperparameters.

The train-side Gram matrix carries its own diagonal jitter and lower Cholesky
factor so downstream code never refactorizes or inverts the prior covariance.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky
from scipy.spatial.distance import cdist

from .errors import FactorizationError

_SQRT5 = np.sqrt(5.0)

# jitter policy, both in units of magnitude^2
JITTER_DEFAULT = 1e-6
JITTER_CAP = 1e-2


@dataclass(frozen=True)
class Hyperparams:
    """Kernel hyperparameters, stored as (log lengthscale, log magnitude)."""

    log_lengthscale: float = 0.0
    log_magnitude: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.log_lengthscale) and np.isfinite(self.log_magnitude)):
            raise ValueError("hyperparameters must be finite")

    @property
    def lengthscale(self):
        return float(np.exp(self.log_lengthscale))

    @property
    def magnitude(self):
        return float(np.exp(self.log_magnitude))

    def as_array(self):
        return np.array([self.log_lengthscale, self.log_magnitude])


@dataclass(frozen=True)
class GramMatrix:
    """Jittered train covariance: K = base kernel + jitter * I, with chol(K)."""

    K: np.ndarray
    jitter: float
    chol: np.ndarray

    @property
    def n(self):
        return self.K.shape[0]


def _profile(r_over_ell):
    u = _SQRT5 * r_over_ell
    return (1.0 + u + u * u / 3.0) * np.exp(-u)


def matern52(x, x_other, theta):
    """Covariance between two points; inputs must share dimensionality."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_other = np.atleast_1d(np.asarray(x_other, dtype=float))
    if x.ndim != 1 or x.shape != x_other.shape:
        raise ValueError("inputs must be 1-d and of equal dimension")
    r = float(np.linalg.norm(x - x_other))
    return float(theta.magnitude ** 2 * _profile(r / theta.lengthscale))


def cross_gram(X, Z, theta):
    """Covariance block between row sets: out[i, j] = k(X[i], Z[j]). No jitter."""
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if X.ndim != 2 or Z.ndim != 2 or X.shape[1] != Z.shape[1]:
        raise ValueError("expected 2-d inputs with matching column count")
    r = cdist(X, Z) / theta.lengthscale
    return theta.magnitude ** 2 * _profile(r)


def gram(X, theta, jitter=None):
    """Train covariance with jitter escalation until Cholesky succeeds.

    jitter=None starts at the default 1e-6 * magnitude^2; an explicit value is
    tried first as given.  On failure the jitter is raised tenfold per attempt
    up to 1e-2 * magnitude^2, after which FactorizationError is raised.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-d input matrix")
    sig2 = theta.magnitude ** 2
    if jitter is None:
        ladder = [JITTER_DEFAULT * sig2]
    else:
        jitter = float(jitter)
        if not np.isfinite(jitter) or jitter < 0:
            raise ValueError("jitter must be finite and >= 0")
        ladder = [jitter]
    rung = JITTER_DEFAULT * sig2
    while rung <= JITTER_CAP * sig2 * (1.0 + 1e-12):
        if rung > ladder[-1]:
            ladder.append(rung)
        rung *= 10.0

    base = cross_gram(X, X, theta)
    eye = np.eye(X.shape[0])
    for j in ladder:
        K = base + j * eye
        try:
            L = cholesky(K, lower=True)
        except np.linalg.LinAlgError:
            continue
        K.setflags(write=False)
        L.setflags(write=False)
        return GramMatrix(K=K, jitter=j, chol=L)
    raise FactorizationError(
        "covariance not positive definite after jitter escalation to "
        f"{ladder[-1]:.3e} (n={X.shape[0]})"
    )
