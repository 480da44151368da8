"""Shared test utilities: quadrature oracles, random instances, data access.

Oracles here are deliberately independent of the library's own algebra:
dense tensor-product Gauss-Hermite integration, Monte Carlo, and closed-form
conjugate identities only.
"""

import os
from pathlib import Path

import numpy as np
from scipy.linalg import cholesky
from scipy.special import ndtr, roots_hermite

from probitgp import Dataset, GramMatrix, Hyperparams, gram

DATA_DIR = Path(os.environ.get("PROBITGP_DATA", Path(__file__).resolve().parent.parent / "data"))

DATASET_FILES = {
    "sonar": "sonar.csv",
    "ionosphere": "ionosphere.csv",
    "diabetes": "diabetes.csv",
}


def dataset_path(name):
    return DATA_DIR / DATASET_FILES[name]


def have_dataset(name):
    return dataset_path(name).exists()


def gram_from_matrix(K):
    """Wrap an explicit SPD matrix as a GramMatrix (no jitter added)."""
    K = np.asarray(K, dtype=float)
    return GramMatrix(K=K, jitter=0.0, chol=cholesky(K, lower=True))


def random_spd(n, rng, scale=1.0):
    """Well-conditioned random SPD matrix with unit-order diagonal."""
    A = rng.standard_normal((n, n))
    K = A @ A.T / n + 0.5 * np.eye(n)
    return scale * K


def random_sites_arrays(n, rng, lam1_range=2.0, lam2_range=(-3.0, -0.05)):
    lam1 = rng.uniform(-lam1_range, lam1_range, n)
    lam2 = rng.uniform(lam2_range[0], lam2_range[1], n)
    return lam1, lam2


def gauss_expect(fn, K, order=400):
    """E[fn(f)] under f ~ N(0, K) by tensor-product Gauss-Hermite, n <= 3.

    fn maps an (m, n) batch of states to an (m,) batch of values.  Strongly
    shifted integrands (large site shifts) converge slowly, hence the high
    default order; scipy's rule stays stable where numpy's overflows.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    n = K.shape[0]
    L = cholesky(K, lower=True)
    x, w = roots_hermite(order)
    grids = np.meshgrid(*([x] * n), indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=1) * np.sqrt(2.0)
    f = z @ L.T
    weights = np.ones(z.shape[0])
    for g in np.meshgrid(*([w] * n), indexing="ij"):
        weights *= g.ravel()
    return float(np.sum(weights * fn(f)) / np.pi ** (n / 2.0))


def probit_evidence_quadrature(Kmat, y, order=400):
    """Dense-quadrature log evidence of the probit model, for tiny n."""
    y = np.asarray(y, dtype=float)

    def integrand(f):
        return np.prod(ndtr(y[None, :] * f), axis=1)

    return float(np.log(gauss_expect(integrand, Kmat, order=order)))


def site_energy_quadrature(Kmat, lam1, lam2, order=400):
    """Dense-quadrature value of log E_N(0,K)[exp(lam1'f + f' diag(lam2) f)]."""
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)

    def integrand(f):
        return np.exp(f @ lam1 + (f * f) @ lam2)

    return float(np.log(gauss_expect(integrand, Kmat, order=order)))


def make_blobs(n, d, seed, spread=1.2):
    """Two-cluster synthetic binary dataset, labels split half/half."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.concatenate([
        rng.standard_normal((half, d)) - spread,
        rng.standard_normal((n - half, d)) + spread,
    ])
    y = np.concatenate([-np.ones(half), np.ones(n - half)])
    perm = rng.permutation(n)
    return Dataset(name=f"blobs{n}x{d}", X=X[perm], y=y[perm])


def make_probit_gp(n, d, seed, theta=None):
    """Labels sampled from the generative model itself at the given theta."""
    theta = theta or Hyperparams(0.0, 0.0)
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2.0, 2.0, (n, d))
    K = gram(X, theta)
    f = K.chol @ rng.standard_normal(n)
    y = np.where(rng.uniform(size=n) < ndtr(f), 1.0, -1.0)
    if np.all(y == y[0]):  # one-class draw; flip the extreme point
        y[np.argmin(f)] = -y[0]
    return Dataset(name=f"gp{n}x{d}", X=X, y=y)


def gaussian_loglik_stats(noise_var, targets):
    """Per-point expectations for a conjugate Gaussian likelihood surrogate.

    Closed form: E[log N(t | f, s)] under f ~ N(m, v) is
    -((t - m)^2 + v) / (2 s) - log(2 pi s)/2, with g_m = (t - m)/s and
    g_v = -1/(2 s).
    """
    targets = np.asarray(targets, dtype=float)

    def stats(y, m, v):
        e = -((targets - m) ** 2 + v) / (2.0 * noise_var) - 0.5 * np.log(2.0 * np.pi * noise_var)
        g_m = (targets - m) / noise_var
        g_v = np.full_like(m, -0.5 / noise_var)
        return e, g_m, g_v

    return stats
