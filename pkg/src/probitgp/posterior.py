"""Gaussian posterior from unnormalized exponential-family pseudo-sites.

Sites hold per-point natural parameters (lam1, lam2) with lam2 <= 0.  With
B = diag(-2 lam2) the posterior is N(m, S), S = (K^-1 + B)^-1 and m = S lam1,
assembled without ever forming K^-1 via the symmetrized factor

    A = I + B^1/2 K B^1/2,  chol(A) = L.

The same factor yields log|I + K B|, the quadratic energy term, the KL to the
prior, and the latent predictive moments, and it stays well conditioned even
when some sites are exactly zero.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .errors import FactorizationError, NumericsError
from .likelihood import DEFAULT_QUAD_ORDER, MarginalMoments, expectation_stats

# updaters clamp lam2 at or below this (keeps B positive, sites proper)
LAMBDA2_CEIL = -1e-10

# predictive variances may round slightly negative; beyond this it is an error
VAR_TOL = -1e-10


@dataclass(frozen=True)
class Sites:
    """Natural parameters of the per-point pseudo-likelihood sites."""

    lam1: np.ndarray
    lam2: np.ndarray

    def __post_init__(self):
        # copy before freezing so later caller-side mutation cannot leak in
        lam1 = np.array(self.lam1, dtype=float)
        lam2 = np.array(self.lam2, dtype=float)
        if lam1.ndim != 1 or lam1.shape != lam2.shape:
            raise ValueError("site parameters must be 1-d and aligned")
        if not (np.isfinite(lam1).all() and np.isfinite(lam2).all()):
            raise ValueError("site parameters must be finite")
        if np.any(lam2 > 0):
            raise ValueError("lam2 must be <= 0")
        lam1.setflags(write=False)
        lam2.setflags(write=False)
        object.__setattr__(self, "lam1", lam1)
        object.__setattr__(self, "lam2", lam2)

    @property
    def n(self):
        return self.lam1.size

    @staticmethod
    def zeros(n):
        return Sites(np.zeros(n), np.zeros(n))


@dataclass(frozen=True)
class GaussianPosterior:
    """Assembled posterior plus the reusable factorization cache.

    sqrt_b, chol_a (lower factor of I + B^1/2 K B^1/2), alpha = K^-1 m and
    log_det_ikb = log|I + K B| are byproducts of assembly kept for the
    energies and for prediction.
    """

    m: np.ndarray
    S: np.ndarray
    alpha: np.ndarray
    sqrt_b: np.ndarray
    chol_a: np.ndarray
    log_det_ikb: float


def assemble(K, sites):
    """Posterior N(m, S) for the given train Gram matrix and sites."""
    Km = K.K
    n = Km.shape[0]
    if sites.n != n:
        raise ValueError("site count must match the Gram matrix")
    sqrt_b = np.sqrt(-2.0 * sites.lam2)
    A = np.eye(n) + sqrt_b[:, None] * Km * sqrt_b[None, :]
    try:
        chol_a = cholesky(A, lower=True)
    except np.linalg.LinAlgError as exc:  # B >= 0 makes this near-impossible
        raise FactorizationError("posterior factorization failed") from exc
    V = solve_triangular(chol_a, sqrt_b[:, None] * Km, lower=True)
    S = Km - V.T @ V
    S = 0.5 * (S + S.T)
    m = S @ sites.lam1
    k_lam = Km @ sites.lam1
    alpha = sites.lam1 - sqrt_b * cho_solve((chol_a, True), sqrt_b * k_lam)
    log_det_ikb = 2.0 * float(np.sum(np.log(np.diag(chol_a))))
    if not (np.isfinite(m).all() and np.isfinite(S).all()):
        raise NumericsError("posterior assembly produced non-finite values")
    return GaussianPosterior(
        m=m, S=S, alpha=alpha, sqrt_b=sqrt_b, chol_a=chol_a, log_det_ikb=log_det_ikb
    )


def ep_like_energy(K, sites, post=None):
    """-1/2 log|I + K B| + 1/2 lam1' (K^-1 + B)^-1 lam1 (no site constants)."""
    if post is None:
        post = assemble(K, sites)
    return -0.5 * post.log_det_ikb + 0.5 * float(sites.lam1 @ post.m)


def prior_kl(post):
    """KL( N(m, S) || N(0, K) ) from the assembly cache alone."""
    n = post.m.size
    tri = solve_triangular(post.chol_a, np.eye(n), lower=True)
    trace_term = float(np.sum(tri * tri))          # tr(K^-1 S) = tr(A^-1)
    quad_term = float(post.m @ post.alpha)         # m' K^-1 m
    return 0.5 * (trace_term + quad_term - n + post.log_det_ikb)


def elbo(K, sites, y, quad_order=DEFAULT_QUAD_ORDER, post=None, loglik_stats=None):
    """Evidence lower bound: -KL(q || prior) + sum_i E_q[log p(y_i | f_i)].

    loglik_stats may replace the probit expectations with another per-point
    (e, g_m, g_v) provider of the same signature; the default is exact for
    this package's Bernoulli model.
    """
    if post is None:
        post = assemble(K, sites)
    y = np.asarray(y, dtype=float)
    if y.shape != post.m.shape:
        raise ValueError("labels must align with the posterior")
    v = np.diag(post.S)
    if loglik_stats is None:
        e, _, _ = expectation_stats(y, post.m, v, quad_order=quad_order)
    else:
        e, _, _ = loglik_stats(y, post.m, v)
    return float(np.sum(e)) - prior_kl(post)


def latent_predict(K, k_star, k_star_star_diag, sites, post=None):
    """Latent predictive moments at test points.

    k_star[i, j] = k(train_i, test_j); k_star_star_diag[j] = k(test_j, test_j).
    Returns MarginalMoments with aligned mean/var arrays; variances are clamped
    at zero and must not fall below -1e-10 beforehand.
    """
    if post is None:
        post = assemble(K, sites)
    k_star = np.asarray(k_star, dtype=float)
    k_ss = np.asarray(k_star_star_diag, dtype=float)
    if k_star.ndim != 2 or k_star.shape[0] != post.m.size:
        raise ValueError("k_star must be (n_train, n_test)")
    if k_ss.shape != (k_star.shape[1],):
        raise ValueError("k_star_star_diag must align with k_star columns")
    mean = k_star.T @ post.alpha
    V = solve_triangular(post.chol_a, post.sqrt_b[:, None] * k_star, lower=True)
    var = k_ss - np.sum(V * V, axis=0)
    if np.any(var < VAR_TOL):
        raise NumericsError("predictive variance fell below tolerance")
    var = np.clip(var, 0.0, None)
    return MarginalMoments(mean=mean, var=var)
