"""Experiment harness: hyperparameter surface sweeps, k-fold CV, paired tests.

Grid cells and (fold, method) fits are independent pure functions of their
inputs, so they run under an optional process pool; results are reduced in a
canonical order and are bitwise identical for any worker count.
"""

import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.special import log_ndtr, ndtr
from scipy.stats import t as student_t

from .ais import AisConfig, ais_lml
from .cvi import e_step
from .data import Dataset, fold_datasets, make_folds, standardize
from .ep import ep_energy, ep_inference
from .errors import NumericsError
from .kernel import Hyperparams, cross_gram, gram
from .likelihood import DEFAULT_QUAD_ORDER
from .posterior import Sites, assemble, elbo, ep_like_energy, latent_predict
from .trainer import fit

logger = logging.getLogger(__name__)

METHODS = ("vi", "ours", "ep", "mcmc")
TRAINABLE_METHODS = ("vi", "ours")

SURFACE_E_ITERS = 200


@dataclass(frozen=True)
class GridSpec:
    """Square sweep grid over (log lengthscale, log magnitude)."""

    lo: float = -1.0
    hi: float = 5.0
    points: int = 21
    methods: tuple = METHODS

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")
        if self.points < 2:
            raise ValueError("need at least 2 points per axis")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {METHODS}")

    def axis(self):
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class SweepConfig:
    """Per-cell inference budgets for surface sweeps."""

    e_iters: int = SURFACE_E_ITERS
    e_step_size: float = 0.1
    ep_sweeps: int = 100
    ep_damping: float = 0.9
    ais_steps: int = 8000
    ais_repeats: int = 3
    quad_order: int = DEFAULT_QUAD_ORDER
    jitter: float | None = None
    seed: int = 0


@dataclass(frozen=True)
class SurfaceRecord:
    log_lengthscale: float
    log_magnitude: float
    method: str
    lml_per_n: float
    lpd_per_n: float


class PairedTest(NamedTuple):
    metric: str
    method_a: str
    method_b: str
    t_statistic: float
    p_value: float


@dataclass(frozen=True)
class CvReport:
    """Per-fold metrics by method plus pairwise paired t-tests."""

    dataset: str
    k: int
    methods: tuple
    accuracy: dict
    lpd: dict
    tests: tuple

    def mean_sd(self, method, metric):
        vals = getattr(self, metric)[method]
        return float(np.mean(vals)), float(np.std(vals, ddof=1))


def _mean_lpd(K, theta, X_train, X_test, y_test, sites, post):
    k_star = cross_gram(X_train, X_test, theta)
    k_ss = np.full(X_test.shape[0], theta.magnitude ** 2)
    mm = latent_predict(K, k_star, k_ss, sites, post=post)
    return float(np.mean(log_ndtr(y_test * mm.mean / np.sqrt(1.0 + mm.var))))


def _sweep_cell(args):
    (X_train, y_train, X_test, y_test, ll, ls, methods, cfg, cell_seed) = args
    theta = Hyperparams(ll, ls)
    n = y_train.size
    records = {}
    try:
        K = gram(X_train, theta, cfg.jitter)
    except NumericsError:
        logger.warning("cell (%g, %g): covariance factorization failed", ll, ls)
        return [
            SurfaceRecord(ll, ls, m, float("nan"), float("nan")) for m in methods
        ]

    if "vi" in methods or "ours" in methods:
        try:
            sites, _ = e_step(
                K, y_train, Sites.zeros(n),
                step_size=cfg.e_step_size, iters=cfg.e_iters, quad_order=cfg.quad_order,
            )
            post = assemble(K, sites)
            lpd = _mean_lpd(K, theta, X_train, X_test, y_test, sites, post)
            if "vi" in methods:
                records["vi"] = (
                    elbo(K, sites, y_train, quad_order=cfg.quad_order, post=post) / n,
                    lpd,
                )
            if "ours" in methods:
                records["ours"] = (ep_like_energy(K, sites, post=post) / n, lpd)
        except (NumericsError, np.linalg.LinAlgError) as exc:
            logger.warning("cell (%g, %g): shared inference failed: %s", ll, ls, exc)

    if "ep" in methods:
        try:
            ep_sites, ep_post, _ = ep_inference(
                K, y_train, sweeps=cfg.ep_sweeps, damping=cfg.ep_damping
            )
            lpd = _mean_lpd(K, theta, X_train, X_test, y_test, ep_sites.sites, ep_post)
            records["ep"] = (ep_energy(K, ep_sites, post=ep_post) / n, lpd)
        except (NumericsError, np.linalg.LinAlgError) as exc:
            logger.warning("cell (%g, %g): EP failed: %s", ll, ls, exc)

    if "mcmc" in methods:
        try:
            est = ais_lml(
                K, y_train,
                AisConfig(steps=cfg.ais_steps, repeats=cfg.ais_repeats, seed=cell_seed),
            )
            records["mcmc"] = (est.log_ml / n, float("nan"))
        except (NumericsError, np.linalg.LinAlgError) as exc:
            logger.warning("cell (%g, %g): annealing failed: %s", ll, ls, exc)

    logger.info("cell (%g, %g) done", ll, ls)
    nan = float("nan")
    return [
        SurfaceRecord(ll, ls, m, *records.get(m, (nan, nan))) for m in methods
    ]


def _pmap(fn, items, jobs):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    ctx = multiprocessing.get_context("fork")
    workers = min(jobs, len(items))
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, items))


def grid_sweep(train, test, spec, cfg, jobs=1):
    """Evaluate every method on every grid cell; failures yield NaN records.

    vi and ours share one natural-gradient inference per cell, so their
    held-out predictive columns coincide exactly.  AIS seeds derive from the
    linear cell index, keeping results independent of worker scheduling.
    Records are sorted by (log lengthscale, log magnitude, method).
    """
    axis = spec.axis()
    args = []
    for i, ll in enumerate(axis):
        for j, ls in enumerate(axis):
            cell_index = i * spec.points + j
            args.append((
                train.X, train.y, test.X, test.y,
                float(ll), float(ls), tuple(spec.methods), cfg,
                cfg.seed + cell_index * cfg.ais_repeats,
            ))
    cell_lists = _pmap(_sweep_cell, args, jobs)
    records = [rec for cell in cell_lists for rec in cell]
    records.sort(key=lambda r: (r.log_lengthscale, r.log_magnitude, r.method))
    return records


def _cv_task(args):
    dataset, folds, fold, method, cfg = args
    train_raw, test_raw = fold_datasets(dataset, folds, fold)
    train, (test,) = standardize(train_raw, [test_raw])
    objective = "elbo" if method == "vi" else "ep_like"
    result = fit(train, replace(cfg, objective=objective))
    K = gram(train.X, result.theta, cfg.jitter)
    post = assemble(K, result.sites)
    k_star = cross_gram(train.X, test.X, result.theta)
    k_ss = np.full(test.n, result.theta.magnitude ** 2)
    mm = latent_predict(K, k_star, k_ss, result.sites, post=post)
    z = mm.mean / np.sqrt(1.0 + mm.var)
    predicted = np.where(ndtr(z) >= 0.5, 1.0, -1.0)
    accuracy = float(np.mean(predicted == test.y))
    lpd = float(np.mean(log_ndtr(test.y * z)))
    logger.info("fold %d method %s: accuracy %.4f lpd %.4f", fold, method, accuracy, lpd)
    return fold, method, accuracy, lpd


def cross_validate(dataset, k, methods, cfg, seed, jobs=1):
    """k-fold CV of the trainable methods; standardization per train fold.

    methods must come from {"vi", "ours"} (the two learning objectives); each
    (fold, method) fit is independent and may run in parallel.
    """
    methods = tuple(methods)
    if not methods or len(set(methods)) != len(methods):
        raise ValueError("methods must be non-empty and unique")
    bad = [m for m in methods if m not in TRAINABLE_METHODS]
    if bad:
        raise ValueError(f"cross-validation supports {TRAINABLE_METHODS}, got {bad}")
    folds = make_folds(dataset.n, k, seed)
    args = [
        (dataset, folds, fold, method, cfg)
        for method in methods
        for fold in range(k)
    ]
    results = _pmap(_cv_task, args, jobs)
    accuracy = {m: np.empty(k) for m in methods}
    lpd = {m: np.empty(k) for m in methods}
    for fold, method, acc, lp in results:
        accuracy[method][fold] = acc
        lpd[method][fold] = lp
    tests = []
    for metric_name, values in (("accuracy", accuracy), ("lpd", lpd)):
        for a_idx in range(len(methods)):
            for b_idx in range(a_idx + 1, len(methods)):
                ma, mb = methods[a_idx], methods[b_idx]
                t_stat, p_val = paired_t_test(values[ma], values[mb])
                tests.append(PairedTest(metric_name, ma, mb, t_stat, p_val))
    return CvReport(
        dataset=dataset.name, k=k, methods=methods,
        accuracy=accuracy, lpd=lpd, tests=tuple(tests),
    )


def paired_t_test(a, b):
    """Two-sided paired t-test; returns (t, p) with the degenerate conventions
    a == b -> (0, 1) and zero-variance nonzero mean -> (+/-inf, 0)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two aligned vectors of length >= 2")
    d = a - b
    if np.all(d == 0.0):
        return 0.0, 1.0
    sd = float(np.std(d, ddof=1))
    mean = float(np.mean(d))
    if sd == 0.0:
        return float(np.sign(mean) * np.inf), 0.0
    t_stat = mean / (sd / np.sqrt(d.size))
    p_val = 2.0 * float(student_t.sf(abs(t_stat), d.size - 1))
    return float(t_stat), p_val
