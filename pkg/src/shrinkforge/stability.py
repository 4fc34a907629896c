"""Instability curves under response perturbation, plus selection metrics.

One replicate at one perturbation level: split the data at random, add
N(0, tau^2) noise to the responses of both partitions, fit every method on
the perturbed training part, and score root mean squared error on the
perturbed test part.  All methods see bit-identical partitions and noise
within a replicate; failed fits reduce the effective replicate count for
their cell instead of aborting the sweep.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import seeding
from .data import Dataset, SplitSpec, perturb_response, split
from .errors import (
    CapabilityError,
    ConfigError,
    DivergenceError,
    DomainError,
    RankError,
)
from .solvers import FitOptions, FitResult, fit_named, runnable_methods

DEFAULT_TAUS = tuple(round(0.2 * k, 10) for k in range(9))  # 0.0, 0.2, ..., 1.6

_FIT_FAILURES = (CapabilityError, RankError, DivergenceError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class InstabilityConfig:
    split: SplitSpec
    methods: tuple[str, ...]
    tau_values: tuple[float, ...] = DEFAULT_TAUS
    replicates: int = 100
    seed: int = 0
    fit_options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        taus = tuple(float(t) for t in self.tau_values)
        if not taus or taus[0] != 0.0:
            raise ConfigError("tau grid must start at 0")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ConfigError("tau grid must be strictly ascending")
        if self.replicates < 1:
            raise ConfigError("need at least one replicate")
        object.__setattr__(self, "tau_values", taus)
        object.__setattr__(self, "methods", tuple(self.methods))


@dataclass(frozen=True)
class CurvePoint:
    tau: float
    mean_instability: float
    sd_instability: float
    replicates: int


@dataclass(frozen=True)
class InstabilityCurve:
    method: str
    points: tuple[CurvePoint, ...]


@dataclass(frozen=True)
class SelectionMetrics:
    tot: float
    tr: float
    fa: float
    p: int
    p_zero_true: int
    p_zeroed: float


def instability_score(fit_or_beta, x_test: np.ndarray, y_test: np.ndarray) -> float:
    """Root mean squared prediction error on the test subset."""
    beta = fit_or_beta.beta_hat if isinstance(fit_or_beta, FitResult) else np.asarray(fit_or_beta)
    y_test = np.asarray(y_test, dtype=float)
    if len(y_test) == 0:
        raise DomainError("empty test subset")
    r = y_test - np.asarray(x_test, dtype=float) @ beta
    return float(np.sqrt(np.mean(r * r)))


def selection_metrics(fit_or_beta, true_beta) -> SelectionMetrics:
    """Tot / Tr / Fa for one fit against the generating coefficients.

    Tot is the zeroed fraction of all coordinates; Tr the recall on true
    zeros (1 when there are none); Fa the false-exclusion rate on true
    nonzeros (0 when there are none).  These denominators make
    tot = s*tr + (1-s)*fa an exact identity with s the true-zero fraction.
    """
    beta = fit_or_beta.beta_hat if isinstance(fit_or_beta, FitResult) else np.asarray(fit_or_beta)
    true_beta = np.asarray(true_beta, dtype=float)
    if len(beta) != len(true_beta):
        raise DomainError("coefficient lengths disagree")
    p = len(beta)
    zeroed = beta == 0.0
    true_zero = true_beta == 0.0
    n0 = int(np.sum(true_zero))
    n1 = p - n0
    tot = float(np.sum(zeroed)) / p
    tr = float(np.sum(zeroed & true_zero)) / n0 if n0 else 1.0
    fa = float(np.sum(zeroed & ~true_zero)) / n1 if n1 else 0.0
    return SelectionMetrics(tot, tr, fa, p, n0, float(np.sum(zeroed)))


def aggregate_metrics(items) -> SelectionMetrics:
    items = list(items)
    if not items:
        raise DomainError("nothing to aggregate")
    return SelectionMetrics(
        tot=float(np.mean([m.tot for m in items])),
        tr=float(np.mean([m.tr for m in items])),
        fa=float(np.mean([m.fa for m in items])),
        p=items[0].p,
        p_zero_true=items[0].p_zero_true,
        p_zeroed=float(np.mean([m.p_zeroed for m in items])),
    )


@dataclass(frozen=True)
class InstabilityResult:
    curves: tuple[InstabilityCurve, ...]
    metrics: dict
    skipped: dict
    failures: int

    def curve(self, method: str) -> InstabilityCurve:
        for c in self.curves:
            if c.method == method:
                return c
        raise KeyError(method)


def _replicate(ds: Dataset, cfg: InstabilityConfig, methods, ell: int):
    """All (method, tau) scores for one replicate; None marks a failed fit."""
    scores = {}
    zero_tau_metrics = {}
    for k, tau in enumerate(cfg.tau_values):
        spec = SplitSpec(cfg.split.n_train, cfg.split.n_test,
                         seed=seeding.derive_seed(cfg.seed, seeding.SPLIT, ell, k))
        idx = split(ds, spec)
        perturbed = perturb_response(ds, tau, seeding.derive_seed(cfg.seed, seeding.PERTURB, ell, k))
        x_tr, y_tr = perturbed.x[idx.train], perturbed.y[idx.train]
        x_te, y_te = perturbed.x[idx.test], perturbed.y[idx.test]
        for m in methods:
            fit_seed = seeding.derive_seed(cfg.seed, seeding.METHOD, seeding.name_key(m), ell, k)
            try:
                fit = fit_named(m, x_tr, y_tr, seed=fit_seed, options=cfg.fit_options)
            except _FIT_FAILURES:
                scores[(m, k)] = None
                continue
            scores[(m, k)] = instability_score(fit, x_te, y_te)
            if tau == 0.0 and ds.true_beta is not None:
                zero_tau_metrics[(m, ell)] = selection_metrics(fit, ds.true_beta)
    return scores, zero_tau_metrics


def _replicate_star(args):
    return _replicate(*args)


def run_instability(ds: Dataset, cfg: InstabilityConfig, jobs: int = 1) -> InstabilityResult:
    """Full sweep: curves for every runnable method, metrics at tau = 0."""
    runnable = runnable_methods(cfg.split.n_train, ds.p, cfg.methods)
    skipped = {m: f"requires n > p (train n = {cfg.split.n_train}, p = {ds.p})"
               for m in cfg.methods if m not in runnable}

    tasks = [(ds, cfg, runnable, ell) for ell in range(cfg.replicates)]
    if jobs > 1 and cfg.replicates > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_replicate = list(pool.map(_replicate_star, tasks))
    else:
        per_replicate = [_replicate(*t) for t in tasks]

    failures = 0
    curves = []
    metrics = {}
    for m in runnable:
        points = []
        for k, tau in enumerate(cfg.tau_values):
            vals = [rep[0][(m, k)] for rep in per_replicate if rep[0][(m, k)] is not None]
            failures += sum(1 for rep in per_replicate if rep[0][(m, k)] is None)
            if vals:
                mean = float(np.mean(vals))
                sd = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            else:
                mean, sd = float("nan"), float("nan")
            points.append(CurvePoint(tau, mean, sd, len(vals)))
        curves.append(InstabilityCurve(m, tuple(points)))
        if ds.true_beta is not None:
            per_rep = [rep[1][(m, ell)]
                       for ell, rep in enumerate(per_replicate) if (m, ell) in rep[1]]
            if per_rep:
                metrics[m] = aggregate_metrics(per_rep)
    return InstabilityResult(tuple(curves), metrics, skipped, failures)


def instability_curves(ds: Dataset, cfg: InstabilityConfig, jobs: int = 1):
    """The curves alone (spec-level operation)."""
    return list(run_instability(ds, cfg, jobs=jobs).curves)
