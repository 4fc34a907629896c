"""Objective assembly and minimization.

The penalized objective is Q(beta) = mean loss + lam * penalty(beta) with a
squared or absolute per-observation loss.  Folded-concave penalties (SCAD,
MCP) carry their decay level inside the spec and are fitted through local
linear approximation; every other kind is convex and solved directly.

Solver routes:
  subgradient_descent  first-order solver for convex objectives.  Squared
                       loss uses proximal (FISTA) steps on the smooth +
                       weighted-L1 split; absolute loss uses diminishing-step
                       subgradient iterations with best-iterate tracking.
  coordinate_fit       exact cyclic coordinate descent for squared loss with
                       ridge / lasso / elastic-net penalties (oracle path).
  lla_fit              iteratively reweighted lasso for SCAD / MCP.
  ols_fit              plain least squares.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import seeding
from .errors import (
    CapabilityError,
    ConfigError,
    ContractError,
    DivergenceError,
    RankError,
)
from .penalties import (
    EXCLUDE,
    FOLDED_KINDS,
    PenaltySpec,
    WeightRule,
    adaptive_weights,
    mcp_deriv,
    penalty_subgradient,
    penalty_value,
    scad_deriv,
)

METHOD_NAMES = ("LM", "RR", "L", "EN", "AL", "AEN", "LADL", "SCAD1", "ASCAD1", "SCAD2", "MCP")
#: methods whose loss machinery or pilot needs an invertible design
REQUIRES_N_GT_P = ("LM", "LADL", "SCAD1", "ASCAD1")

ZERO_SNAP = 1e-10
DIVERGENCE_FACTOR = 1e6


# ---------------------------------------------------------------------------
# Results and objectives
# ---------------------------------------------------------------------------
@dataclass(eq=False)
class FitResult:
    beta_hat: np.ndarray
    lambda_hat: float
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    method: str | None = None

    @property
    def zero_set(self) -> np.ndarray:
        """Indices with exactly zero coefficients."""
        return np.flatnonzero(self.beta_hat == 0.0)

    def to_record(self) -> dict:
        return {
            "method": self.method,
            "lambda_hat": float(self.lambda_hat),
            "beta_hat": [float(b) for b in self.beta_hat],
            "zero_set": [int(j) for j in self.zero_set],
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
        }


@dataclass(eq=False)
class Objective:
    """Q(beta) = mean loss + lam * penalty_value(penalty, beta)."""

    x: np.ndarray
    y: np.ndarray
    penalty: PenaltySpec
    lam: float = 0.0
    loss: str = "squared"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 2 or len(self.y) != self.x.shape[0]:
            raise ConfigError("design/response shapes disagree")
        if self.loss not in ("squared", "absolute"):
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def loss_value(self, beta: np.ndarray) -> float:
        r = self.y - self.x @ beta
        if self.loss == "squared":
            return float(r @ r) / self.n
        return float(np.sum(np.abs(r))) / self.n

    def loss_subgradient(self, beta: np.ndarray) -> np.ndarray:
        r = self.y - self.x @ beta
        if self.loss == "squared":
            return (-2.0 / self.n) * (self.x.T @ r)
        return (-1.0 / self.n) * (self.x.T @ np.sign(r))

    def value(self, beta: np.ndarray) -> float:
        return self.loss_value(beta) + self.lam * penalty_value(self.penalty, beta)


def objective_value(obj: Objective, beta) -> float:
    return obj.value(np.asarray(beta, dtype=float))


def soft_threshold(z, thr):
    """S(z, thr) = sign(z) * max(|z| - thr, 0)."""
    return np.sign(z) * np.maximum(np.abs(z) - thr, 0.0)


def _spectral_step(x: np.ndarray) -> float:
    """1 / ||X'X/n||_2, the base step size for first-order iterations."""
    n = x.shape[0]
    if min(x.shape) == 0:
        return 1.0
    smax = float(np.linalg.norm(x, 2))
    if smax == 0.0:
        return 1.0
    return n / (smax * smax)


def _snap_zeros(beta: np.ndarray, snap: float = ZERO_SNAP) -> np.ndarray:
    out = beta.copy()
    out[np.abs(out) <= snap] = 0.0
    return out


def _reduce_objective(obj: Objective, init: np.ndarray):
    """Drop EXCLUDE columns; return reduced pieces plus the keep mask."""
    mask = obj.penalty.excluded_mask(obj.p)
    keep = ~mask
    if np.all(keep):
        return obj.x, obj.penalty, init, keep
    spec_r = obj.penalty.restrict(keep)
    return obj.x[:, keep], spec_r, init[keep], keep


def _embed(beta_r: np.ndarray, keep: np.ndarray) -> np.ndarray:
    out = np.zeros(len(keep))
    out[keep] = beta_r
    return out


# ---------------------------------------------------------------------------
# Convex first-order solver
# ---------------------------------------------------------------------------
def subgradient_descent(
    obj: Objective,
    init: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> FitResult:
    """Minimize a convex penalized objective; returns the best iterate.

    Squared loss is handled by proximal gradient steps with backtracking,
    FISTA momentum and function-value restarts on the split (smooth loss +
    smooth penalty part) + weighted L1; the pure diminishing-step rule
    cannot reach the accuracy the closed-form anchors require.  Absolute
    loss keeps classical subgradient iterations with steps s0/sqrt(t).
    """
    if not obj.penalty.is_convex():
        raise ContractError(f"penalty kind {obj.penalty.kind!r} is not convex; use lla_fit")
    beta0 = np.zeros(obj.p) if init is None else np.asarray(init, dtype=float).copy()
    x_r, spec_r, b0, keep = _reduce_objective(obj, beta0)
    if x_r.shape[1] == 0:
        beta = np.zeros(obj.p)
        val = obj.value(beta)
        return FitResult(beta, obj.lam, np.asarray([val]), 0, True)

    obj_r = Objective(x_r, obj.y, spec_r, obj.lam, obj.loss)
    if obj.loss == "squared":
        beta_r, trace, iters, converged = _fista(obj_r, b0, tol, max_iter)
    else:
        beta_r, trace, iters, converged = _subgradient_iterations(obj_r, b0, tol, max_iter)
    beta = _snap_zeros(_embed(beta_r, keep))
    return FitResult(beta, obj.lam, trace, iters, converged)


def _penalty_smooth_value(spec: PenaltySpec, beta: np.ndarray) -> float:
    w = spec.weights_for(len(beta))
    t = beta - spec.shifts_for(len(beta))
    return float(np.sum(w * spec.smooth_part_value(t)))


def _penalty_smooth_grad(spec: PenaltySpec, beta: np.ndarray) -> np.ndarray:
    w = spec.weights_for(len(beta))
    t = beta - spec.shifts_for(len(beta))
    return w * spec.smooth_part_deriv(t)


def _fista(obj: Objective, beta0: np.ndarray, tol: float, max_iter: int):
    """Backtracking FISTA with adaptive restart; best-iterate trace."""
    x_mat, y, spec, lam = obj.x, obj.y, obj.penalty, obj.lam
    n = obj.n
    w = spec.weights_for(obj.p)
    shifts = spec.shifts_for(obj.p)
    l1 = lam * w * spec.l1_coefficient()

    def smooth(b):
        r = y - x_mat @ b
        return float(r @ r) / n + lam * _penalty_smooth_value(spec, b)

    def smooth_grad(b):
        return (-2.0 / n) * (x_mat.T @ (y - x_mat @ b)) + lam * _penalty_smooth_grad(spec, b)

    def full(b):
        return smooth(b) + float(np.sum(l1 * np.abs(b - shifts)))

    def prox(v, step):
        return shifts + soft_threshold(v - shifts, step * l1)

    L = max(2.0 / _spectral_step(x_mat), 1e-12)
    xk = beta0.copy()
    yk = beta0.copy()
    tk = 1.0
    f_best = full(xk)
    best = xk.copy()
    f_last = f_best
    f0 = max(1.0, abs(f_best))
    trace = [f_best]
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        g_yk = smooth(yk)
        grad = smooth_grad(yk)
        while True:
            cand = prox(yk - grad / L, 1.0 / L)
            d = cand - yk
            quad = g_yk + float(grad @ d) + 0.5 * L * float(d @ d)
            if smooth(cand) <= quad + 1e-12 * max(1.0, abs(quad)):
                break
            L *= 2.0
            if L > 1e18:
                raise DivergenceError("backtracking failed to find a usable step")
        f_cand = full(cand)
        if f_cand > f_last:
            # function-value adaptive restart: drop the momentum
            tk = 1.0
            yk = cand.copy()
        else:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
            yk = cand + ((tk - 1.0) / t_next) * (cand - xk)
            tk = t_next
        xk = cand
        f_last = f_cand
        L = max(L * 0.95, 1e-12)

        if f_cand > DIVERGENCE_FACTOR * f0:
            raise DivergenceError("objective exceeded divergence bound")
        if f_cand < f_best - tol * max(1.0, abs(f_best)):
            f_best, best, stall = f_cand, cand.copy(), 0
        else:
            if f_cand < f_best:
                f_best, best = f_cand, cand.copy()
            stall += 1
        trace.append(f_best)
        if stall >= 20:
            return best, np.asarray(trace), it, True
    return best, np.asarray(trace), it, False


def _subgradient_iterations(obj: Objective, beta0: np.ndarray, tol: float, max_iter: int):
    """Classical subgradient method, steps s0/sqrt(t), best-iterate tracking."""
    s0 = _spectral_step(obj.x)
    beta = beta0.copy()
    f_best = obj.value(beta)
    best = beta.copy()
    f0 = max(1.0, abs(f_best))
    trace = [f_best]
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        g = obj.loss_subgradient(beta) + obj.lam * penalty_subgradient(obj.penalty, beta)
        beta = beta - (s0 / math.sqrt(it)) * g
        f = obj.value(beta)
        if f > DIVERGENCE_FACTOR * f0:
            raise DivergenceError("objective exceeded divergence bound")
        if f < f_best - tol * max(1.0, abs(f_best)):
            f_best, best, stall = f, beta.copy(), 0
        else:
            if f < f_best:
                f_best, best = f, beta.copy()
            stall += 1
        trace.append(f_best)
        if stall >= 50:
            return best, np.asarray(trace), it, True
    return best, np.asarray(trace), it, False


# ---------------------------------------------------------------------------
# Coordinate descent engine (squared loss, quadratic + weighted L1 penalty)
# ---------------------------------------------------------------------------
@dataclass(eq=False)
class _QuadData:
    """Gram pieces of (1/n)||y - X gamma||^2, shared across a lambda path."""

    gram: np.ndarray
    diag: np.ndarray
    c: np.ndarray
    yy: float
    n: int

    @classmethod
    def build(cls, x: np.ndarray, y: np.ndarray) -> "_QuadData":
        gram = x.T @ x
        return cls(gram, np.diag(gram).copy(), x.T @ y, float(y @ y), x.shape[0])


def _cd_objective(qd: _QuadData, l1_thr, l2_coef, gamma, q) -> float:
    fit = (qd.yy - 2.0 * float(qd.c @ gamma) + float(gamma @ q)) / qd.n
    return fit + float(np.sum(l1_thr * np.abs(gamma))) + float(np.sum(l2_coef * gamma * gamma))


def _cd_solve(
    qd: _QuadData,
    l1_thr: np.ndarray,
    l2_coef: np.ndarray,
    gamma: np.ndarray,
    q: np.ndarray,
    tol: float,
    max_sweeps: int,
    want_trace: bool = False,
):
    """Cyclic coordinate descent with active-set refinement (in place)."""
    n = qd.n
    gram, diag, c = qd.gram, qd.diag, qd.c
    denom = (2.0 / n) * diag + 2.0 * l2_coef
    p = len(gamma)
    trace = [_cd_objective(qd, l1_thr, l2_coef, gamma, q)] if want_trace else []

    def sweep(indices) -> float:
        nonlocal q
        max_delta = 0.0
        for j in indices:
            a_j = c[j] - q[j] + diag[j] * gamma[j]
            if denom[j] <= 0.0:
                new = 0.0
            else:
                z = (2.0 / n) * a_j
                az = abs(z) - l1_thr[j]
                new = (math.copysign(az, z) / denom[j]) if az > 0.0 else 0.0
            delta = new - gamma[j]
            if delta != 0.0:
                gamma[j] = new
                q += gram[:, j] * delta
                ad = abs(delta)
                if ad > max_delta:
                    max_delta = ad
        return max_delta

    sweeps = 0
    converged = False
    all_idx = range(p)
    while sweeps < max_sweeps:
        sweeps += 1
        md = sweep(all_idx)
        if want_trace:
            trace.append(_cd_objective(qd, l1_thr, l2_coef, gamma, q))
        scale = max(1.0, float(np.max(np.abs(gamma))) if p else 1.0)
        if md <= tol * scale:
            converged = True
            break
        active = np.flatnonzero(gamma != 0.0)
        if len(active) == p:
            continue
        while sweeps < max_sweeps and len(active):
            sweeps += 1
            md = sweep(active)
            if want_trace:
                trace.append(_cd_objective(qd, l1_thr, l2_coef, gamma, q))
            if md <= tol * scale:
                break
    return sweeps, converged, trace


_CD_KINDS = {"ridge": (0.0, 1.0), "lasso": (1.0, 0.0)}


def _l1_l2_coefficients(spec: PenaltySpec) -> tuple[float, float]:
    if spec.kind in _CD_KINDS:
        return _CD_KINDS[spec.kind]
    if spec.kind == "elastic_net":
        mix = spec.params["mix"]
        return mix, 1.0 - mix
    raise ContractError(f"coordinate_fit does not support kind {spec.kind!r}")


def coordinate_fit(
    obj: Objective,
    init: np.ndarray | None = None,
    tol: float = 1e-12,
    max_sweeps: int = 2000,
) -> FitResult:
    """Cyclic coordinate descent with exact scalar minimizers."""
    if obj.loss != "squared":
        raise ContractError("coordinate_fit requires squared loss")
    l1c, l2c = _l1_l2_coefficients(obj.penalty)
    beta0 = np.zeros(obj.p) if init is None else np.asarray(init, dtype=float).copy()
    x_r, spec_r, g0, keep = _reduce_objective(obj, beta0)
    p_r = x_r.shape[1]
    if p_r == 0:
        beta = np.zeros(obj.p)
        return FitResult(beta, obj.lam, np.asarray([obj.value(beta)]), 0, True)
    w = spec_r.weights_for(p_r)
    shifts = spec_r.shifts_for(p_r)
    qd = _QuadData.build(x_r, obj.y - x_r @ shifts)
    gamma = g0 - shifts
    q = qd.gram @ gamma
    sweeps, converged, trace = _cd_solve(
        qd, obj.lam * w * l1c, obj.lam * w * l2c, gamma, q, tol, max_sweeps, want_trace=True,
    )
    # gamma carries exact zeros from the soft threshold; beta = gamma + shift
    beta = _embed(gamma + shifts, keep)
    trace_arr = np.minimum.accumulate(np.asarray(trace))
    return FitResult(beta, obj.lam, trace_arr, sweeps, converged)


# ---------------------------------------------------------------------------
# Local linear approximation for SCAD / MCP
# ---------------------------------------------------------------------------
def _folded_deriv(spec: PenaltySpec, t: np.ndarray) -> np.ndarray:
    lam = spec.params["lam"]
    if spec.kind == "scad":
        return scad_deriv(np.abs(t), lam, spec.params.get("a", 3.7))
    return mcp_deriv(np.abs(t), lam, spec.params.get("g", 3.0))


def lla_fit(
    obj: Objective,
    init: np.ndarray | None = None,
    max_rounds: int = 10,
    weight_tol: float = 1e-6,
    inner_tol: float = 1e-10,
    inner_max_iter: int = 5000,
    inner_cd_tol: float = 1e-11,
    inner_cd_sweeps: int = 1000,
) -> FitResult:
    """Iteratively reweighted lasso for folded-concave penalties.

    The decay level lives inside the spec (``params['lam']``, scalar or
    per-coordinate); the objective multiplier must be 1.  Squared loss uses
    coordinate descent for the inner solves; absolute loss (SCAD on an L1
    criterion) uses the subgradient path.
    """
    if obj.penalty.kind not in FOLDED_KINDS:
        raise ContractError("lla_fit handles scad/mcp penalties only")
    if obj.lam != 1.0:
        raise ContractError("folded penalties carry their level in the spec; set lam = 1")
    beta0 = np.zeros(obj.p) if init is None else np.asarray(init, dtype=float).copy()
    x_r, spec_r, b0, keep = _reduce_objective(obj, beta0)
    p_r = x_r.shape[1]
    if p_r == 0:
        beta = np.zeros(obj.p)
        return FitResult(beta, float("nan"), np.asarray([obj.value(beta)]), 0, True)
    base_w = spec_r.weights_for(p_r)
    shifts = spec_r.shifts_for(p_r)
    level = np.broadcast_to(np.asarray(spec_r.params["lam"], dtype=float), (p_r,))

    squared = obj.loss == "squared"
    if squared:
        qd = _QuadData.build(x_r, obj.y - x_r @ shifts)

    def inner(l1_thr: np.ndarray, gamma: np.ndarray) -> np.ndarray:
        if squared:
            g = gamma.copy()
            q = qd.gram @ g
            _cd_solve(qd, l1_thr, np.zeros(p_r), g, q, inner_cd_tol, inner_cd_sweeps)
            return g
        spec = PenaltySpec("lasso", {}, l1_thr, shifts if np.any(shifts) else None)
        inner_obj = Objective(x_r, obj.y, spec, 1.0, obj.loss)
        fit = subgradient_descent(inner_obj, init=gamma + shifts, tol=inner_tol,
                                  max_iter=inner_max_iter)
        return fit.beta_hat - shifts

    def full_value(gamma: np.ndarray) -> float:
        return obj.value(_embed(gamma + shifts, keep))

    if init is None:
        gamma = inner(base_w * level, np.zeros(p_r))
    else:
        gamma = b0 - shifts

    trace = [full_value(gamma)]
    l1_prev = None
    rounds = 0
    converged = False
    for rounds in range(1, max_rounds + 1):
        l1_thr = base_w * _folded_deriv(spec_r, gamma)
        if l1_prev is not None and float(np.max(np.abs(l1_thr - l1_prev))) < weight_tol:
            converged = True
            break
        l1_prev = l1_thr
        gamma = inner(l1_thr, gamma)
        trace.append(full_value(gamma))
    beta = _embed(_snap_zeros(gamma) + shifts, keep)
    trace_arr = np.minimum.accumulate(np.asarray(trace))
    lam_scalar = float(level[0]) if np.all(level == level[0]) else float("nan")
    return FitResult(beta, lam_scalar, trace_arr, rounds, converged)


# ---------------------------------------------------------------------------
# OLS
# ---------------------------------------------------------------------------
def ols_beta(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n, p = x.shape
    if n <= p:
        raise CapabilityError(f"OLS needs n > p (got n = {n}, p = {p})")
    cond = np.linalg.cond(x)
    if not np.isfinite(cond) or cond * cond >= 1e12:
        raise RankError(f"design condition number {cond:.3g} too large")
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    return beta


def ols_fit(x: np.ndarray, y: np.ndarray) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = ols_beta(x, y)
    r = y - x @ beta
    val = float(r @ r) / len(y)
    return FitResult(beta, 0.0, np.asarray([val]), 1, True, method="LM")


# ---------------------------------------------------------------------------
# Lambda grids and selection
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LambdaGrid:
    lambda_max: float
    gamma_min: float
    count: int
    spacing: str = "log"

    def __post_init__(self):
        if self.lambda_max <= 0:
            raise ConfigError("lambda_max must be positive")
        if not 0.0 < self.gamma_min < 1.0:
            raise ConfigError("gamma_min must lie in (0, 1)")
        if self.count < 2:
            raise ConfigError("grid needs at least two values")
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"unknown spacing {self.spacing!r}")

    def values(self) -> np.ndarray:
        lo = self.gamma_min * self.lambda_max
        if self.spacing == "linear":
            return np.linspace(self.lambda_max, lo, self.count)
        return np.geomspace(self.lambda_max, lo, self.count)


def build_lambda_grid(
    x: np.ndarray,
    y: np.ndarray,
    count: int = 100,
    gamma_min: float | None = None,
    spacing: str = "log",
    weights: np.ndarray | None = None,
    shifts: np.ndarray | None = None,
    loss: str = "squared",
) -> LambdaGrid:
    """Grid from lambda_max = max_j |y'x_j| / n down to gamma_min * lambda_max.

    Weighted penalties rescale the top per coordinate (|y'x_j| / (n w_j)),
    shifts replace y by the shift residual, and the absolute loss replaces
    y by sign(y); the unweighted squared-loss default is the plain formula.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or len(y) == 0:
        raise ConfigError("empty fitting subset")
    r = y if shifts is None else y - x @ np.asarray(shifts, dtype=float)
    if loss == "absolute":
        r = np.sign(r)
    scores = np.abs(r @ x) / x.shape[0]
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        usable = np.isfinite(w) & (w > 0)
        if not np.any(usable):
            raise ConfigError("degenerate grid: no penalized coordinate has finite weight")
        scores = scores[usable] / w[usable]
    lam_max = float(np.max(scores))
    if lam_max <= 0.0:
        raise ConfigError("degenerate grid: max |y'X| is zero")
    if gamma_min is None:
        gamma_min = 1e-3 if x.shape[0] > x.shape[1] else 1e-2
    return LambdaGrid(lam_max, gamma_min, count, spacing)


def _ridge_path(x: np.ndarray, y: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    """Closed-form ridge solutions (unweighted, unshifted) for every lambda."""
    n = x.shape[0]
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    uy = u.T @ y
    # beta(lam) = V diag(s / (s^2 + n lam)) U' y
    factors = s[:, None] / (s[:, None] ** 2 + n * lambdas[None, :])
    return vt.T @ (factors * uy[:, None])


def path_fits(
    x: np.ndarray,
    y: np.ndarray,
    penalty: PenaltySpec,
    lambdas,
    loss: str = "squared",
    tol: float = 1e-8,
    max_iter: int = 5000,
    warm_max_iter: int = 800,
) -> list[FitResult]:
    """Fits along a descending lambda path, warm-started.

    Folded kinds re-level the spec at each grid value; convex kinds vary the
    objective multiplier.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    if penalty.kind in FOLDED_KINDS:
        return _folded_path(x, y, penalty, lambdas, loss)
    if loss == "squared" and penalty.kind == "ridge" and penalty.weights is None \
            and penalty.shifts is None:
        betas = _ridge_path(x, y, lambdas)
        return [
            FitResult(betas[:, i].copy(), float(lam),
                      np.asarray([Objective(x, y, penalty, float(lam)).value(betas[:, i])]),
                      1, True)
            for i, lam in enumerate(lambdas)
        ]
    if loss == "squared" and penalty.kind in ("ridge", "lasso", "elastic_net"):
        return _cd_path(x, y, penalty, lambdas)
    fits: list[FitResult] = []
    prev = None
    init_path = None
    if loss == "squared" and penalty.kind == "polynomial":
        init_path = _init_path_for_polynomial(x, y, penalty, lambdas)
    for i, lam in enumerate(lambdas):
        obj = Objective(x, y, penalty, float(lam), loss)
        start = prev
        if init_path is not None:
            cand = init_path[:, i]
            if start is None or obj.value(cand) < obj.value(start):
                start = cand
        budget = max_iter if i == 0 else warm_max_iter
        fit = subgradient_descent(obj, init=start, tol=tol, max_iter=budget)
        fits.append(fit)
        prev = fit.beta_hat
    return fits


def _cd_path(x, y, penalty, lambdas, tol: float = 1e-8, max_sweeps: int = 400) -> list[FitResult]:
    l1c, l2c = _l1_l2_coefficients(penalty)
    p = x.shape[1]
    beta0 = np.zeros(p)
    x_r, spec_r, g0, keep = _reduce_objective(
        Objective(x, y, penalty, float(lambdas[0])), beta0)
    p_r = x_r.shape[1]
    fits = []
    if p_r == 0:
        for lam in lambdas:
            beta = np.zeros(p)
            obj = Objective(x, y, penalty, float(lam))
            fits.append(FitResult(beta, float(lam), np.asarray([obj.value(beta)]), 0, True))
        return fits
    w = spec_r.weights_for(p_r)
    shifts = spec_r.shifts_for(p_r)
    qd = _QuadData.build(x_r, y - x_r @ shifts)
    gamma = np.zeros(p_r)
    q = np.zeros(p_r)
    for lam in lambdas:
        sweeps, converged, _ = _cd_solve(
            qd, lam * w * l1c, lam * w * l2c, gamma, q, tol, max_sweeps)
        beta = _embed(gamma + shifts, keep)
        obj_val = _cd_objective(qd, lam * w * l1c, lam * w * l2c, gamma, q)
        fits.append(FitResult(beta, float(lam), np.asarray([obj_val]), sweeps, converged))
    return fits


def _folded_path(x, y, penalty, lambdas, loss) -> list[FitResult]:
    fits = []
    prev = None
    base_lam = penalty.params["lam"]
    for lam in lambdas:
        lam_val = lam * base_lam if np.ndim(base_lam) == 1 else float(lam)
        spec = PenaltySpec(penalty.kind, {**penalty.params, "lam": lam_val},
                           penalty.weights, penalty.shifts)
        fit = lla_fit(Objective(x, y, spec, 1.0, loss), init=prev,
                      inner_cd_tol=1e-9, inner_cd_sweeps=400)
        fit.lambda_hat = float(lam)
        fits.append(fit)
        prev = fit.beta_hat
    return fits


def _init_path_for_polynomial(x, y, penalty, lambdas):
    """Lasso-path (n > p) or ridge-path (otherwise) starting points."""
    n, p = x.shape
    keep = ~penalty.excluded_mask(p)
    init = np.zeros((p, len(lambdas)))
    xk = x[:, keep]
    if n > p:
        for i, fit in enumerate(_cd_path(xk, y, PenaltySpec.lasso(), lambdas,
                                         tol=1e-8, max_sweeps=200)):
            init[keep, i] = fit.beta_hat
    else:
        init[keep, :] = _ridge_path(xk, y, np.asarray(lambdas, dtype=float))
    return init


def _holdout_loss(beta: np.ndarray, x_val: np.ndarray, y_val: np.ndarray, loss: str) -> float:
    r = y_val - x_val @ beta
    if loss == "squared":
        return float(r @ r) / len(y_val)
    return float(np.mean(np.abs(r)))


def select_lambda(
    x_fit: np.ndarray,
    y_fit: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    penalty: PenaltySpec,
    grid,
    loss: str = "squared",
    **path_kwargs,
) -> tuple[float, FitResult]:
    """Fit along the grid, score mean loss on the holdout, keep the minimizer.

    ``grid`` is a LambdaGrid or an explicit descending array of values.
    Ties break toward larger lambda (the first minimizer wins).
    """
    if len(y_val) == 0:
        raise ConfigError("empty holdout for lambda selection")
    lambdas = grid.values() if isinstance(grid, LambdaGrid) else np.asarray(grid, dtype=float)
    if lambdas.size == 0:
        raise ConfigError("empty lambda grid")
    fits = path_fits(x_fit, y_fit, penalty, lambdas, loss=loss, **path_kwargs)
    losses = np.asarray([_holdout_loss(f.beta_hat, x_val, y_val, loss) for f in fits])
    idx = int(np.argmin(losses))
    best = fits[idx]
    best.lambda_hat = float(lambdas[idx])
    return float(lambdas[idx]), best


def cv_select_lambda(
    x: np.ndarray,
    y: np.ndarray,
    penalty: PenaltySpec,
    grid,
    loss: str,
    rng: np.random.Generator,
    n_folds: int = 5,
    **path_kwargs,
) -> float:
    """K-fold cross-validated lambda; ties break toward larger lambda."""
    n = len(y)
    n_folds = min(n_folds, n)
    perm = rng.permutation(n)
    folds = np.array_split(perm, n_folds)
    lambdas = grid.values() if isinstance(grid, LambdaGrid) else np.asarray(grid, dtype=float)
    total = np.zeros(len(lambdas))
    for fold in folds:
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        fits = path_fits(x[mask], y[mask], penalty, lambdas, loss=loss, **path_kwargs)
        total += np.asarray([_holdout_loss(f.beta_hat, x[fold], y[fold], loss) for f in fits])
    return float(lambdas[int(np.argmin(total))])


# ---------------------------------------------------------------------------
# Named-method dispatch
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FitOptions:
    grid_count: int = 100
    cv_folds: int = 5
    lla_split_fraction: float = 0.10
    en_mix: float = 0.5
    scad_a: float = 3.7
    mcp_g: float = 3.0
    weight_gamma: float = 1.0
    tol: float = 1e-8
    max_iter: int = 5000
    warm_max_iter: int = 800


def runnable_methods(n: int, p: int, names=METHOD_NAMES) -> list[str]:
    return [m for m in names if m not in REQUIRES_N_GT_P or n > p]


def _pilot_beta(x, y, seed, options) -> np.ndarray:
    """OLS pilot when the design allows it, SCAD2 otherwise."""
    n, p = x.shape
    if n > p:
        try:
            return ols_beta(x, y)
        except RankError:
            pass
    return fit_named("SCAD2", x, y, seed=seeding.derive_seed(seed, seeding.PILOT),
                     options=options).beta_hat


def _all_excluded_fit(penalty: PenaltySpec, p: int) -> FitResult | None:
    if penalty.weights is not None and not np.any(np.isfinite(penalty.weights)):
        return FitResult(np.zeros(p), float("nan"), np.asarray([float("nan")]), 0, True)
    return None


def _grid_weights(penalty: PenaltySpec, p: int) -> np.ndarray | None:
    """Effective per-coordinate scale of the penalty at level 1 (for grid tops)."""
    w = None if penalty.weights is None else penalty.weights
    lam = penalty.params.get("lam")
    if penalty.kind in FOLDED_KINDS and np.ndim(lam) == 1:
        base = np.ones(p) if w is None else w
        w = base * np.asarray(lam, dtype=float)
    return w


def _cv_fit(x, y, penalty, loss, seed, options) -> FitResult:
    trivial = _all_excluded_fit(penalty, x.shape[1])
    if trivial is not None:
        return trivial
    grid = build_lambda_grid(x, y, count=options.grid_count,
                             weights=_grid_weights(penalty, x.shape[1]),
                             shifts=penalty.shifts, loss=loss)
    rng = seeding.derive_rng(seed, seeding.CV)
    lam_hat = cv_select_lambda(
        x, y, penalty, grid, loss, rng, n_folds=options.cv_folds,
        tol=options.tol, max_iter=options.max_iter, warm_max_iter=options.warm_max_iter,
    )
    if penalty.kind in FOLDED_KINDS:
        spec = PenaltySpec(penalty.kind, {**penalty.params, "lam": lam_hat},
                           penalty.weights, penalty.shifts)
        fit = lla_fit(Objective(x, y, spec, 1.0, loss))
        fit.lambda_hat = lam_hat
        return fit
    if loss == "squared" and penalty.kind in ("ridge", "lasso", "elastic_net"):
        return coordinate_fit(Objective(x, y, penalty, lam_hat, loss))
    return subgradient_descent(Objective(x, y, penalty, lam_hat, loss),
                               tol=options.tol, max_iter=options.max_iter)


def _subsplit_fit(x, y, penalty, loss, seed, options) -> FitResult:
    """Level selection on a held-out slice (the LLA-method protocol)."""
    trivial = _all_excluded_fit(penalty, x.shape[1])
    if trivial is not None:
        return trivial
    n = len(y)
    rng = seeding.derive_rng(seed, seeding.SPLIT)
    perm = rng.permutation(n)
    n_lam = max(1, int(round(options.lla_split_fraction * n)))
    val_idx, fit_idx = perm[:n_lam], perm[n_lam:]
    grid = build_lambda_grid(x[fit_idx], y[fit_idx], count=options.grid_count,
                             weights=_grid_weights(penalty, x.shape[1]),
                             shifts=penalty.shifts, loss=loss)
    _, fit = select_lambda(
        x[fit_idx], y[fit_idx], x[val_idx], y[val_idx], penalty, grid, loss=loss,
        tol=options.tol, max_iter=options.max_iter, warm_max_iter=options.warm_max_iter,
    )
    return fit


def fit_named(
    name_or_spec,
    x: np.ndarray,
    y: np.ndarray,
    seed: int = 0,
    options: FitOptions | None = None,
) -> FitResult:
    """Fit one roster method (or an explicit PenaltySpec) on training data."""
    options = options or FitOptions()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = x.shape

    if isinstance(name_or_spec, PenaltySpec):
        fit = _cv_fit(x, y, name_or_spec, "squared", seed, options)
        fit.method = "custom"
        return fit

    name = str(name_or_spec)
    if name not in METHOD_NAMES:
        raise ConfigError(f"unknown method {name!r}")
    if name in REQUIRES_N_GT_P and n <= p:
        raise CapabilityError(f"{name} requires n > p (got n = {n}, p = {p})")

    rule = WeightRule("inverse_ols", options.weight_gamma)
    if name == "LM":
        fit = ols_fit(x, y)
    elif name == "RR":
        fit = _cv_fit(x, y, PenaltySpec.ridge(), "squared", seed, options)
    elif name == "L":
        fit = _cv_fit(x, y, PenaltySpec.lasso(), "squared", seed, options)
    elif name == "EN":
        fit = _cv_fit(x, y, PenaltySpec.elastic_net(options.en_mix), "squared", seed, options)
    elif name in ("AL", "AEN"):
        w = adaptive_weights(rule, _pilot_beta(x, y, seed, options))
        spec = PenaltySpec.lasso(weights=w) if name == "AL" \
            else PenaltySpec.elastic_net(options.en_mix, weights=w)
        fit = _cv_fit(x, y, spec, "squared", seed, options)
    elif name == "LADL":
        w = adaptive_weights(rule, ols_beta(x, y))
        fit = _cv_fit(x, y, PenaltySpec.lasso(weights=w), "absolute", seed, options)
    elif name == "SCAD1":
        spec = PenaltySpec.scad(lam=1.0, a=options.scad_a)
        fit = _subsplit_fit(x, y, spec, "absolute", seed, options)
    elif name == "ASCAD1":
        w = adaptive_weights(rule, ols_beta(x, y))
        finite = np.isfinite(w)
        lam_vec = np.where(finite, w, 1.0)
        spec = PenaltySpec("scad", {"lam": lam_vec, "a": options.scad_a},
                           weights=np.where(finite, 1.0, EXCLUDE))
        fit = _subsplit_fit(x, y, spec, "absolute", seed, options)
    elif name == "SCAD2":
        spec = PenaltySpec.scad(lam=1.0, a=options.scad_a)
        fit = _subsplit_fit(x, y, spec, "squared", seed, options)
    else:  # MCP
        spec = PenaltySpec.mcp(lam=1.0, g=options.mcp_g)
        fit = _subsplit_fit(x, y, spec, "squared", seed, options)
    fit.method = name
    return fit


def fit_method(name_or_spec, ds, split=None, seed: int = 0,
               options: FitOptions | None = None) -> FitResult:
    """Spec-level entry point: fit a method on a dataset (or its train part)."""
    if split is None:
        return fit_named(name_or_spec, ds.x, ds.y, seed=seed, options=options)
    train = split.train if hasattr(split, "train") else np.asarray(split)
    return fit_named(name_or_spec, ds.x[train], ds.y[train], seed=seed, options=options)
