"""Desk-scale Monte Carlo checks of oracle-property behaviour.

Per-coordinate decay levels follow the rate schedule a_n (nonzero block)
and b_n (zero block).  The assignment presumes the true support, which only
the theory check itself may know; reports flag this artificiality in their
headers.  Exact-zero detection relies on solver paths that produce literal
zeros (coordinate descent, LLA).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import seeding
from .data import CovarianceSpec, SimConfig, generate_dataset
from .errors import CapabilityError, ConfigError
from .penalties import PenaltySpec
from .solvers import Objective, coordinate_fit, fit_named, lla_fit, ols_beta

ARTIFICIALITY_NOTE = (
    "per-coordinate decay levels are assigned from the true support; "
    "this is a theory check, not an estimator"
)


@dataclass(frozen=True)
class OracleRateSchedule:
    """a_n = n^(-1/2 - h_exponent), b_n = n^(g_exponent - 1/2)."""

    h_exponent: float = 0.25
    g_exponent: float = 0.25

    def __post_init__(self):
        if self.h_exponent <= 0:
            raise ConfigError("h_exponent must be positive")
        if not 0.0 < self.g_exponent < 0.5:
            raise ConfigError("g_exponent must lie in (0, 1/2)")

    def a_n(self, n: int) -> float:
        return float(n) ** (-0.5 - self.h_exponent)

    def b_n(self, n: int) -> float:
        return float(n) ** (self.g_exponent - 0.5)

    @property
    def valid(self) -> bool:
        """sqrt(n) a_n -> 0 and sqrt(n) b_n -> infinity, decided symbolically."""
        return self.h_exponent > 0 and self.g_exponent > 0

    def levels(self, n: int, p: int, p_nonzero: int) -> np.ndarray:
        lam = np.full(p, self.b_n(n))
        lam[:p_nonzero] = self.a_n(n)
        return lam


@dataclass(frozen=True)
class OracleReport:
    penalty: str
    n_values: tuple[int, ...]
    zero_recovery_rate: tuple[float, ...]
    coverage: tuple[float, ...]
    replicates: int
    schedule: OracleRateSchedule
    pilot: str | None = None

    def row(self, i: int) -> dict:
        return {
            "n": self.n_values[i],
            "penalty": self.penalty,
            "zero_recovery_rate": self.zero_recovery_rate[i],
            "coverage": self.coverage[i],
            "replicates": self.replicates,
        }


def _fit_with_levels(x, y, kind: str, levels: np.ndarray, shifts=None,
                     scad_a=3.7, mcp_g=3.0):
    """Exact-zero-capable fit with per-coordinate decay levels."""
    shifts = None if shifts is None else np.asarray(shifts, dtype=float)
    if kind in ("scad", "mcp"):
        params = {"lam": levels, "a": scad_a} if kind == "scad" else {"lam": levels, "g": mcp_g}
        spec = PenaltySpec(kind, params, shifts=shifts)
        return lla_fit(Objective(x, y, spec, 1.0))
    if kind == "lasso":
        spec = PenaltySpec.lasso(weights=levels, shifts=shifts)
        return coordinate_fit(Objective(x, y, spec, 1.0))
    if kind == "ridge":
        spec = PenaltySpec.ridge(weights=levels, shifts=shifts)
        return coordinate_fit(Objective(x, y, spec, 1.0))
    raise ConfigError(f"unsupported oracle penalty {kind!r}")


def _coverage_hits(beta_hat, ds, p_nonzero) -> list[bool]:
    """Per-coordinate 95% interval hits on the nonzero block."""
    x, y = ds.x, ds.y
    n = ds.n
    resid = y - x @ beta_hat
    df = int(np.sum(beta_hat != 0.0))
    dof = max(n - df, 1)
    sigma2 = float(resid @ resid) / dof
    x1 = x[:, :p_nonzero]
    g1_inv = np.linalg.inv(x1.T @ x1)
    se = np.sqrt(sigma2 * np.diag(g1_inv))
    z = (beta_hat[:p_nonzero] - ds.true_beta[:p_nonzero]) / se
    return [bool(abs(v) <= 1.96) for v in z]


def _pilot_shifts(pilot: str, ds, seed: int) -> np.ndarray:
    if pilot == "zero":
        return np.zeros(ds.p)
    if pilot == "true":
        return ds.true_beta.copy()
    if pilot == "ols":
        return ols_beta(ds.x, ds.y)
    if pilot == "scad2":
        return fit_named("SCAD2", ds.x, ds.y, seed=seed).beta_hat
    raise ConfigError(f"unknown pilot rule {pilot!r}")


def _sweep(kind, schedule, n_values, replicates, seed, p, p_nonzero, pilot):
    recovery = []
    coverage = []
    for n in n_values:
        if n <= p:
            raise CapabilityError("oracle sweep needs n > p for the information proxy")
        hits = []
        recovered = 0
        levels = schedule.levels(n, p, p_nonzero)
        for r in range(replicates):
            ds_seed = seeding.derive_seed(seed, seeding.ORACLE, n, r)
            cfg = SimConfig(n=n, p=p, sparsity=(p - p_nonzero) / p,
                            covariance=CovarianceSpec("identity", p), seed=ds_seed)
            ds = generate_dataset(cfg)
            shifts = None
            if pilot is not None:
                shifts = _pilot_shifts(pilot, ds, seeding.derive_seed(seed, seeding.PILOT, n, r))
            fit = _fit_with_levels(ds.x, ds.y, kind, levels, shifts=shifts)
            if np.all(fit.beta_hat[p_nonzero:] == 0.0):
                recovered += 1
            hits.extend(_coverage_hits(fit.beta_hat, ds, p_nonzero))
        recovery.append(recovered / replicates)
        coverage.append(float(np.mean(hits)))
    return OracleReport(
        penalty=kind,
        n_values=tuple(int(n) for n in n_values),
        zero_recovery_rate=tuple(recovery),
        coverage=tuple(coverage),
        replicates=replicates,
        schedule=schedule,
        pilot=pilot,
    )


def oracle_sweep(kind: str, schedule: OracleRateSchedule, n_values, replicates: int,
                 seed: int = 0, p: int = 10, p_nonzero: int = 5) -> OracleReport:
    """Exact-zero recovery and normal-interval coverage across sample sizes."""
    return _sweep(kind, schedule, n_values, replicates, seed, p, p_nonzero, pilot=None)


def shifted_oracle_sweep(kind: str, schedule: OracleRateSchedule, n_values, replicates: int,
                         seed: int = 0, p: int = 10, p_nonzero: int = 5,
                         pilot: str = "scad2") -> OracleReport:
    """Same sweep with penalties centered on a pilot estimate."""
    return _sweep(kind, schedule, n_values, replicates, seed, p, p_nonzero, pilot=pilot)


def monotone_trend_ok(values, allowed_inversions: int = 1) -> bool:
    """Non-decreasing trend with a tolerated number of inversions."""
    vals = list(values)
    inversions = sum(1 for a, b in zip(vals, vals[1:]) if b < a)
    return inversions <= allowed_inversions
