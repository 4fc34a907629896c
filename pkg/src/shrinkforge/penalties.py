"""Penalty functions: values, subgradients, adaptive weights, genomes.

A penalty is a per-coordinate function f applied to beta_j - shift_j and
weighted by w_j.  Weights may take the distinguished value ``EXCLUDE``
(infinite weight), which pins the coordinate to zero; solvers implement
this by dropping the column rather than by a large finite weight.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ExcludedCoordinateError

EXCLUDE = math.inf

GENOME_LEN = 6
GENOME_LOW = 0.0
GENOME_HIGH = 20.0

# Kinds whose objective (with nonnegative weights) is convex in beta.
CONVEX_KINDS = ("none", "ridge", "lasso", "elastic_net", "polynomial")
FOLDED_KINDS = ("scad", "mcp")


# ---------------------------------------------------------------------------
# Genome: coefficients of the polynomial family sum_k alpha_k |t|^k, k=1..6
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Genome:
    alpha: tuple[float, ...]

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        if len(alpha) != GENOME_LEN:
            raise ConfigError(f"genome needs {GENOME_LEN} coefficients, got {len(alpha)}")
        for a in alpha:
            if not (GENOME_LOW <= a <= GENOME_HIGH):
                raise ConfigError(f"genome coefficient {a} outside [{GENOME_LOW}, {GENOME_HIGH}]")
        object.__setattr__(self, "alpha", alpha)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    @staticmethod
    def clamp(values) -> "Genome":
        arr = np.clip(np.asarray(values, dtype=float), GENOME_LOW, GENOME_HIGH)
        return Genome(tuple(arr))

    def value(self, t) -> np.ndarray:
        """sum_k alpha_k |t|^k evaluated elementwise (Horner form)."""
        at = np.abs(np.asarray(t, dtype=float))
        out = np.zeros_like(at)
        for a in reversed(self.alpha):
            out = out * at + a
        return out * at

    def deriv(self, t) -> np.ndarray:
        """Derivative a.e.: sum_k k alpha_k |t|^{k-1} sign(t); 0 at t = 0."""
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        out = np.zeros_like(at)
        for k in range(GENOME_LEN, 0, -1):
            out = out * at + k * self.alpha[k - 1]
        return out * np.sign(t)

    def smooth_value(self, t) -> np.ndarray:
        """Polynomial part of order >= 2 (continuously differentiable)."""
        at = np.abs(np.asarray(t, dtype=float))
        out = np.zeros_like(at)
        for k in range(GENOME_LEN, 1, -1):
            out = out * at + self.alpha[k - 1]
        return out * at * at

    def smooth_deriv(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        out = np.zeros_like(at)
        for k in range(GENOME_LEN, 1, -1):
            out = out * at + k * self.alpha[k - 1]
        return out * at * np.sign(t)


# ---------------------------------------------------------------------------
# Folded-concave scalar forms (levels may be scalars or per-coordinate arrays)
# ---------------------------------------------------------------------------
def scad_value(t, lam, a=3.7):
    """Fan-Li SCAD penalty p_lam(|t|)."""
    at = np.abs(np.asarray(t, dtype=float))
    lam = np.asarray(lam, dtype=float)
    quad = (2 * a * lam * at - at**2 - lam**2) / (2 * (a - 1))
    flat = lam**2 * (a + 1) / 2
    return np.where(at <= lam, lam * at, np.where(at <= a * lam, quad, flat))


def scad_deriv(t, lam, a=3.7):
    """p'_lam(t) for t >= 0: lam on [0, lam], linear decay to 0 at a*lam."""
    t = np.abs(np.asarray(t, dtype=float))
    lam = np.asarray(lam, dtype=float)
    return np.where(t <= lam, lam, np.maximum(a * lam - t, 0.0) / (a - 1))


def mcp_value(t, lam, g=3.0):
    """Zhang MCP penalty p_lam(|t|)."""
    at = np.abs(np.asarray(t, dtype=float))
    lam = np.asarray(lam, dtype=float)
    return np.where(at <= g * lam, lam * at - at**2 / (2 * g), g * lam**2 / 2)


def mcp_deriv(t, lam, g=3.0):
    t = np.abs(np.asarray(t, dtype=float))
    lam = np.asarray(lam, dtype=float)
    return np.maximum(lam - t / g, 0.0)


# ---------------------------------------------------------------------------
# Weight rules
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class WeightRule:
    """How per-coordinate weights are derived from a pilot estimate."""

    source: str = "inverse_ols"  # ones | inverse_ols | inverse_scad2
    gamma: float = 1.0

    def __post_init__(self):
        if self.source not in ("ones", "inverse_ols", "inverse_scad2"):
            raise ConfigError(f"unknown weight source {self.source!r}")
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")


def adaptive_weights(rule: WeightRule, pilot_beta) -> np.ndarray:
    """w_j = 1/|pilot_j|^gamma; exact-zero pilots map to EXCLUDE."""
    pilot = np.asarray(pilot_beta, dtype=float)
    if rule.source == "ones":
        return np.ones_like(pilot)
    out = np.empty_like(pilot)
    zero = pilot == 0.0
    out[zero] = EXCLUDE
    out[~zero] = 1.0 / np.abs(pilot[~zero]) ** rule.gamma
    return out


# ---------------------------------------------------------------------------
# PenaltySpec
# ---------------------------------------------------------------------------
@dataclass(eq=False)
class PenaltySpec:
    """A penalty kind plus weights, location shifts, and hyperparameters.

    ``params`` by kind:
      elastic_net: mix in [0, 1]
      scad:        a > 2, lam (scalar or per-coordinate level inside p)
      mcp:         g > 1, lam (same convention)
      polynomial:  genome
    For scad/mcp the decay level lives inside ``params['lam']`` because the
    folded forms are not linear in it; objectives built on them use a unit
    outer multiplier.
    """

    kind: str
    params: dict = field(default_factory=dict)
    weights: np.ndarray | None = None
    shifts: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in CONVEX_KINDS + FOLDED_KINDS:
            raise ConfigError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "elastic_net":
            mix = self.params.get("mix", 0.5)
            if not 0.0 <= mix <= 1.0:
                raise ConfigError("elastic_net mix must lie in [0, 1]")
            self.params = {**self.params, "mix": float(mix)}
        if self.kind == "scad" and self.params.get("a", 3.7) <= 2:
            raise ConfigError("scad requires a > 2")
        if self.kind == "mcp" and self.params.get("g", 3.0) <= 1:
            raise ConfigError("mcp requires g > 1")
        if self.kind == "polynomial" and not isinstance(self.params.get("genome"), Genome):
            raise ConfigError("polynomial penalty requires a Genome in params")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            finite = self.weights[np.isfinite(self.weights)]
            if np.any(finite < 0):
                raise ConfigError("weights must be nonnegative or EXCLUDE")
        if self.shifts is not None:
            self.shifts = np.asarray(self.shifts, dtype=float)

    # -- constructors -------------------------------------------------------
    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def ridge(cls, weights=None, shifts=None):
        return cls("ridge", {}, weights, shifts)

    @classmethod
    def lasso(cls, weights=None, shifts=None):
        return cls("lasso", {}, weights, shifts)

    @classmethod
    def elastic_net(cls, mix=0.5, weights=None, shifts=None):
        return cls("elastic_net", {"mix": mix}, weights, shifts)

    @classmethod
    def scad(cls, lam, a=3.7, weights=None, shifts=None):
        return cls("scad", {"lam": lam, "a": a}, weights, shifts)

    @classmethod
    def mcp(cls, lam, g=3.0, weights=None, shifts=None):
        return cls("mcp", {"lam": lam, "g": g}, weights, shifts)

    @classmethod
    def polynomial(cls, genome: Genome, weights=None, shifts=None):
        return cls("polynomial", {"genome": genome}, weights, shifts)

    # -- coordinate bookkeeping ---------------------------------------------
    def weights_for(self, p: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(p)
        if len(self.weights) != p:
            raise ConfigError(f"weights length {len(self.weights)} != p = {p}")
        return self.weights

    def shifts_for(self, p: int) -> np.ndarray:
        if self.shifts is None:
            return np.zeros(p)
        if len(self.shifts) != p:
            raise ConfigError(f"shifts length {len(self.shifts)} != p = {p}")
        return self.shifts

    def excluded_mask(self, p: int) -> np.ndarray:
        return np.isinf(self.weights_for(p))

    def is_convex(self) -> bool:
        return self.kind in CONVEX_KINDS

    def restrict(self, keep: np.ndarray) -> "PenaltySpec":
        """Spec for the subproblem on columns ``keep`` (bool or index array)."""
        w = self.weights[keep] if self.weights is not None else None
        s = self.shifts[keep] if self.shifts is not None else None
        params = self.params
        lam = params.get("lam")
        if self.kind in FOLDED_KINDS and np.ndim(lam) == 1:
            params = {**params, "lam": np.asarray(lam)[keep]}
        return PenaltySpec(self.kind, params, w, s)

    # -- scalar building blocks ----------------------------------------------
    def _f_value(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "none":
            return np.zeros_like(t)
        if self.kind == "ridge":
            return t**2
        if self.kind == "lasso":
            return np.abs(t)
        if self.kind == "elastic_net":
            mix = self.params["mix"]
            return mix * np.abs(t) + (1 - mix) * t**2
        if self.kind == "polynomial":
            return self.params["genome"].value(t)
        if self.kind == "scad":
            return scad_value(t, self.params["lam"], self.params.get("a", 3.7))
        return mcp_value(t, self.params["lam"], self.params.get("g", 3.0))

    def _f_deriv(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "none":
            return np.zeros_like(t)
        if self.kind == "ridge":
            return 2 * t
        if self.kind == "lasso":
            return np.sign(t)
        if self.kind == "elastic_net":
            mix = self.params["mix"]
            return mix * np.sign(t) + 2 * (1 - mix) * t
        if self.kind == "polynomial":
            return self.params["genome"].deriv(t)
        if self.kind == "scad":
            return np.sign(t) * scad_deriv(np.abs(t), self.params["lam"], self.params.get("a", 3.7))
        return np.sign(t) * mcp_deriv(np.abs(t), self.params["lam"], self.params.get("g", 3.0))

    def l1_coefficient(self) -> float:
        """Weight of the |t| component in the convex split (convex kinds)."""
        if self.kind == "lasso":
            return 1.0
        if self.kind == "elastic_net":
            return self.params["mix"]
        if self.kind == "polynomial":
            return self.params["genome"].alpha[0]
        return 0.0

    def smooth_part_value(self, t: np.ndarray) -> np.ndarray:
        """f(t) minus its |t| component (convex kinds only)."""
        if self.kind == "ridge":
            return t**2
        if self.kind == "elastic_net":
            return (1 - self.params["mix"]) * t**2
        if self.kind == "polynomial":
            return self.params["genome"].smooth_value(t)
        return np.zeros_like(t)

    def smooth_part_deriv(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "ridge":
            return 2 * t
        if self.kind == "elastic_net":
            return 2 * (1 - self.params["mix"]) * t
        if self.kind == "polynomial":
            return self.params["genome"].smooth_deriv(t)
        return np.zeros_like(t)

    # -- serialization --------------------------------------------------------
    def to_record(self) -> dict:
        params = dict(self.params)
        if "genome" in params:
            params["genome"] = list(params["genome"].alpha)
        if "lam" in params and np.ndim(params["lam"]) == 1:
            params["lam"] = [float(v) for v in params["lam"]]
        rec = {"kind": self.kind, "params": params}
        rec["weights"] = None if self.weights is None else [
            "EXCLUDE" if np.isinf(w) else float(w) for w in self.weights
        ]
        rec["shifts"] = None if self.shifts is None else [float(s) for s in self.shifts]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "PenaltySpec":
        params = dict(rec.get("params", {}))
        if "genome" in params:
            params["genome"] = Genome(tuple(params["genome"]))
        weights = rec.get("weights")
        if weights is not None:
            weights = np.array([EXCLUDE if w == "EXCLUDE" else float(w) for w in weights])
        shifts = rec.get("shifts")
        if shifts is not None:
            shifts = np.asarray(shifts, dtype=float)
        return cls(rec["kind"], params, weights, shifts)

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PenaltySpec":
        return cls.from_record(json.loads(text))


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------
def _check_excluded(spec: PenaltySpec, beta: np.ndarray) -> np.ndarray:
    mask = spec.excluded_mask(len(beta))
    if np.any(mask & (beta != 0.0)):
        bad = int(np.flatnonzero(mask & (beta != 0.0))[0])
        raise ExcludedCoordinateError(f"coordinate {bad} is EXCLUDE but beta is nonzero")
    return mask


def penalty_value(spec: PenaltySpec, beta) -> float:
    """sum_j w_j f(beta_j - shift_j); EXCLUDE coordinates contribute zero."""
    beta = np.asarray(beta, dtype=float)
    mask = _check_excluded(spec, beta)
    w = spec.weights_for(len(beta))
    t = beta - spec.shifts_for(len(beta))
    vals = spec._f_value(t)
    keep = ~mask
    return float(np.sum(w[keep] * vals[keep]))


def penalty_subgradient(spec: PenaltySpec, beta) -> np.ndarray:
    """A subgradient of the penalty at beta.

    At kinks of |t| the element closest to zero inside the subdifferential
    is returned, which is 0 for every kind in scope.  Excluded coordinates
    report 0 (they are handled by column removal, not by gradient steps).
    """
    beta = np.asarray(beta, dtype=float)
    mask = _check_excluded(spec, beta)
    w = spec.weights_for(len(beta))
    t = beta - spec.shifts_for(len(beta))
    g = spec._f_deriv(t)
    g = np.where(mask, 0.0, w * g)
    return g


@dataclass(frozen=True)
class ConditionReport:
    """Numeric proxies for the penalty regularity conditions."""

    max_abs_deriv: float          # sup |f'| over the compact check grid
    deriv_at_zero: float          # one-sided |f'(0+)|
    zero_deriv_at_origin: bool    # derivative-vanishes-at-zero condition
    convex_on_grid: bool


def condition_check(spec: PenaltySpec, half_width: float = 10.0, grid_size: int = 2001) -> ConditionReport:
    """Check boundedness of f', behaviour of f' at 0, and grid convexity.

    The scalar f is examined with unit weight and zero shift; the checker
    reports findings but never rejects a spec.
    """
    grid = np.linspace(-half_width, half_width, grid_size)
    deriv = spec._f_deriv(grid)
    max_abs = float(np.max(np.abs(deriv)))
    d0 = float(abs(spec._f_deriv(np.asarray([1e-9]))[0]))
    vals = spec._f_value(grid)
    second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    convex = bool(np.all(second >= -1e-9 * max(1.0, float(np.max(np.abs(vals))))))
    return ConditionReport(
        max_abs_deriv=max_abs,
        deriv_at_zero=d0,
        zero_deriv_at_origin=d0 < 1e-6,
        convex_on_grid=convex,
    )
