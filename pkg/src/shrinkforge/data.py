"""Datasets: simulation designs, perturbation, splits, CSV ingestion.

Simulated designs draw rows MVN(0, M) via Cholesky for light tails or
coordinatewise t3 for heavy tails; true coefficients put their zeros in the
tail block.  All generators are pure functions of (config, seed).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, ParseError


@dataclass(eq=False)
class Dataset:
    y: np.ndarray
    x: np.ndarray
    true_beta: np.ndarray | None = None
    true_sigma: float | None = None
    column_names: list[str] | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim != 2:
            raise ConfigError("design must be a matrix")
        if self.n < 1 or self.p < 1:
            raise ConfigError("need n >= 1 and p >= 1")
        if len(self.y) != self.n:
            raise ConfigError("response length does not match design rows")
        if self.true_beta is not None:
            self.true_beta = np.asarray(self.true_beta, dtype=float)
            if len(self.true_beta) != self.p:
                raise ConfigError("true_beta length does not match design columns")
        if self.true_sigma is not None and self.true_sigma <= 0:
            raise ConfigError("true_sigma must be positive")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.y[rows], self.x[rows], self.true_beta, self.true_sigma,
                       self.column_names)


@dataclass(frozen=True)
class CovarianceSpec:
    kind: str = "identity"  # identity | tridiagonal | toeplitz
    p: int = 1
    off_diagonal: float = 0.5

    def __post_init__(self):
        if self.kind not in ("identity", "tridiagonal", "toeplitz"):
            raise ConfigError(f"unknown covariance kind {self.kind!r}")
        if not -1.0 < self.off_diagonal < 1.0:
            raise ConfigError("off_diagonal must lie in (-1, 1)")
        if self.p < 1:
            raise ConfigError("dimension must be positive")

    def matrix(self) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(self.p)
        if self.kind == "tridiagonal":
            m = np.eye(self.p)
            idx = np.arange(self.p - 1)
            m[idx, idx + 1] = self.off_diagonal
            m[idx + 1, idx] = self.off_diagonal
            return m
        idx = np.arange(self.p)
        return self.off_diagonal ** np.abs(idx[:, None] - idx[None, :])

    def cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.matrix())
        except np.linalg.LinAlgError as exc:
            raise ConfigError(f"covariance is not positive definite: {exc}") from exc


@dataclass(frozen=True)
class SimConfig:
    n: int
    p: int
    sparsity: float
    tails: str = "light"  # light (normal) | heavy (t3 for X and errors)
    covariance: CovarianceSpec | None = None
    beta_mean: float = 4.0
    beta_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ConfigError("need n >= 1 and p >= 1")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ConfigError("sparsity must lie in [0, 1]")
        if self.tails not in ("light", "heavy"):
            raise ConfigError(f"unknown tails {self.tails!r}")
        if self.beta_sd <= 0:
            raise ConfigError("beta_sd must be positive")
        cov = self.covariance or CovarianceSpec("identity", self.p)
        if cov.p != self.p:
            raise ConfigError("covariance dimension disagrees with p")
        if self.tails == "heavy" and cov.kind != "identity":
            raise ConfigError("heavy tails pair with identity covariance only")
        object.__setattr__(self, "covariance", cov)

    @property
    def n_zero(self) -> int:
        return int(round(self.sparsity * self.p))

    @property
    def p_nonzero(self) -> int:
        return self.p - self.n_zero


def generate_dataset(cfg: SimConfig) -> Dataset:
    """Simulate y = X beta + eps with tail-block zeros in beta."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.tails == "light":
        z = rng.standard_normal((cfg.n, cfg.p))
        x = z @ cfg.covariance.cholesky().T
        eps = rng.standard_normal(cfg.n)
        sigma = 1.0
    else:
        x = rng.standard_t(3, size=(cfg.n, cfg.p))
        eps = rng.standard_t(3, size=cfg.n)
        sigma = float(np.sqrt(3.0))
    beta = np.zeros(cfg.p)
    if cfg.p_nonzero:
        beta[: cfg.p_nonzero] = rng.normal(cfg.beta_mean, cfg.beta_sd, size=cfg.p_nonzero)
    y = x @ beta + eps
    return Dataset(y, x, true_beta=beta, true_sigma=sigma)


def perturb_response(ds: Dataset, tau: float, seed: int) -> Dataset:
    """Copy of ds with N(0, tau^2) noise added to the responses."""
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, tau, size=ds.n)
    return Dataset(ds.y + noise, ds.x, ds.true_beta, ds.true_sigma, ds.column_names)


@dataclass(frozen=True)
class SplitSpec:
    n_train: int
    n_test: int
    n_train_lambda: int = 0
    n_train_beta: int = 0
    n_train_alpha: int = 0
    seed: int = 0

    def __post_init__(self):
        for c in (self.n_train, self.n_test, self.n_train_lambda, self.n_train_beta,
                  self.n_train_alpha):
            if c < 0:
                raise ConfigError("split counts must be nonnegative")
        if self.has_ga_subsplit:
            total = self.n_train_lambda + self.n_train_beta + self.n_train_alpha
            if total != self.n_train:
                raise ConfigError(
                    f"GA sub-splits sum to {total}, expected n_train = {self.n_train}")

    @property
    def has_ga_subsplit(self) -> bool:
        return (self.n_train_lambda + self.n_train_beta + self.n_train_alpha) > 0

    @property
    def n(self) -> int:
        return self.n_train + self.n_test


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint index sets covering 0..n-1."""

    train: np.ndarray
    test: np.ndarray
    train_lambda: np.ndarray | None = None
    train_beta: np.ndarray | None = None
    train_alpha: np.ndarray | None = None


def split(ds: Dataset, spec: SplitSpec) -> SplitIndices:
    """Uniformly random disjoint index sets of the configured sizes."""
    if spec.n != ds.n:
        raise ConfigError(f"split sizes sum to {spec.n}, dataset has n = {ds.n}")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(ds.n)
    train, test = perm[: spec.n_train], perm[spec.n_train:]
    if not spec.has_ga_subsplit:
        return SplitIndices(train, test)
    a = spec.n_train_lambda
    b = a + spec.n_train_beta
    return SplitIndices(
        train, test,
        train_lambda=train[:a], train_beta=train[a:b], train_alpha=train[b:],
    )


def subsample(ds: Dataset, m: int, seed: int) -> Dataset:
    """m rows drawn without replacement, order randomized."""
    if not 1 <= m <= ds.n:
        raise DomainError(f"subsample size {m} outside [1, {ds.n}]")
    rng = np.random.default_rng(seed)
    rows = rng.permutation(ds.n)[:m]
    return ds.take(rows)


# ---------------------------------------------------------------------------
# CSV ingestion / export
# ---------------------------------------------------------------------------
def load_csv(path, response: str, standardize: bool = True) -> Dataset:
    """Read a numeric, headed CSV; one column is the response.

    With ``standardize`` each design column is centered to mean 0 and scaled
    to SD 1 (constant columns are centered only).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if response not in header:
            raise ConfigError(f"response column {response!r} not in header {header}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: expected {len(header)} cells", row=i)
            parsed = []
            for j, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric cell {cell!r}", row=i, column=header[j]
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ParseError(f"{path} has a header but no data rows")
    table = np.asarray(rows, dtype=float)
    ridx = header.index(response)
    y = table[:, ridx]
    keep = [j for j in range(len(header)) if j != ridx]
    x = table[:, keep]
    names = [header[j] for j in keep]
    if standardize:
        mean = x.mean(axis=0)
        sd = x.std(axis=0)
        sd = np.where(sd == 0.0, 1.0, sd)
        x = (x - mean) / sd
    return Dataset(y, x, column_names=names)


def save_csv(ds: Dataset, path, true_beta_sidecar=None) -> None:
    """Write columns y, x1..xp; optionally a one-column true_beta sidecar."""
    path = Path(path)
    names = ds.column_names or [f"x{j + 1}" for j in range(ds.p)]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", *names])
        for i in range(ds.n):
            writer.writerow([_fmt(ds.y[i]), *(_fmt(v) for v in ds.x[i])])
    if true_beta_sidecar is not None and ds.true_beta is not None:
        side = Path(true_beta_sidecar)
        with side.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["true_beta"])
            for b in ds.true_beta:
                writer.writerow([_fmt(b)])


def _fmt(v: float) -> str:
    return format(float(v), ".17g")
