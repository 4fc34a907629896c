"""Genetic search over the polynomial penalty family.

Each genome is six nonnegative coefficients of sum_k alpha_k |t|^k.  A
genome's fitness is the held-out sum of squared errors of the estimate it
produces under the split protocol: the decay grid comes from the beta
subset, the decay value is picked on the lambda subset, and fitness is
scored on the alpha subset.  Elites pass between generations unchanged, so
the best fitness never increases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import seeding
from .data import Dataset, SplitIndices
from .errors import CapabilityError, ConfigError, RankError
from .penalties import (
    GENOME_HIGH,
    GENOME_LEN,
    GENOME_LOW,
    Genome,
    PenaltySpec,
    WeightRule,
    adaptive_weights,
)
from .solvers import (
    FitOptions,
    FitResult,
    Objective,
    _init_path_for_polynomial,
    build_lambda_grid,
    fit_named,
    ols_beta,
    subgradient_descent,
)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 150
    max_generations: int = 10
    elite_fraction: float = 0.20
    mutation_rate: float = 0.10
    mutation_bounds: tuple[float, float] = (-2.0, 2.0)
    coefficient_bounds: tuple[float, float] = (GENOME_LOW, GENOME_HIGH)
    diversity_epsilon: float = 0.25
    diversity_fraction: float = 0.95
    seed: int = 0
    grid_count: int = 100
    solver_tol: float = 1e-7
    solver_max_iter: int = 3000
    solver_warm_max_iter: int = 600

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError("population needs at least two genomes")
        if not 0.0 < self.elite_fraction < 1.0:
            raise ConfigError("elite_fraction must lie in (0, 1)")
        if self.population_size * self.elite_fraction < 1.0:
            raise ConfigError("population * elite_fraction must be >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError("mutation_rate must lie in [0, 1]")
        if self.mutation_bounds[0] >= self.mutation_bounds[1]:
            raise ConfigError("mutation bounds must be ordered")
        if self.max_generations < 1:
            raise ConfigError("need at least one generation")

    @property
    def n_elite(self) -> int:
        return min(math.ceil(self.elite_fraction * self.population_size),
                   self.population_size - 1)


@dataclass(frozen=True)
class FitnessRecord:
    genome: Genome
    lambda_hat: float
    beta_hat: np.ndarray
    fitness: float


@dataclass(frozen=True)
class GaRunResult:
    best_per_generation: np.ndarray
    final_genome: Genome
    final_fit: FitResult
    generations_run: int
    stop_reason: str  # diversity | budget
    mode: str
    generation_log: tuple[dict, ...]


def decide_mode(n: int, p: int) -> str:
    """Location-shifted penalties need an invertible pilot: n > p."""
    return "shifted" if n > p else "plain"


def init_population(cfg: GaConfig) -> list[Genome]:
    """population_size genomes, components IID Unif[0, 20]."""
    rng = seeding.derive_rng(cfg.seed, seeding.GA, 0)
    draws = rng.uniform(GENOME_LOW, GENOME_HIGH, size=(cfg.population_size, GENOME_LEN))
    return [Genome(tuple(row)) for row in draws]


# ---------------------------------------------------------------------------
# Genome evaluation
# ---------------------------------------------------------------------------
@dataclass(eq=False)
class _GaProblem:
    """Genome-independent pieces of the evaluation, computed once per run."""

    xb: np.ndarray
    yb: np.ndarray
    xl: np.ndarray
    yl: np.ndarray
    xa: np.ndarray
    ya: np.ndarray
    weights: np.ndarray | None
    shifts: np.ndarray | None
    lambdas: np.ndarray
    init_path: np.ndarray
    degenerate: bool = False


def _build_problem(ds: Dataset, split_idx: SplitIndices, mode: str, cfg: GaConfig) -> _GaProblem:
    if split_idx.train_beta is None:
        raise ConfigError("GA evaluation needs the lambda/beta/alpha sub-split")
    xb, yb = ds.x[split_idx.train_beta], ds.y[split_idx.train_beta]
    xl, yl = ds.x[split_idx.train_lambda], ds.y[split_idx.train_lambda]
    xa, ya = ds.x[split_idx.train_alpha], ds.y[split_idx.train_alpha]
    if len(yl) == 0 or len(ya) == 0:
        raise ConfigError("lambda and alpha sub-splits must be nonempty")

    weights = shifts = None
    degenerate = False
    if mode == "shifted":
        pilot_seed = seeding.derive_seed(cfg.seed, seeding.PILOT)
        try:
            # shifts come from a sparse pilot so truly-zero coordinates keep
            # an exact-zero shrinkage target; weights follow the inverse-OLS
            # rule whenever OLS is available
            sparse_pilot = fit_named("SCAD2", xb, yb, seed=pilot_seed).beta_hat
            try:
                w_source = ols_beta(xb, yb)
            except (CapabilityError, RankError):
                w_source = sparse_pilot
            weights = adaptive_weights(WeightRule("inverse_ols"), w_source)
            shifts = np.where(np.isfinite(weights), sparse_pilot, 0.0)
        except (CapabilityError, RankError, np.linalg.LinAlgError):
            degenerate = True

    if degenerate:
        empty = np.zeros((ds.p, 0))
        return _GaProblem(xb, yb, xl, yl, xa, ya, None, None, np.asarray([]), empty,
                          degenerate=True)
    gamma_min = 1e-3 if mode == "shifted" else 1e-2
    grid = build_lambda_grid(xb, yb, count=cfg.grid_count, gamma_min=gamma_min, spacing="linear")
    lambdas = grid.values()
    template = PenaltySpec.polynomial(Genome((1.0, 0, 0, 0, 0, 0)), weights=weights, shifts=shifts)
    init_path = _init_path_for_polynomial(xb, yb, template, lambdas)
    return _GaProblem(xb, yb, xl, yl, xa, ya, weights, shifts, lambdas, init_path,
                      degenerate=degenerate)


def _evaluate_on_problem(genome: Genome, prob: _GaProblem, cfg: GaConfig) -> FitnessRecord:
    if prob.degenerate:
        return FitnessRecord(genome, float("nan"), np.array([]), float("inf"))
    spec = PenaltySpec.polynomial(genome, weights=prob.weights, shifts=prob.shifts)
    best_loss = math.inf
    best_idx = 0
    best_beta = None
    prev = None
    for i, lam in enumerate(prob.lambdas):
        obj = Objective(prob.xb, prob.yb, spec, float(lam))
        start = prob.init_path[:, i]
        if prev is not None and obj.value(prev) < obj.value(start):
            start = prev
        budget = cfg.solver_max_iter if i == 0 else cfg.solver_warm_max_iter
        fit = subgradient_descent(obj, init=start, tol=cfg.solver_tol, max_iter=budget)
        prev = fit.beta_hat
        r = prob.yl - prob.xl @ fit.beta_hat
        loss = float(r @ r) / len(prob.yl)
        if loss < best_loss:
            best_loss, best_idx, best_beta = loss, i, fit.beta_hat
    resid = prob.ya - prob.xa @ best_beta
    fitness = float(resid @ resid)
    return FitnessRecord(genome, float(prob.lambdas[best_idx]), best_beta, fitness)


def evaluate_genome(genome: Genome, ds: Dataset, split_idx: SplitIndices, mode: str,
                    cfg: GaConfig | None = None) -> FitnessRecord:
    """Standalone evaluation (the run loop shares the problem setup instead)."""
    cfg = cfg or GaConfig()
    return _evaluate_on_problem(genome, _build_problem(ds, split_idx, mode, cfg), cfg)


# ---------------------------------------------------------------------------
# Generation step and run loop
# ---------------------------------------------------------------------------
def _sorted_records(records: list[FitnessRecord]) -> list[FitnessRecord]:
    return sorted(records, key=lambda r: (r.fitness, r.genome.alpha))


def step_generation(records: list[FitnessRecord], cfg: GaConfig,
                    rng: np.random.Generator) -> list[Genome]:
    """Elites pass unchanged; crossover + mutation of the rest fills up to M."""
    ordered = _sorted_records(records)
    elites = [r.genome for r in ordered[: cfg.n_elite]]
    pool = [r.genome for r in ordered[cfg.n_elite:]]
    if not pool:
        pool = elites
    lo, hi = cfg.mutation_bounds
    clo, chi = cfg.coefficient_bounds
    children = []
    for _ in range(cfg.population_size - len(elites)):
        i, j = rng.integers(len(pool), size=2)
        a1 = np.asarray(pool[i].alpha)
        a2 = np.asarray(pool[j].alpha)
        child = np.where(rng.random(GENOME_LEN) < 0.5, a1, a2)
        mutate = rng.random(GENOME_LEN) < cfg.mutation_rate
        if np.any(mutate):
            child = child + mutate * rng.uniform(lo, hi, size=GENOME_LEN)
        children.append(Genome(tuple(np.clip(child, clo, chi))))
    return elites + children


def _diversity_reached(genomes: list[Genome], best: Genome, cfg: GaConfig) -> bool:
    best_arr = best.as_array()
    dists = [float(np.max(np.abs(g.as_array() - best_arr))) for g in genomes]
    frac = float(np.mean([d <= cfg.diversity_epsilon for d in dists]))
    return frac >= cfg.diversity_fraction


def run_ga(ds: Dataset, split_idx: SplitIndices, cfg: GaConfig,
           mode: str | None = None,
           initial_population: list[Genome] | None = None) -> GaRunResult:
    """Iterate evaluate / select / breed until the budget or diversity stop."""
    mode = mode or decide_mode(ds.n, ds.p)
    prob = _build_problem(ds, split_idx, mode, cfg)
    rng = seeding.derive_rng(cfg.seed, seeding.GA, 1)
    population = list(initial_population) if initial_population else init_population(cfg)
    if len(population) != cfg.population_size:
        raise ConfigError("initial population size disagrees with config")

    cache: dict[tuple, FitnessRecord] = {}

    def evaluate(genome: Genome) -> FitnessRecord:
        rec = cache.get(genome.alpha)
        if rec is None:
            rec = _evaluate_on_problem(genome, prob, cfg)
            cache[genome.alpha] = rec
        return rec

    best_per_generation = []
    log = []
    best_record = None
    stop_reason = "budget"
    gen = 0
    for gen in range(1, cfg.max_generations + 1):
        records = [evaluate(g) for g in population]
        ordered = _sorted_records(records)
        gen_best = ordered[0]
        if best_record is None or (gen_best.fitness, gen_best.genome.alpha) < (
                best_record.fitness, best_record.genome.alpha):
            best_record = gen_best
        best_per_generation.append(best_record.fitness)
        finite = [r.fitness for r in records if math.isfinite(r.fitness)]
        log.append({
            "generation": gen,
            "best_fitness": best_record.fitness if math.isfinite(best_record.fitness) else None,
            "mean_fitness": float(np.mean(finite)) if finite else None,
            "best_genome": list(best_record.genome.alpha),
        })
        if _diversity_reached(population, gen_best.genome, cfg):
            stop_reason = "diversity"
            break
        if gen == cfg.max_generations:
            break
        population = step_generation(records, cfg, rng)

    final_fit = FitResult(
        beta_hat=best_record.beta_hat,
        lambda_hat=best_record.lambda_hat,
        objective_trace=np.asarray([best_record.fitness]),
        iterations=gen,
        converged=stop_reason == "diversity",
        method="GA",
    )
    return GaRunResult(
        best_per_generation=np.asarray(best_per_generation),
        final_genome=best_record.genome,
        final_fit=final_fit,
        generations_run=gen,
        stop_reason=stop_reason,
        mode=mode,
        generation_log=tuple(log),
    )
