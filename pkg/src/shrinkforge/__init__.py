"""shrinkforge: penalized regression, instability diagnostics, GA penalty search."""

from .data import (
    CovarianceSpec,
    Dataset,
    SimConfig,
    SplitIndices,
    SplitSpec,
    generate_dataset,
    load_csv,
    perturb_response,
    save_csv,
    split,
    subsample,
)
from .diagnostics import OracleRateSchedule, OracleReport, oracle_sweep, shifted_oracle_sweep
from .ga import FitnessRecord, GaConfig, GaRunResult, evaluate_genome, init_population, run_ga, step_generation
from .penalties import (
    EXCLUDE,
    ConditionReport,
    Genome,
    PenaltySpec,
    WeightRule,
    adaptive_weights,
    condition_check,
    penalty_subgradient,
    penalty_value,
)
from .solvers import (
    FitOptions,
    FitResult,
    LambdaGrid,
    Objective,
    build_lambda_grid,
    coordinate_fit,
    cv_select_lambda,
    fit_method,
    fit_named,
    lla_fit,
    objective_value,
    ols_fit,
    select_lambda,
    soft_threshold,
    subgradient_descent,
)
from .stability import (
    InstabilityConfig,
    InstabilityCurve,
    InstabilityResult,
    SelectionMetrics,
    aggregate_metrics,
    instability_curves,
    instability_score,
    run_instability,
    selection_metrics,
)

__version__ = "0.1.0"
