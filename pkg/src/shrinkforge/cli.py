"""Command-line entry point.

Subcommands: instability, ga, oracle, real, simulate.  Every command is a
pure function of (config file, master seed): reruns produce byte-identical
delimited outputs.  Figures are rendered next to each CSV.

Exit codes: 0 success, 1 partial results, 2 configuration error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import seeding
from .config import ExperimentConfig, Section
from .data import CovarianceSpec, Dataset, SimConfig, SplitSpec, generate_dataset, load_csv, save_csv, split, subsample
from .diagnostics import (
    ARTIFICIALITY_NOTE,
    OracleRateSchedule,
    monotone_trend_ok,
    oracle_sweep,
    shifted_oracle_sweep,
)
from .errors import CapabilityError, ConfigError, ParseError, RankError, ShrinkforgeError
from .ga import GaConfig, decide_mode, run_ga
from .penalties import PenaltySpec
from .report import (
    plot_ga_trajectory,
    plot_instability_curves,
    plot_mspe_bars,
    plot_oracle_report,
    write_curve_csv,
    write_json,
    write_jsonl,
    write_metrics_csv,
    write_mspe_csv,
)
from .solvers import METHOD_NAMES, FitOptions, fit_named, runnable_methods
from .stability import DEFAULT_TAUS, InstabilityConfig, run_instability

PAPER_SPLITS = {40: (28, 12), 75: (60, 15), 150: (120, 30), 500: (350, 150)}

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def default_split(n: int) -> tuple[int, int]:
    """Paper train/test sizes for the studied n; 70/30 otherwise."""
    if n in PAPER_SPLITS:
        return PAPER_SPLITS[n]
    n_test = max(1, int(round(0.3 * n)))
    return n - n_test, n_test


def _fit_options(sec: Section) -> FitOptions:
    return FitOptions(
        grid_count=sec.get_int("grid_count", 100),
        cv_folds=sec.get_int("cv_folds", 5),
        max_iter=sec.get_int("solver_max_iter", 5000),
        warm_max_iter=sec.get_int("solver_warm_max_iter", 800),
    )


def _parse_methods(sec: Section) -> tuple[str, ...]:
    methods = tuple(sec.get_str_list("methods", METHOD_NAMES))
    unknown = [m for m in methods if m not in METHOD_NAMES]
    if unknown:
        raise ConfigError(f"unknown methods {unknown}; roster is {list(METHOD_NAMES)}")
    return methods


def _monotonicity_note(curve) -> str:
    means = [pt.mean_instability for pt in curve.points if pt.replicates > 0]
    rises = sum(1 for a, b in zip(means, means[1:]) if b >= a)
    steps = max(len(means) - 1, 0)
    return f"{curve.method}: {rises}/{steps} non-decreasing steps"


# ---------------------------------------------------------------------------
# instability
# ---------------------------------------------------------------------------
def cmd_instability(cfg: ExperimentConfig, seed: int, out_dir: Path, jobs: int,
                    plots: bool = True) -> int:
    sec = cfg.section("instability")
    p = sec.get_int("p", 100)
    n_values = sec.get_int_list("n_values", [40])
    sparsities = sec.get_float_list("sparsity_values", [0.5])
    tails_list = sec.get_str_list("tails", ["light"])
    cov_kinds = sec.get_str_list("covariance", ["identity"])
    off_diag = sec.get_float("off_diagonal", 0.5)
    taus = tuple(sec.get_float_list("tau_values", DEFAULT_TAUS))
    replicates = sec.get_int("replicates", 100)
    methods = _parse_methods(sec)
    options = _fit_options(sec)

    status = EXIT_OK
    for n in n_values:
        for sparsity in sparsities:
            for tails in tails_list:
                for cov in cov_kinds:
                    if tails == "heavy" and cov != "identity":
                        print(f"[skip] heavy tails pair with identity covariance only "
                              f"(requested {cov})")
                        continue
                    cell = f"n{n}_sp{sparsity:g}_{tails}_{cov}"
                    ds = generate_dataset(SimConfig(
                        n=n, p=p, sparsity=sparsity, tails=tails,
                        covariance=CovarianceSpec(cov, p, off_diag),
                        seed=seeding.derive_seed(seed, seeding.DATASET, seeding.name_key(cell)),
                    ))
                    n_train, n_test = default_split(n)
                    sweep = InstabilityConfig(
                        split=SplitSpec(n_train, n_test),
                        methods=methods,
                        tau_values=taus,
                        replicates=replicates,
                        seed=seeding.derive_seed(seed, seeding.name_key("instability"),
                                                 seeding.name_key(cell)),
                        fit_options=options,
                    )
                    result = run_instability(ds, sweep, jobs=jobs)
                    comments = [f"cell: {cell}", f"master_seed: {seed}"]
                    write_curve_csv(out_dir / f"instability_{cell}.csv", result.curves, comments)
                    if result.metrics:
                        entries = [(m, tails, sparsity, s) for m, s in sorted(result.metrics.items())]
                        write_metrics_csv(out_dir / f"instability_{cell}_metrics.csv",
                                          entries, comments)
                    if plots:
                        plot_instability_curves(result.curves,
                                                out_dir / f"instability_{cell}.png", title=cell)
                    for m, reason in result.skipped.items():
                        print(f"[{cell}] skipped {m}: {reason}")
                    for curve in result.curves:
                        print(f"[{cell}] {_monotonicity_note(curve)}")
                    attempted = [c for c in result.curves]
                    all_failed = (not attempted) or all(
                        pt.replicates == 0 for c in attempted for pt in c.points)
                    if all_failed:
                        print(f"[{cell}] every fit failed", file=sys.stderr)
                        status = EXIT_PARTIAL
    return status


# ---------------------------------------------------------------------------
# ga
# ---------------------------------------------------------------------------
def _ga_dataset(sec: Section, seed: int, standardize: bool) -> Dataset:
    source = sec.get("source", "simulated")
    if source == "csv":
        ds = load_csv(sec.require("csv"), sec.require("response"), standardize=standardize)
        m = sec.get_int("subsample")
        if m:
            ds = subsample(ds, m, seeding.derive_seed(seed, seeding.DATASET, seeding.name_key("ga_sub")))
        return ds
    if source != "simulated":
        raise ConfigError(f"[ga] unknown source {source!r}")
    n = sec.get_int("n", 150)
    p = sec.get_int("p", 100)
    return generate_dataset(SimConfig(
        n=n, p=p,
        sparsity=sec.get_float("sparsity", 0.5),
        tails=sec.get("tails", "light"),
        covariance=CovarianceSpec(sec.get("covariance", "identity"), p,
                                  sec.get_float("off_diagonal", 0.5)),
        seed=seeding.derive_seed(seed, seeding.DATASET, seeding.name_key("ga")),
    ))


def cmd_ga(cfg: ExperimentConfig, seed: int, out_dir: Path, jobs: int,
           plots: bool = True, standardize: bool = True) -> int:
    sec = cfg.section("ga")
    ds = _ga_dataset(sec, seed, standardize)

    sizes = sec.get_int_list("split")
    if len(sizes) != 4:
        raise ConfigError("[ga] split must be lambda,beta,alpha,test sizes")
    n_lam, n_beta, n_alpha, n_test = sizes
    if sum(sizes) != ds.n:
        raise ConfigError(f"[ga] split sizes sum to {sum(sizes)}, dataset has n = {ds.n}")
    spec = SplitSpec(n_train=n_lam + n_beta + n_alpha, n_test=n_test,
                     n_train_lambda=n_lam, n_train_beta=n_beta, n_train_alpha=n_alpha,
                     seed=seeding.derive_seed(seed, seeding.SPLIT, seeding.name_key("ga")))
    idx = split(ds, spec)

    mode = sec.get("mode", "auto")
    if mode == "auto":
        mode = decide_mode(ds.n, ds.p)
    print(f"[ga] mode resolved: {mode} (n = {ds.n}, p = {ds.p})")

    ga_cfg = GaConfig(
        population_size=sec.get_int("population", 150),
        max_generations=sec.get_int("generations", 10),
        elite_fraction=sec.get_float("elite_fraction", 0.20),
        mutation_rate=sec.get_float("mutation_rate", 0.10),
        mutation_bounds=(sec.get_float("mutation_low", -2.0), sec.get_float("mutation_high", 2.0)),
        diversity_epsilon=sec.get_float("diversity_epsilon", 0.25),
        seed=seeding.derive_seed(seed, seeding.GA, seeding.name_key("ga")),
        grid_count=sec.get_int("grid_count", 100),
    )
    result = run_ga(ds, idx, ga_cfg, mode=mode)
    print(f"[ga] stopped after {result.generations_run} generations ({result.stop_reason}); "
          f"best genome {result.final_genome.alpha}")

    write_jsonl(out_dir / "ga_runlog.jsonl", result.generation_log)
    final_spec = PenaltySpec.polynomial(result.final_genome)
    write_json(out_dir / "ga_penalty.json", {
        "penalty": final_spec.to_record(),
        "mode": result.mode,
        "stop_reason": result.stop_reason,
        "generations_run": result.generations_run,
        "lambda_hat": result.final_fit.lambda_hat,
        "best_fitness": None if not np.isfinite(result.best_per_generation[-1])
        else float(result.best_per_generation[-1]),
    })

    x_te, y_te = ds.x[idx.test], ds.y[idx.test]
    x_tr, y_tr = ds.x[idx.train], ds.y[idx.train]
    entries = []
    ga_ok = np.isfinite(result.best_per_generation[-1]) and result.final_fit.beta_hat.size
    if ga_ok:
        r = y_te - x_te @ result.final_fit.beta_hat
        entries.append(("GA", float(np.mean(r * r))))
    else:
        entries.append(("GA", None))
    options = _fit_options(sec)
    methods = _parse_methods(sec)
    for m in methods:
        if m not in runnable_methods(len(y_tr), ds.p, (m,)):
            print(f"[ga] skipped {m}: requires n > p")
            continue
        try:
            fit = fit_named(m, x_tr, y_tr,
                            seed=seeding.derive_seed(seed, seeding.METHOD, seeding.name_key(m)),
                            options=options)
        except (CapabilityError, RankError) as exc:
            print(f"[ga] skipped {m}: {exc}")
            continue
        r = y_te - x_te @ fit.beta_hat
        entries.append((m, float(np.mean(r * r))))
    write_mspe_csv(out_dir / "ga_mspe.csv", entries,
                   [f"mode: {mode}", f"master_seed: {seed}"])
    if plots:
        plot_ga_trajectory(result.best_per_generation, out_dir / "ga_trajectory.png",
                           title=f"GA best fitness ({mode} mode)")
        plot_mspe_bars(entries, out_dir / "ga_mspe.png", title="test MSPE by method")
    return EXIT_OK if ga_ok else EXIT_PARTIAL


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------
def cmd_oracle(cfg: ExperimentConfig, seed: int, out_dir: Path, jobs: int,
               plots: bool = True) -> int:
    sec = cfg.section("oracle")
    schedule = OracleRateSchedule(
        h_exponent=sec.get_float("h_exponent", 0.25),
        g_exponent=sec.get_float("g_exponent", 0.25),
    )
    kind = sec.get("penalty", "scad")
    n_values = sec.get_int_list("n_values", [100, 200, 500])
    replicates = sec.get_int("replicates", 100)
    p = sec.get_int("p", 10)
    p_nonzero = sec.get_int("p_nonzero", 5)
    pilot = sec.get("pilot")

    sweep_seed = seeding.derive_seed(seed, seeding.ORACLE, seeding.name_key("oracle"))
    if pilot:
        report = shifted_oracle_sweep(kind, schedule, n_values, replicates,
                                      seed=sweep_seed, p=p, p_nonzero=p_nonzero, pilot=pilot)
    else:
        report = oracle_sweep(kind, schedule, n_values, replicates,
                              seed=sweep_seed, p=p, p_nonzero=p_nonzero)
    trend = monotone_trend_ok(report.zero_recovery_rate)
    trend_line = f"monotone-trend: zero recovery non-decreasing (<=1 inversion): {trend}"
    print(f"[oracle] {trend_line}")
    comments = [
        ARTIFICIALITY_NOTE,
        f"schedule: a_n = n^-{0.5 + schedule.h_exponent:g}, b_n = n^{schedule.g_exponent - 0.5:g}",
        f"pilot: {pilot or 'none'}",
        trend_line,
    ]
    from .report import write_oracle_csv

    write_oracle_csv(out_dir / "oracle_report.csv", report, comments)
    if plots:
        plot_oracle_report(report, out_dir / "oracle_report.png",
                           title=f"{kind} oracle diagnostic")
    return EXIT_OK


# ---------------------------------------------------------------------------
# real
# ---------------------------------------------------------------------------
def cmd_real(cfg: ExperimentConfig, seed: int, out_dir: Path, jobs: int,
             plots: bool = True, standardize: bool = True) -> int:
    sec = cfg.section("real")
    ds_full = load_csv(sec.require("csv"), sec.require("response"),
                       standardize=sec.get_bool("standardize", standardize))
    sizes = sec.get_int_list("sizes", [40, 75, 150, 500])
    taus = tuple(sec.get_float_list("tau_values", DEFAULT_TAUS))
    replicates = sec.get_int("replicates", 100)
    methods = _parse_methods(sec)
    options = _fit_options(sec)

    status = EXIT_OK
    for m in sizes:
        if m > ds_full.n:
            raise ConfigError(f"[real] subsample size {m} exceeds data size {ds_full.n}")
        sub = subsample(ds_full, m, seeding.derive_seed(seed, seeding.DATASET,
                                                        seeding.name_key("real"), m))
        n_train, n_test = default_split(m)
        sweep = InstabilityConfig(
            split=SplitSpec(n_train, n_test),
            methods=methods,
            tau_values=taus,
            replicates=replicates,
            seed=seeding.derive_seed(seed, seeding.name_key("real"), m),
            fit_options=options,
        )
        result = run_instability(sub, sweep, jobs=jobs)
        for name, reason in result.skipped.items():
            print(f"[real n={m}] skipped {name}: {reason}")
        comments = [f"subsample: {m}", f"master_seed: {seed}"]
        write_curve_csv(out_dir / f"real_n{m}.csv", result.curves, comments)
        if plots:
            plot_instability_curves(result.curves, out_dir / f"real_n{m}.png",
                                    title=f"real data, n = {m}")
        if all(pt.replicates == 0 for c in result.curves for pt in c.points):
            print(f"[real n={m}] every fit failed", file=sys.stderr)
            status = EXIT_PARTIAL
    return status


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------
def cmd_simulate(cfg: ExperimentConfig, seed: int, out_dir: Path, jobs: int) -> int:
    sec = cfg.section("simulate")
    p = sec.get_int("p", 100)
    ds = generate_dataset(SimConfig(
        n=sec.get_int("n", 100), p=p,
        sparsity=sec.get_float("sparsity", 0.5),
        tails=sec.get("tails", "light"),
        covariance=CovarianceSpec(sec.get("covariance", "identity"), p,
                                  sec.get_float("off_diagonal", 0.5)),
        seed=seeding.derive_seed(seed, seeding.DATASET, seeding.name_key("simulate")),
    ))
    out_dir.mkdir(parents=True, exist_ok=True)
    save_csv(ds, out_dir / "dataset.csv", true_beta_sidecar=out_dir / "true_beta.csv")
    print(f"[simulate] wrote {out_dir / 'dataset.csv'} (n = {ds.n}, p = {ds.p})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", required=True, help="experiment config file")
    shared.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    shared.add_argument("--out", default=None, help="output directory (overrides config)")
    shared.add_argument("--jobs", type=int, default=None, help="worker processes")
    shared.add_argument("--no-standardize", action="store_true",
                        help="skip design standardization for CSV data")
    shared.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    parser = argparse.ArgumentParser(prog="shrinkforge",
                                     description="shrinkage-method comparison toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("instability", "ga", "oracle", "real", "simulate"):
        sub.add_parser(name, parents=[shared])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
        common = cfg.common
        seed = args.seed if args.seed is not None else common.get_int("seed", 0)
        out_dir = Path(args.out if args.out is not None else common.get("out", "out"))
        jobs = args.jobs if args.jobs is not None else common.get_int("jobs", 1)
        plots = not args.no_plots
        standardize = not args.no_standardize
        if args.command == "instability":
            return cmd_instability(cfg, seed, out_dir, jobs, plots)
        if args.command == "ga":
            return cmd_ga(cfg, seed, out_dir, jobs, plots, standardize)
        if args.command == "oracle":
            return cmd_oracle(cfg, seed, out_dir, jobs, plots)
        if args.command == "real":
            return cmd_real(cfg, seed, out_dir, jobs, plots, standardize)
        return cmd_simulate(cfg, seed, out_dir, jobs)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
