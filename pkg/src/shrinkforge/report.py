"""Delimited outputs and the figures rendered alongside them.

Every CSV starts with the schema header line and is written with fixed
float formatting and explicit newlines, so identical inputs give identical
bytes.  Figures are PNG via the Agg backend.
"""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCHEMA_HEADER = "# shrinkforge-v1"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def write_rows(path, columns, rows, header_comments=()) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [SCHEMA_HEADER]
    lines.extend(f"# {c}" for c in header_comments)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_curve_csv(path, curves, header_comments=()) -> None:
    cols = ["method", "tau", "mean_instability", "sd_instability", "replicates"]
    rows = [
        (c.method, pt.tau, pt.mean_instability, pt.sd_instability, pt.replicates)
        for c in curves
        for pt in c.points
    ]
    write_rows(path, cols, rows, header_comments)


def write_metrics_csv(path, entries, header_comments=()) -> None:
    """entries: iterable of (method, tails, sparsity, SelectionMetrics)."""
    cols = ["method", "tails", "sparsity", "tot", "tr", "fa"]
    rows = [(m, tails, sparsity, s.tot, s.tr, s.fa) for m, tails, sparsity, s in entries]
    write_rows(path, cols, rows, header_comments)


def write_oracle_csv(path, report, header_comments=()) -> None:
    cols = ["n", "penalty", "zero_recovery_rate", "coverage", "replicates"]
    rows = [
        (report.n_values[i], report.penalty, report.zero_recovery_rate[i],
         report.coverage[i], report.replicates)
        for i in range(len(report.n_values))
    ]
    write_rows(path, cols, rows, header_comments)


def write_mspe_csv(path, entries, header_comments=()) -> None:
    """entries: iterable of (method, mspe or None for failed methods)."""
    write_rows(path, ["method", "mspe"], entries, header_comments)


def write_jsonl(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(rec, sort_keys=True) for rec in records]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def write_json(path, record) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------
def _save(fig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_instability_curves(curves, path, title="") -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for curve in curves:
        taus = [pt.tau for pt in curve.points]
        means = [pt.mean_instability for pt in curve.points]
        ax.plot(taus, means, marker="o", markersize=3, linewidth=1.2, label=curve.method)
    ax.set_xlabel(r"perturbation SD $\tau$")
    ax.set_ylabel("mean instability")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=7, ncol=2)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def plot_ga_trajectory(best_per_generation, path, title="") -> None:
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    gens = np.arange(1, len(best_per_generation) + 1)
    ax.plot(gens, best_per_generation, marker="o", linewidth=1.2)
    ax.set_xlabel("generation")
    ax.set_ylabel("best fitness (holdout SSE)")
    if title:
        ax.set_title(title, fontsize=10)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def plot_mspe_bars(entries, path, title="") -> None:
    entries = [(m, v) for m, v in entries if v is not None]
    fig, ax = plt.subplots(figsize=(6.4, 3.8))
    names = [m for m, _ in entries]
    vals = [v for _, v in entries]
    ax.bar(names, vals, color=["#C44E52" if m == "GA" else "#4C72B0" for m in names])
    ax.set_ylabel("test MSPE")
    if title:
        ax.set_title(title, fontsize=10)
    ax.tick_params(axis="x", rotation=45, labelsize=8)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def plot_oracle_report(report, path, title="") -> None:
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    ax.plot(report.n_values, report.zero_recovery_rate, marker="o", label="zero recovery")
    ax.plot(report.n_values, report.coverage, marker="s", label="coverage")
    ax.axhline(0.95, color="gray", linewidth=0.8, linestyle="--")
    ax.set_xlabel("n")
    ax.set_ylabel("rate")
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
