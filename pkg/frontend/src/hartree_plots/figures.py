"""Deterministic figures for growth traces and threshold sweeps."""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaError, load_table

__all__ = ["PlotJob", "render", "fit_loglog_slope"]


@dataclass(frozen=True)
class PlotJob:
    kind: str  # growth | nsweep | equivalence
    csv_path: str
    out_path: str
    fit: bool = False


def fit_loglog_slope(x, y):
    """Least-squares slope of log y against log x, ignoring nonpositive
    entries (they carry no power-law information)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if np.count_nonzero(keep) < 2:
        raise ValueError("need at least two positive points to fit a slope")
    slope, intercept = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(slope), float(intercept)


def _render_growth(columns, ax):
    t = columns["t"]
    for name, style in (("hs_norm", "-"), ("mass", "--"), ("e1", "-."), ("e2", ":")):
        ax.plot(t, columns[name], style, marker="o" if len(t) < 3 else None, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_title("conserved and almost-conserved quantities")
    ax.legend()


def _render_sweep(columns, ax, ycol, fit):
    n = np.asarray(columns["N"])
    y = np.asarray(columns[ycol])
    pos = y > 0
    ax.loglog(n[pos], y[pos], "o", label=ycol)
    if np.any(~pos):
        ax.plot([], [], " ", label=f"{int(np.count_nonzero(~pos))} nonpositive point(s) omitted")
    if fit:
        slope, intercept = fit_loglog_slope(n, y)
        xs = np.linspace(float(n[pos].min()), float(n[pos].max()), 64)
        ax.loglog(xs, np.exp(intercept) * xs**slope, "-", label=f"slope {slope:+.2f}")
    ax.set_xlabel("N")
    ax.set_ylabel(ycol)
    ax.legend()


def render(job: PlotJob) -> str:
    """Render the figure for a job and return the output path."""
    columns = load_table(job.kind, job.csv_path)
    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=120)
    try:
        if job.kind == "growth":
            _render_growth(columns, ax)
        elif job.kind == "nsweep":
            _render_sweep(columns, ax, "rel_increment", job.fit)
        elif job.kind == "equivalence":
            _render_sweep(columns, ax, "equiv_ratio", job.fit)
        else:
            raise SchemaError(f"unknown figure kind {job.kind!r}")
        fig.tight_layout()
        fig.savefig(job.out_path, metadata={"Software": None})
    finally:
        plt.close(fig)
    return job.out_path
