"""Figure rendering for the report-producing commands.

Each function draws one figure from already-computed report data and
writes it next to the delimited output; nothing here feeds back into the
numeric pipeline. Matplotlib runs on the Agg backend so rendering works
headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .mmd import MmdReport
from .stats import CcdfCurve, ChiSquaredRanking, FitResult, GroupStats, log_pdf

LABEL_COLORS = {"rumor": "#c0392b", "non-rumor": "#2471a3",
                "unlabeled": "#7f8c8d", "all": "#1e272e"}


def _color(label: str) -> str:
    return LABEL_COLORS.get(label, "#1e272e")


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_ccdf(curves: dict[str, CcdfCurve], feature: str, path: str | Path,
              log_x: bool = False, log_y: bool = False) -> Path:
    """Survival curves per label, drawn as post-steps."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label in sorted(curves):
        xs = [p[0] for p in curves[label].points]
        ys = [p[1] for p in curves[label].points]
        ax.step(xs, ys, where="post", label=label, color=_color(label))
    if log_x:
        ax.set_xscale("log")
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(feature)
    ax.set_ylabel("CCDF  P(X > x)")
    ax.legend()
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_fit(values: Sequence[float], fits: Sequence[FitResult], feature: str,
             path: str | Path) -> Path:
    """Sample density histogram with the fitted densities overlaid."""
    arr = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.hist(arr, bins=min(60, max(10, arr.size // 20)), density=True,
            color="#bdc3c7", edgecolor="white", label="data")
    grid = np.linspace(arr.min(), arr.max(), 400)
    for fit in fits:
        density = np.exp(log_pdf(fit.family, fit.params, grid))
        ax.plot(grid, density, label=f"{fit.family} (nllf={fit.nllf:.1f})")
    ax.set_xlabel(feature)
    ax.set_ylabel("density")
    ax.legend()
    return _finish(fig, path)


def plot_ranking(ranking: ChiSquaredRanking, path: str | Path) -> Path:
    names = [name for name, _ in ranking.entries]
    scores = [score for _, score in ranking.entries]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.barh(range(len(names))[::-1], scores, color="#2471a3")
    ax.set_yticks(range(len(names))[::-1], names)
    ax.set_xlabel("chi-squared statistic")
    return _finish(fig, path)


def plot_groups(summary: dict[str, GroupStats], feature: str, path: str | Path) -> Path:
    labels = sorted(summary)
    means = [summary[l].mean for l in labels]
    medians = [summary[l].median for l in labels]
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(x - 0.2, means, width=0.4, label="mean",
           color=[_color(l) for l in labels])
    ax.bar(x + 0.2, medians, width=0.4, label="median",
           color=[_color(l) for l in labels], alpha=0.5)
    ax.set_xticks(x, labels)
    ax.set_ylabel(feature)
    ax.legend()
    return _finish(fig, path)


def plot_mmd(report: MmdReport, path: str | Path) -> Path:
    names = [row[0] for row in report.per_statistic]
    scores = [row[1] for row in report.per_statistic]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, scores, color="#2471a3")
    ax.axhline(report.aggregate, color="#c0392b", linestyle="--",
               label=f"aggregate {report.aggregate:.4f}")
    ax.set_ylabel("MMD$^2$")
    ax.legend()
    return _finish(fig, path)


def plot_depth_time(rows: Sequence[tuple[int, float, int]], path: str | Path,
                    label: Optional[str] = None) -> Path:
    """Mean reception time by depth level for one cascade or group."""
    fig, ax = plt.subplots(figsize=(6, 4))
    depths = [r[0] for r in rows]
    times = [r[1] for r in rows]
    ax.plot(depths, times, marker="o", color=_color(label or "all"), label=label)
    ax.set_xlabel("depth")
    ax.set_ylabel("mean reception time")
    if label:
        ax.legend()
    return _finish(fig, path)
