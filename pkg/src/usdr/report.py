"""Figure rendering for refinement runs.

Renders the two standard report figures next to the delimited outputs:
score series per method with the ground truth overlaid, and
precision-recall curves with average precision in the legend. Files are
written in whatever format the path suffix selects (SVG by default in the
CLI).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import PRCurve
from .refine import ScoreSeries

METHOD_COLORS = {
    "usdr": "tab:red",
    "blind_all": "tab:blue",
    "blind_ensemble": "tab:cyan",
    "clean": "tab:orange",
}


def _values(series) -> np.ndarray:
    return series.values if isinstance(series, ScoreSeries) else np.asarray(series)


def _save(fig, path) -> None:
    kwargs = {}
    if str(path).endswith(".svg"):
        kwargs["metadata"] = {"Date": None}  # keep output byte-stable
    fig.savefig(path, bbox_inches="tight", **kwargs)
    plt.close(fig)


def plot_scores(scores: dict, path, labels=None, health=None) -> None:
    """Score-vs-index lines per method, with fault spans or health overlaid."""
    fig, ax = plt.subplots(figsize=(9, 4))
    n = None
    for method, series in scores.items():
        v = _values(series)
        n = len(v)
        ax.plot(v, label=method, lw=1.0, color=METHOD_COLORS.get(method))
    if labels is not None:
        labels = np.asarray(labels)
        edges = np.flatnonzero(np.diff(np.r_[0, labels, 0]))
        for start, stop in zip(edges[::2], edges[1::2]):
            ax.axvspan(start, stop, color="tab:red", alpha=0.12, lw=0)
    if health is not None:
        ax.plot(1.0 - np.asarray(health, dtype=float), color="tab:green", lw=1.5,
                ls="--", label="degradation truth")
    ax.set_xlabel("sample index")
    ax.set_ylabel("score")
    ax.set_xlim(0, n - 1 if n else 1)
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="upper left", fontsize=8)
    _save(fig, path)


def plot_pr_curves(curves: dict, path) -> None:
    """Precision-recall curve per method; AP reported in the legend."""
    fig, ax = plt.subplots(figsize=(5, 4.5))
    for method, curve in curves.items():
        assert isinstance(curve, PRCurve)
        recall = np.r_[0.0, curve.recall]
        precision = np.r_[curve.precision[0] if curve.precision.size else 1.0, curve.precision]
        ax.step(recall, precision, where="post", label=f"{method} (AP={curve.ap:.2f})",
                color=METHOD_COLORS.get(method))
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.05)
    ax.legend(loc="lower left", fontsize=8)
    _save(fig, path)
