"""Label-based evaluation of score series.

Precision-recall curves use grouped thresholds: one point per distinct score
value, descending, with all tied samples crossing together. Average
precision is the step sum over curve points, no interpolation. For slow
degradation data, scores are compared by RMSE against the complement of the
rescaled health index (scores rise as health falls).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .refine import ScoreSeries, rescale_unit


@dataclass(frozen=True)
class PRCurve:
    """Precision/recall at each distinct threshold, descending, plus AP."""

    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    ap: float

    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds, self.precision, self.recall))


def _score_values(scores) -> np.ndarray:
    if isinstance(scores, ScoreSeries):
        return scores.values
    return np.asarray(scores, dtype=np.float64)


def pr_curve(scores, labels) -> PRCurve:
    """Precision-recall curve of scores against binary labels.

    Requires at least one positive and one negative label, otherwise the
    curve (and AP) is undefined.
    """
    s = _score_values(scores)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise DataError(f"scores have shape {s.shape} but labels {y.shape}")
    n_pos = int(np.sum(y == 1))
    if n_pos == 0 or n_pos == y.size:
        raise DataError(
            f"PR curve needs both classes; got {n_pos} positives out of {y.size}"
        )

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = (y[order] == 1).astype(np.int64)

    # last index of each tie block = one grouped threshold
    boundary = np.ones(s.size, dtype=bool)
    boundary[:-1] = s_sorted[:-1] != s_sorted[1:]
    tp = np.cumsum(y_sorted)[boundary]
    pp = np.flatnonzero(boundary) + 1

    precision = tp / pp
    recall = tp / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    ap = float(np.sum((recall - prev_recall) * precision))
    return PRCurve(
        thresholds=s_sorted[boundary],
        precision=precision,
        recall=recall,
        ap=ap,
    )


def average_precision(scores, labels) -> float:
    return pr_curve(scores, labels).ap


def rmse(scores, truth) -> float:
    """Root mean squared error between a score series and a target series."""
    a = _score_values(scores)
    b = np.asarray(truth, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"series lengths differ: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.sqrt(np.mean(diff * diff)))


def degradation_target(health) -> np.ndarray:
    """Ground-truth degradation signal: complement of the rescaled health index.

    Scores rise as health falls, so a perfect degradation score tracks
    1 - health after the health index is min-max rescaled to [0, 1]. A
    constant health series is used as-is (rescaling would be undefined).
    """
    h = np.asarray(health, dtype=np.float64)
    if h.max() > h.min():
        h = rescale_unit(h)
    return 1.0 - h
