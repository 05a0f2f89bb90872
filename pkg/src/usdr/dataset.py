"""Time-ordered multivariate datasets and their CSV representation.

A dataset couples an input matrix with a target matrix (identical to the
inputs for reconstruction models) and, optionally, per-sample ground truth
used only by evaluation: binary anomaly labels and a health index in [0, 1].
The refinement code never receives labels or health; they ride along for
the evaluation stage only.

CSV is the single ingestion format: UTF-8, header row required, one row per
time step (file order is time order). The column names ``label`` and
``health`` are reserved for ground truth; every other column is a feature
unless an explicit selection is given.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

RESERVED_COLUMNS = ("label", "health")


@dataclass(frozen=True)
class Dataset:
    """Immutable container for time-ordered samples.

    inputs and targets are (N, D) float matrices; labels (0/1) and health
    ([0, 1]) are optional length-N vectors. Arrays are locked read-only so
    instances can be shared across parallel workers.
    """

    inputs: np.ndarray
    targets: np.ndarray
    labels: Optional[np.ndarray] = None
    health: Optional[np.ndarray] = None
    columns: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        targets = np.atleast_2d(np.asarray(self.targets, dtype=np.float64))
        if inputs.shape[0] < 1:
            raise DataError("dataset must contain at least one sample")
        if targets.shape[0] != inputs.shape[0]:
            raise DataError(
                f"targets have {targets.shape[0]} rows but inputs have {inputs.shape[0]}"
            )
        if not np.isfinite(inputs).all() or not np.isfinite(targets).all():
            raise DataError("dataset contains non-finite values")

        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (inputs.shape[0],):
                raise DataError("labels length must equal the sample count")
            if not np.isin(labels, (0, 1)).all():
                raise DataError("labels must be 0 or 1")
        health = self.health
        if health is not None:
            health = np.asarray(health, dtype=np.float64)
            if health.shape != (inputs.shape[0],):
                raise DataError("health length must equal the sample count")
            if not np.isfinite(health).all() or health.min() < 0.0 or health.max() > 1.0:
                raise DataError("health values must lie in [0, 1]")
        columns = self.columns
        if columns is not None:
            columns = tuple(columns)
            if len(columns) != inputs.shape[1]:
                raise DataError("column names must match the feature count")

        for arr in (inputs, targets, labels, health):
            if arr is not None:
                arr.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "health", health)
        object.__setattr__(self, "columns", columns)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[1]

    def feature_names(self) -> tuple[str, ...]:
        if self.columns is not None:
            return self.columns
        return tuple(f"f{i}" for i in range(self.n_features))


def as_reconstruction(data: Dataset) -> Dataset:
    """Return a dataset whose targets are the inputs (idempotent)."""
    if data.targets is data.inputs:
        return data
    return Dataset(
        inputs=data.inputs,
        targets=data.inputs,
        labels=data.labels,
        health=data.health,
        columns=data.columns,
    )


def _parse_cell(raw: str, line_no: int, column: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DataError(
            f"non-numeric value {raw!r} at line {line_no}, column {column!r}"
        ) from None
    if not np.isfinite(value):
        raise DataError(f"non-finite value {raw!r} at line {line_no}, column {column!r}")
    return value


def load_csv(path, features: Optional[Sequence] = None) -> Dataset:
    """Load a dataset from a CSV file.

    features selects the feature columns: a sequence of header names, a
    (start, stop) positional range over the header, or None to take every
    column except the reserved ``label``/``health`` ones. Targets are set to
    the inputs (reconstruction mode). Parse errors name the offending file
    line and column.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file (header row required)") from None
        header = [h.strip() for h in header]

        if features is None:
            feature_cols = [h for h in header if h not in RESERVED_COLUMNS]
        elif (
            len(features) == 2
            and all(isinstance(f, int) for f in features)
        ):
            start, stop = features
            if not (0 <= start < stop <= len(header)):
                raise DataError(
                    f"feature range ({start}, {stop}) out of bounds for {len(header)} columns"
                )
            feature_cols = header[start:stop]
        else:
            feature_cols = [str(f) for f in features]
        missing = [c for c in feature_cols if c not in header]
        if missing:
            raise DataError(f"feature columns not found in header: {missing}")
        if not feature_cols:
            raise DataError("no feature columns selected")

        col_index = {name: i for i, name in enumerate(header)}
        feat_idx = [col_index[c] for c in feature_cols]
        label_idx = col_index.get("label")
        health_idx = col_index.get("health")

        rows, labels, health = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(
                    f"ragged row at line {line_no}: expected {len(header)} cells, got {len(row)}"
                )
            rows.append([_parse_cell(row[i], line_no, header[i]) for i in feat_idx])
            if label_idx is not None:
                val = _parse_cell(row[label_idx], line_no, "label")
                if val not in (0.0, 1.0):
                    raise DataError(f"label {val!r} at line {line_no} is not 0 or 1")
                labels.append(int(val))
            if health_idx is not None:
                val = _parse_cell(row[health_idx], line_no, "health")
                if not 0.0 <= val <= 1.0:
                    raise DataError(f"health {val!r} at line {line_no} is outside [0, 1]")
                health.append(val)

    if not rows:
        raise DataError(f"{path}: no data rows")
    inputs = np.asarray(rows, dtype=np.float64)
    return Dataset(
        inputs=inputs,
        targets=inputs,
        labels=np.asarray(labels, dtype=np.int64) if labels else None,
        health=np.asarray(health, dtype=np.float64) if health else None,
        columns=tuple(feature_cols),
    )


def save_csv(data: Dataset, path) -> None:
    """Write a dataset back to CSV (inverse of load_csv up to float text)."""
    path = Path(path)
    names = list(data.feature_names())
    if data.labels is not None:
        names.append("label")
    if data.health is not None:
        names.append("health")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(data.n):
            row = [repr(float(v)) for v in data.inputs[i]]
            if data.labels is not None:
                row.append(str(int(data.labels[i])))
            if data.health is not None:
                row.append(repr(float(data.health[i])))
            writer.writerow(row)
