"""CSV ingestion and min-max normalization.

Features are mapped column-wise onto [0, 1] before fitting; labels get
the same treatment so that loss tolerances and reported errors live on a
common scale.  Constant columns carry no information for a min-max map
and are dropped with a warning, with the surviving column indices
recorded so saved models can reapply the exact same preprocessing.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantColumn, ParseError, RaggedRows


def load_csv(path, has_header: bool | None = None):
    """Parse a rectangular numeric CSV.

    has_header=None auto-detects a header line by non-numeric fields in
    the first row.  Returns (matrix, column_names); names are generated
    as c0..c{k-1} when the file has no header.
    """
    rows = []
    names = None
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, fields in enumerate(reader, start=1):
            if not fields or (len(fields) == 1 and fields[0].strip() == ""):
                continue
            if lineno == 1 and has_header is not False:
                numeric = True
                for f in fields:
                    try:
                        float(f)
                    except ValueError:
                        numeric = False
                        break
                if has_header or not numeric:
                    names = [f.strip() for f in fields]
                    continue
            parsed = []
            for col, f in enumerate(fields, start=1):
                try:
                    parsed.append(float(f))
                except ValueError:
                    raise ParseError(
                        f"non-numeric field {f!r} at line {lineno}, column {col}",
                        line=lineno, column=col,
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ParseError("no data rows found", line=1, column=1)
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRows(
                f"row {i + 1} has {len(row)} fields, expected {width}"
            )
    matrix = np.asarray(rows, dtype=float)
    if names is None:
        names = [f"c{i}" for i in range(width)]
    elif len(names) != width:
        raise RaggedRows("header width does not match data rows")
    return matrix, names


@dataclass
class ScalingSpec:
    """Min-max maps for the retained feature columns and the label."""

    feature_min: np.ndarray
    feature_range: np.ndarray
    kept_columns: list[int]
    label_min: float = 0.0
    label_range: float = 1.0
    feature_names: list[str] = field(default_factory=list)
    raw_width: int = -1  # feature columns before constant-column drops

    def __post_init__(self):
        self.feature_min = np.asarray(self.feature_min, dtype=float)
        self.feature_range = np.asarray(self.feature_range, dtype=float)
        if np.any(self.feature_range <= 0) or self.label_range <= 0:
            raise ValueError("scaling ranges must be positive")
        if self.raw_width < 0:
            self.raw_width = (max(self.kept_columns) + 1) if self.kept_columns else 0

    @property
    def dim(self) -> int:
        return self.feature_min.size

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.feature_min.tolist(), self.feature_range.tolist()))


def fit_scaling(features: np.ndarray, labels=None,
                names: list[str] | None = None) -> ScalingSpec:
    """Derive the min-max spec from raw data, dropping constant columns."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise ValueError("features must be a 2-d matrix")
    mins = features.min(axis=0)
    ranges = features.max(axis=0) - mins
    kept = [j for j in range(features.shape[1]) if ranges[j] > 0]
    dropped = [j for j in range(features.shape[1]) if ranges[j] <= 0]
    if not kept:
        raise ConstantColumn("every feature column is constant")
    for j in dropped:
        label = names[j] if names and j < len(names) else f"column {j}"
        warnings.warn(f"dropping constant feature {label}", stacklevel=2)
    lmin, lrange = 0.0, 1.0
    if labels is not None:
        labels = np.asarray(labels, dtype=float)
        lmin = float(labels.min())
        lrange = float(labels.max() - lmin)
        if lrange <= 0:
            lrange = 1.0  # constant labels: keep the identity map
    return ScalingSpec(
        feature_min=mins[kept],
        feature_range=ranges[kept],
        kept_columns=kept,
        label_min=lmin,
        label_range=lrange,
        feature_names=[names[j] for j in kept] if names else [],
        raw_width=features.shape[1],
    )


def apply_scaling(spec: ScalingSpec, features: np.ndarray) -> np.ndarray:
    """Map raw feature rows onto [0, 1]^dim (kept columns only)."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    sel = features[:, spec.kept_columns]
    return np.clip((sel - spec.feature_min) / spec.feature_range, 0.0, 1.0)


def invert_scaling(spec: ScalingSpec, scaled: np.ndarray) -> np.ndarray:
    """Back to original units; exact up to roundoff on the kept columns."""
    scaled = np.atleast_2d(np.asarray(scaled, dtype=float))
    return scaled * spec.feature_range + spec.feature_min


def scale_labels(spec: ScalingSpec, labels) -> np.ndarray:
    return (np.asarray(labels, dtype=float) - spec.label_min) / spec.label_range


def unscale_labels(spec: ScalingSpec, scaled) -> np.ndarray:
    return np.asarray(scaled, dtype=float) * spec.label_range + spec.label_min
