"""CSV ingestion and min-max scaling.

Feature matrices are plain ``float64`` numpy arrays of shape (n, m).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DatasetError


@dataclass(frozen=True)
class DatasetSchema:
    feature_names: tuple[str, ...]
    label_column: Optional[str] = None

    def __post_init__(self):
        if len(self.feature_names) < 1:
            raise DatasetError("schema needs at least one feature")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DatasetError(f"duplicate feature names: {list(self.feature_names)}")

    @property
    def m(self) -> int:
        return len(self.feature_names)


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    schema: DatasetSchema

    def __len__(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class ScalerParams:
    mins: np.ndarray
    maxs: np.ndarray

    def to_dict(self) -> dict:
        return {"min": self.mins.tolist(), "max": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(np.asarray(d["min"], dtype=float), np.asarray(d["max"], dtype=float))


def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {text!r}")
    return v


def load_csv(path, label_column: Optional[str] = None) -> LabeledDataset:
    """Read a headed, comma-separated numeric table.

    Data rows are numbered from 1 (the header is row 0) in error messages.
    Without ``label_column`` every label is 0.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: missing header row") from None
        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise DatasetError(f"{path}: label column {label_column!r} not in header")
            label_idx = header.index(label_column)
        feature_idx = [j for j in range(len(header)) if j != label_idx]
        schema = DatasetSchema(tuple(header[j] for j in feature_idx), label_column)

        rows, labels = [], []
        for rownum, record in enumerate(reader, start=1):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DatasetError(
                    f"{path}: row {rownum} has {len(record)} fields, expected {len(header)}"
                )
            values = []
            for j in feature_idx:
                cell = record[j].strip()
                try:
                    values.append(_parse_float(cell))
                except ValueError:
                    raise DatasetError(
                        f"{path}: row {rownum}, column {header[j]!r}: cannot parse {cell!r} as a finite number"
                    ) from None
            rows.append(values)
            if label_idx is not None:
                cell = record[label_idx].strip()
                try:
                    num = float(cell)
                except ValueError:
                    num = math.nan
                lab = int(num) if num in (0.0, 1.0) else -1
                if lab < 0:
                    raise DatasetError(f"{path}: row {rownum}: unknown label value {cell!r}")
                labels.append(lab)

    X = np.asarray(rows, dtype=float).reshape(len(rows), schema.m)
    y = np.asarray(labels, dtype=int) if label_idx is not None else np.zeros(len(rows), dtype=int)
    return LabeledDataset(X, y, schema)


def format_float(v: float) -> str:
    return f"{v:.17g}"


def save_csv(path, X: np.ndarray, feature_names: Sequence[str], labels=None, label_column="label"):
    """Write a matrix with 17 significant digits so that ``load_csv`` round-trips exactly."""
    X = np.asarray(X, dtype=float)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = list(feature_names) + ([label_column] if labels is not None else [])
        w.writerow(header)
        for i, row in enumerate(X):
            out = [format_float(v) for v in row]
            if labels is not None:
                out.append(str(int(labels[i])))
            w.writerow(out)


def fit_minmax(X: np.ndarray) -> ScalerParams:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DatasetError("cannot fit a scaler on an empty matrix")
    return ScalerParams(X.min(axis=0), X.max(axis=0))


def apply_minmax(params: ScalerParams, X: np.ndarray) -> np.ndarray:
    """Scale into [0, 1], clamping values outside the fitted range.

    Constant features map to 0.5.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.mins.shape[0]:
        raise DatasetError(
            f"dimension mismatch: matrix has shape {X.shape}, scaler has {params.mins.shape[0]} features"
        )
    span = params.maxs - params.mins
    const = span <= 0
    safe = np.where(const, 1.0, span)
    Z = (X - params.mins) / safe
    Z[:, const] = 0.5
    return np.clip(Z, 0.0, 1.0)
