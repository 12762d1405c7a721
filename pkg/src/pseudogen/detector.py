"""Base anomaly scores for the test set and top-p1% pseudo-labeling."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .dataset import apply_minmax, fit_minmax
from .errors import PseudogenError
from .rarity import fit_ecdf, tail_probability


class DetectorError(PseudogenError, ValueError):
    pass


@dataclass
class DetectorConfig:
    variant: str = "knn"  # knn | ecdf_tail | external
    k: int = 5
    path: Optional[str] = None
    scale_inputs: bool = True

    def __post_init__(self):
        if self.variant not in ("knn", "ecdf_tail", "external"):
            raise DetectorError(f"unknown detector variant {self.variant!r}")
        if self.variant == "knn" and self.k < 1:
            raise DetectorError("knn needs k >= 1")
        if self.variant == "external" and not self.path:
            raise DetectorError("external detector needs a score file path")


@dataclass
class PseudoAnomalySet:
    indices: np.ndarray  # sorted test-row indices
    rows: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def knn_scores(train: np.ndarray, test: np.ndarray, k: int) -> np.ndarray:
    """Mean Euclidean distance from each test row to its k nearest training rows."""
    if k > train.shape[0]:
        raise DetectorError(f"k={k} exceeds the {train.shape[0]} training rows")
    dist, _ = cKDTree(train).query(test, k=k)
    dist = np.asarray(dist).reshape(test.shape[0], k)
    return dist.mean(axis=1)


def ecdf_tail_scores(train: np.ndarray, test: np.ndarray) -> np.ndarray:
    """Sum over features of -log(tail probability) under train-fitted ECDFs."""
    tau = tail_probability(fit_ecdf(train), test)
    return -np.log(tau).sum(axis=1)


def fit_score(config: DetectorConfig, train: np.ndarray, test: np.ndarray) -> np.ndarray:
    test = np.asarray(test, dtype=float)
    if config.variant == "external":
        return load_external_scores(config.path, test.shape[0])
    train = np.asarray(train, dtype=float)
    if train.ndim != 2 or train.shape[0] == 0:
        raise DetectorError("training matrix is empty")
    if test.ndim != 2 or test.shape[1] != train.shape[1]:
        raise DetectorError(f"dimension mismatch: train {train.shape}, test {test.shape}")
    if config.variant == "ecdf_tail":
        return ecdf_tail_scores(train, test)
    if config.scale_inputs:
        # fit on train+test so test rows are never clamped at the train extremes
        params = fit_minmax(np.vstack([train, test]))
        train, test = apply_minmax(params, train), apply_minmax(params, test)
    return knn_scores(train, test, config.k)


def load_external_scores(path, expected_len: int) -> np.ndarray:
    """One float per line, in test-row order. Blank trailing lines are ignored."""
    path = Path(path)
    if not path.is_file():
        raise DetectorError(f"no such score file: {path}")
    scores = []
    lines = path.read_text(encoding="utf-8").splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    for lineno, line in enumerate(lines, start=1):
        try:
            v = float(line.strip())
        except ValueError:
            raise DetectorError(f"{path}: line {lineno}: cannot parse {line!r} as a number") from None
        if not math.isfinite(v):
            raise DetectorError(f"{path}: line {lineno}: non-finite score {line!r}")
        scores.append(v)
    if len(scores) != expected_len:
        raise DetectorError(f"{path}: {len(scores)} scores, expected {expected_len}")
    return np.asarray(scores, dtype=float)


def write_scores(path, scores: np.ndarray) -> None:
    Path(path).write_text("".join(f"{s:.17g}\n" for s in scores), encoding="utf-8")


def n_pseudo(p1: float, n_test: int) -> int:
    # round away float noise before the ceiling, e.g. 0.07 * 100 = 7.000000000000001
    return math.ceil(round(p1 / 100.0 * n_test, 9))


def select_pseudo(scores: np.ndarray, test: np.ndarray, p1: float) -> PseudoAnomalySet:
    """Top ceil(p1/100 * N') rows by score; ties at the cutoff go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    test = np.asarray(test, dtype=float)
    n_test = test.shape[0]
    if n_test == 0:
        raise DetectorError("test set is empty")
    if scores.shape[0] != n_test:
        raise DetectorError(f"{scores.shape[0]} scores for {n_test} test rows")
    if not 0 < p1 < 100:
        raise DetectorError(f"p1 must lie in (0, 100), got {p1}")
    k = n_pseudo(p1, n_test)
    if k == 0:
        raise DetectorError("p1 selects zero rows")
    # stable sort on -score keeps lower indices first among equal scores
    order = np.argsort(-scores, kind="stable")
    idx = np.sort(order[:k])
    return PseudoAnomalySet(idx, test[idx].copy())
