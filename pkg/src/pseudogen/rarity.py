"""Feature-level rarity: per-feature empirical CDFs, two-sided tail
probabilities and integer rarity scores.

The ECDF is a smoothed mid-rank estimator,

    F(t) = (#{v < t} + 0.5 * #{v == t} + 0.5) / (n + 1)

which keeps the tail probability ``2 * min(F, 1 - F)`` strictly inside (0, 1)
even at the observed extremes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PseudogenError


class RarityError(PseudogenError, ValueError):
    pass


@dataclass(frozen=True)
class EcdfModel:
    sorted_values: np.ndarray  # (n, m), each column ascending

    @property
    def n(self) -> int:
        return self.sorted_values.shape[0]

    @property
    def m(self) -> int:
        return self.sorted_values.shape[1]

    def quantile(self, j: int, q: float) -> float:
        return float(np.quantile(self.sorted_values[:, j], q))


@dataclass(frozen=True)
class ScoreRange:
    lo: int
    hi: int

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi):
            raise RarityError(f"invalid score range [{self.lo}, {self.hi}]")

    def __contains__(self, s) -> bool:
        return self.lo <= s <= self.hi


def fit_ecdf(X: np.ndarray) -> EcdfModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise RarityError("cannot fit an ECDF on an empty matrix")
    return EcdfModel(np.sort(X, axis=0))


def ecdf_values(model: EcdfModel, X: np.ndarray) -> np.ndarray:
    """Smoothed ECDF evaluated feature-wise; X is (k, m) or a single m-vector."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != model.m:
        raise RarityError(f"dimension mismatch: got {X2.shape[1]} features, model has {model.m}")
    F = np.empty_like(X2)
    n = model.n
    for j in range(model.m):
        col = model.sorted_values[:, j]
        below = np.searchsorted(col, X2[:, j], side="left")
        upto = np.searchsorted(col, X2[:, j], side="right")
        F[:, j] = (below + 0.5 * (upto - below) + 0.5) / (n + 1)
    return F[0] if single else F


def tail_probability(model: EcdfModel, X: np.ndarray) -> np.ndarray:
    """Two-sided tail probability per feature, in (0, 1]."""
    F = ecdf_values(model, X)
    return np.minimum(2.0 * np.minimum(F, 1.0 - F), 1.0)


def rarity_score(tails: np.ndarray, p2: float):
    """Count of features whose tail probability is strictly below ``p2``.

    Returns an int for one tail vector, an int array for a (k, m) matrix.
    """
    tails = np.asarray(tails, dtype=float)
    counts = np.sum(tails < p2, axis=-1)
    return int(counts) if tails.ndim == 1 else counts.astype(int)


def score_rows(model: EcdfModel, X: np.ndarray, p2: float) -> np.ndarray:
    return rarity_score(tail_probability(model, np.atleast_2d(X)), p2)


def pseudo_score_range(model: EcdfModel, pseudo_rows: np.ndarray, p2: float) -> ScoreRange:
    pseudo_rows = np.asarray(pseudo_rows, dtype=float)
    if pseudo_rows.ndim != 2 or pseudo_rows.shape[0] == 0:
        raise RarityError("pseudo-anomaly set is empty")
    scores = score_rows(model, pseudo_rows, p2)
    return ScoreRange(int(scores.min()), int(scores.max()))
