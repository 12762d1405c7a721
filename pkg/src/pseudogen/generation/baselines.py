"""Heuristic generators used as comparison baselines.

Cutout and CutMix come from image augmentation; on tables they act on a
random subset of feature indices instead of a pixel patch.
"""
from __future__ import annotations

import math

import numpy as np

from .mock import GenerationError
from .parse import CandidateSet

KINDS = ("gaussian_noise", "cutout", "cutmix")


def baseline_generate(kind: str, pseudo_rows: np.ndarray, train: np.ndarray, count: int,
                      sigma: float = 0.1, mask_fraction: float = 0.3, seed: int = 0) -> CandidateSet:
    if kind not in KINDS:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {KINDS}")
    pseudo_rows = np.atleast_2d(np.asarray(pseudo_rows, dtype=float))
    train = np.asarray(train, dtype=float)
    if pseudo_rows.size == 0:
        raise GenerationError("baseline generation needs at least one pseudo-anomaly")
    if count < 1:
        raise ValueError("count must be positive")
    if sigma < 0 or not 0 < mask_fraction < 1:
        raise ValueError("need sigma >= 0 and mask_fraction in (0, 1)")
    rng = np.random.default_rng(seed)
    n, m = pseudo_rows.shape
    k = math.ceil(mask_fraction * m)
    src = rng.integers(0, n, size=count)
    out = pseudo_rows[src].copy()

    if kind == "gaussian_noise":
        std = train.std(axis=0)
        out += rng.standard_normal((count, m)) * (sigma * std)
    elif kind == "cutout":
        med = np.median(train, axis=0)
        for r in range(count):
            cols = rng.choice(m, size=k, replace=False)
            out[r, cols] = med[cols]
    else:
        if n < 2:
            raise GenerationError("cutmix needs at least two pseudo-anomalies")
        for r in range(count):
            other = rng.integers(0, n - 1)
            other += other >= src[r]  # any parent but the source row
            cols = rng.choice(m, size=k, replace=False)
            out[r, cols] = pseudo_rows[other, cols]
    return CandidateSet(out, kind)
