"""Offline stand-in for the LLM that hits the pseudo-anomaly score band by construction."""
from __future__ import annotations

import numpy as np

from ..errors import PseudogenError
from ..rarity import EcdfModel, ScoreRange, score_rows
from .parse import CandidateSet

MAX_RESAMPLES = 20
TAIL_EXTENSION = 0.05


class GenerationError(PseudogenError):
    pass


def _feature_regions(model: EcdfModel, p2: float):
    v = model.sorted_values
    lo_ext = v[0] - TAIL_EXTENSION * (v[-1] - v[0])
    hi_ext = v[-1] + TAIL_EXTENSION * (v[-1] - v[0])
    q_lo = np.quantile(v, p2 / 2, axis=0)
    q_hi = np.quantile(v, 1 - p2 / 2, axis=0)
    iqr = np.quantile(v, [0.25, 0.75], axis=0)
    return (lo_ext, q_lo), (q_hi, hi_ext), iqr


def mock_generate(seed: int, model: EcdfModel, score_range: ScoreRange, p2: float, count: int) -> CandidateSet:
    """Deterministic candidate rows with rarity score inside ``score_range``.

    Each row draws a target score s uniformly from the range, puts s random
    features in a tail region (below the p2/2 quantile or above the 1 - p2/2
    quantile, reaching 5% of the span past the observed extreme) and the rest
    in the inter-quartile region.
    """
    if count < 1:
        raise ValueError("count must be positive")
    m = model.m
    if score_range.hi > m:
        raise ValueError(f"score range {score_range} exceeds feature count {m}")
    rng = np.random.default_rng(seed)
    (low_a, low_b), (high_a, high_b), iqr = _feature_regions(model, p2)
    rows = np.empty((count, m))
    for r in range(count):
        for _ in range(MAX_RESAMPLES):
            target = int(rng.integers(score_range.lo, score_range.hi + 1))
            row = rng.uniform(iqr[0], iqr[1])
            rare = rng.choice(m, size=target, replace=False)
            upper = rng.random(target) < 0.5
            u = rng.random(target)
            row[rare] = np.where(
                upper,
                high_a[rare] + u * (high_b[rare] - high_a[rare]),
                low_b[rare] - u * (low_b[rare] - low_a[rare]),
            )
            if score_rows(model, row, p2)[0] in score_range:
                rows[r] = row
                break
        else:
            raise GenerationError(
                f"could not hit score range [{score_range.lo}, {score_range.hi}] "
                f"in {MAX_RESAMPLES} attempts (p2={p2})"
            )
    return CandidateSet(rows, "mock")
