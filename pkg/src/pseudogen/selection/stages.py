"""Stage-1 structural filtering and stage-2 uncertainty-guided selection."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..dataset import apply_minmax, fit_minmax
from ..errors import PseudogenError
from .fuzzy import UncertaintyVector

REJECT_REASONS = ("wrong_arity", "non_finite", "out_of_range", "duplicate")

ORIGIN_CANDIDATE, ORIGIN_PSEUDO, ORIGIN_TRAIN = "candidate", "pseudo", "train"


class SelectionError(PseudogenError, ValueError):
    pass


@dataclass
class ValidationReport:
    accepted: np.ndarray
    rejected_counts: dict = field(default_factory=lambda: dict.fromkeys(REJECT_REASONS, 0))
    accepted_source_index: list = field(default_factory=list)


@dataclass
class InformationSystem:
    scaled: np.ndarray
    origin: np.ndarray  # array of origin tags, one per row
    raw: np.ndarray

    @property
    def n(self) -> int:
        return self.scaled.shape[0]

    def mask(self, tag: str) -> np.ndarray:
        return self.origin == tag


@dataclass
class SelectedAnomalies:
    rows: np.ndarray
    universe_indices: list
    final_threshold: float
    initial_threshold: float
    relax_steps: int


def universe_ranges(*matrices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    stacked = np.vstack([np.asarray(m, dtype=float) for m in matrices if len(m)])
    return stacked.min(axis=0), stacked.max(axis=0)


def stage1_filter(candidates: Sequence[Sequence[float]], m: int, ranges, tolerance: float = 0.1,
                  labels: Optional[Sequence[int]] = None) -> ValidationReport:
    """Drop malformed candidates and exact duplicates (first occurrence kept).

    Each rejected row is counted once, under the first failing check in the
    order wrong_arity, non_finite, out_of_range, duplicate. A feature is out
    of range when it leaves [min - tolerance*span, max + tolerance*span].
    """
    lo, hi = (np.asarray(r, dtype=float) for r in ranges)
    span = hi - lo
    lo_ok, hi_ok = lo - tolerance * span, hi + tolerance * span
    if labels is not None and any(int(l) != 1 for l in labels):
        raise SelectionError("every synthetic candidate must carry the anomaly label 1")

    counts = dict.fromkeys(REJECT_REASONS, 0)
    seen = set()
    kept, kept_idx = [], []
    for idx, row in enumerate(candidates):
        if len(row) != m:
            counts["wrong_arity"] += 1
            continue
        try:
            vals = np.asarray(row, dtype=float)
        except (TypeError, ValueError):
            counts["non_finite"] += 1
            continue
        if not np.all(np.isfinite(vals)):
            counts["non_finite"] += 1
            continue
        if np.any(vals < lo_ok) or np.any(vals > hi_ok):
            counts["out_of_range"] += 1
            continue
        key = vals.tobytes()
        if key in seen:
            counts["duplicate"] += 1
            continue
        seen.add(key)
        kept.append(vals)
        kept_idx.append(idx)
    accepted = np.vstack(kept) if kept else np.empty((0, m))
    return ValidationReport(accepted, counts, kept_idx)


def build_universe(candidates: np.ndarray, pseudo: np.ndarray, train: np.ndarray) -> InformationSystem:
    """Stack [candidates | pseudo | train] and min-max scale on the union."""
    parts = [np.asarray(p, dtype=float) for p in (candidates, pseudo, train)]
    m = next((p.shape[1] for p in parts if p.ndim == 2 and p.shape[0]), None)
    if m is None:
        raise SelectionError("information system would be empty")
    parts = [p.reshape(-1, m) for p in parts]
    X = np.vstack(parts)
    origin = np.array(
        [ORIGIN_CANDIDATE] * len(parts[0]) + [ORIGIN_PSEUDO] * len(parts[1]) + [ORIGIN_TRAIN] * len(parts[2])
    )
    return InformationSystem(apply_minmax(fit_minmax(X), X), origin, X)


def stage2_select(uncertainty: UncertaintyVector, system: InformationSystem, target_count: int,
                  relax_step: float = 0.25) -> SelectedAnomalies:
    """Pick candidates whose weighted uncertainty clears a threshold.

    The threshold starts at mean + 3*std of the uncertainty over the whole
    universe and drops by ``relax_step * std`` until ``target_count``
    candidates clear it or it falls to the lowest pseudo-anomaly uncertainty.
    """
    ap = np.asarray(uncertainty.alpha_prime, dtype=float)
    cand = np.flatnonzero(system.mask(ORIGIN_CANDIDATE))
    if cand.size == 0:
        raise SelectionError("no candidate rows in the information system")
    if target_count < 1:
        raise SelectionError("target_count must be positive")
    pseudo = np.flatnonzero(system.mask(ORIGIN_PSEUDO))
    t_min = ap[pseudo].min() if pseudo.size else ap[cand].min()

    if not relax_step > 0:
        raise SelectionError("relax_step must be positive")
    mean, sigma = float(ap.mean()), float(ap.std())
    p3 = initial = mean + 3.0 * sigma
    steps = 0
    step = relax_step * sigma
    if step > 0:  # a subnormal sigma can underflow the step to 0
        # p3 from the step count, not by repeated subtraction: a step far
        # below the float spacing near p3 would otherwise stall the loop
        while np.count_nonzero(ap[cand] >= p3) < target_count and p3 > t_min:
            steps += 1
            p3 = initial - steps * step
    else:
        p3 = mean

    passing = cand[ap[cand] >= p3]
    # descending uncertainty, lower universe index first on ties
    order = np.lexsort((passing, -ap[passing]))
    chosen = np.sort(passing[order][:target_count])
    return SelectedAnomalies(
        rows=system.raw[chosen],
        universe_indices=chosen.tolist(),
        final_threshold=p3,
        initial_threshold=initial,
        relax_steps=steps,
    )

