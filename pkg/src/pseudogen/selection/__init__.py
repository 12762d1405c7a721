"""Two-stage filtering of synthetic anomaly candidates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fuzzy import (
    ApproximationPair,
    RelationMatrix,
    UncertaintyVector,
    fuzzy_relation,
    granule_approximations,
    median_delta,
    s_cos,
    t_cos,
    weighted_uncertainty,
)
from .stages import (
    REJECT_REASONS,
    InformationSystem,
    SelectedAnomalies,
    SelectionError,
    ValidationReport,
    build_universe,
    stage1_filter,
    stage2_select,
    universe_ranges,
)


@dataclass
class SelectionResult:
    selected: SelectedAnomalies
    system: InformationSystem
    uncertainty: UncertaintyVector
    delta: float

    def report(self, validation: Optional[ValidationReport] = None) -> dict:
        """JSON-ready per-candidate scores plus the final threshold."""
        cand = np.flatnonzero(self.system.mask("candidate"))
        chosen = set(self.selected.universe_indices)
        u = self.uncertainty
        out = {
            "delta": self.delta,
            "initial_threshold": self.selected.initial_threshold,
            "final_threshold": self.selected.final_threshold,
            "relax_steps": self.selected.relax_steps,
            "universe_size": self.system.n,
            "candidates": [
                {
                    "index": int(i),
                    "alpha": float(u.alpha[i]),
                    "lambda": float(u.lam[i]),
                    "alpha_prime": float(u.alpha_prime[i]),
                    "selected": bool(i in chosen),
                }
                for i in cand
            ],
        }
        if validation is not None:
            out["rejected_counts"] = dict(validation.rejected_counts)
        return out


def uncertainty_select(accepted: np.ndarray, pseudo: np.ndarray, train: np.ndarray, target_count: int,
                       delta: Optional[float] = None, relax_step: float = 0.25,
                       paper_literal_scos: bool = False) -> SelectionResult:
    """Stage 2 end to end: universe, kernel relation, uncertainty, threshold."""
    system = build_universe(accepted, pseudo, train)
    if delta is None:
        delta = median_delta(system.scaled)
    relation = fuzzy_relation(system.scaled, delta)
    unc = weighted_uncertainty(relation, paper_literal_scos=paper_literal_scos)
    selected = stage2_select(unc, system, target_count, relax_step)
    return SelectionResult(selected, system, unc, float(delta))
