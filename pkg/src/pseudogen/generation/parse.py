from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import PseudogenError

PROVENANCES = ("llm", "mock", "gaussian_noise", "cutout", "cutmix")


class EmptyParse(PseudogenError, ValueError):
    def __init__(self, raw: str):
        super().__init__("no parseable candidate rows in model response")
        self.raw = raw


@dataclass
class CandidateSet:
    rows: np.ndarray
    provenance: str
    dropped: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def __len__(self) -> int:
        return self.rows.shape[0]


def parse_candidates(raw: str, m: int, provenance: str = "llm") -> CandidateSet:
    """Extract numeric CSV rows from free-form model output.

    Code fences, blank lines and prose (any line with a non-numeric field) are
    skipped; numeric lines with the wrong field count or non-finite values are
    dropped and counted.
    """
    stats = {"prose": 0, "wrong_arity": 0, "non_finite": 0}
    rows = []
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("```"):
            continue
        fields = [f.strip() for f in line.rstrip(",").split(",")]
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            stats["prose"] += 1
            continue
        if len(vals) != m:
            stats["wrong_arity"] += 1
            continue
        if not all(math.isfinite(v) for v in vals):
            stats["non_finite"] += 1
            continue
        rows.append(vals)
    if not rows:
        raise EmptyParse(raw)
    return CandidateSet(np.asarray(rows, dtype=float), provenance, stats)
