"""Four-section prompt asking a chat model for synthetic anomalies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import PseudogenError
from ..rarity import ScoreRange

MAX_NORMAL_REFS = 20


class PromptTooLong(PseudogenError, ValueError):
    def __init__(self, section: str, tokens: int, budget: int):
        super().__init__(
            f"prompt needs ~{tokens} tokens, budget is {budget}; trim section '{section}'"
        )
        self.section = section


@dataclass(frozen=True)
class PromptBundle:
    task_objective: str
    data_description: str
    analytical_method: str
    output_requirement: str
    requested_count: int

    SECTIONS = ("task_objective", "data_description", "analytical_method", "output_requirement")

    def text(self) -> str:
        return "\n\n".join(getattr(self, s) for s in self.SECTIONS)

    def messages(self) -> list[dict]:
        user = "\n\n".join(getattr(self, s) for s in self.SECTIONS[1:])
        return [
            {"role": "system", "content": self.task_objective},
            {"role": "user", "content": user},
        ]


def estimate_tokens(text: str) -> int:
    # ~4 characters per token for English prose mixed with numbers
    return math.ceil(len(text) / 4)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _table(names: Sequence[str], blocks: Sequence[tuple[str, np.ndarray]]) -> str:
    lines = [",".join(names) + ",tag"]
    for tag, rows in blocks:
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row) + f",{tag}")
    return "\n".join(lines)


def build_prompt(feature_names: Sequence[str], pseudo_rows: np.ndarray, normal_refs: np.ndarray,
                 score_range: ScoreRange, p2: float, count: int,
                 token_budget: Optional[int] = None) -> PromptBundle:
    """Assemble the prompt sections.

    At most ``MAX_NORMAL_REFS`` normal rows are serialized (the first ones
    given); every pseudo-anomaly row is. Values use 6 significant digits.
    """
    pseudo_rows = np.atleast_2d(np.asarray(pseudo_rows, dtype=float))
    normal_refs = np.atleast_2d(np.asarray(normal_refs, dtype=float))
    if pseudo_rows.size == 0:
        raise ValueError("need at least one pseudo-anomaly to build a prompt")
    if normal_refs.size == 0:
        raise ValueError("need at least one normal reference row")
    if count < 1:
        raise ValueError("requested count must be positive")
    m = len(feature_names)
    normal_refs = normal_refs[:MAX_NORMAL_REFS]

    task = (
        "You are a data generator for tabular anomaly detection. Anomalies are rare "
        "instances whose values differ markedly from the bulk of the data. Your job is "
        "to synthesize new anomalous rows that resemble the reference anomalies below "
        "while covering varied anomalous patterns."
    )
    data = (
        f"The table has {m} numeric features: {', '.join(feature_names)}.\n"
        f"Below are {len(pseudo_rows)} rows flagged as likely anomalies (tag pseudo-anomaly) "
        f"and {len(normal_refs)} normal rows (tag normal) for reference. "
        "The tag column is not a feature.\n"
        + _table(feature_names, [("pseudo-anomaly", pseudo_rows), ("normal", normal_refs)])
    )
    method = (
        "Analytical method: decouple the overall anomaly degree of a row into an "
        "accumulation of feature-level rarities. For each feature, estimate the "
        "empirical CDF F of its values over the rows above. A value t is rare when its "
        f"two-sided tail probability 2*min(F(t), 1-F(t)) is below p2 = {p2:g}. "
        "The anomaly score of a row is the number of its features holding rare values. "
        f"The reference anomalies have anomaly scores between {score_range.lo} and "
        f"{score_range.hi}. Every row you generate must have an anomaly score of at least "
        f"{score_range.lo} and at most {score_range.hi}; the remaining features should "
        "stay at typical values."
    )
    output = (
        f"Output exactly {count} rows in CSV format, one row per line, each with exactly "
        f"{m} comma-separated numbers in the feature order given above. Do not output a "
        "header, the tag column, code fences, explanations, or any other text."
    )
    bundle = PromptBundle(task, data, method, output, count)
    if token_budget is not None:
        tokens = estimate_tokens(bundle.text())
        if tokens > token_budget:
            largest = max(PromptBundle.SECTIONS, key=lambda s: len(getattr(bundle, s)))
            raise PromptTooLong(largest, tokens, token_budget)
    return bundle
