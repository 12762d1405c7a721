"""AUC-ROC, average precision and F1, with tied scores handled as blocks."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass
class EvalReport:
    auc_roc: float
    auc_pr: float
    f1: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    f1_topk: float
    topk_threshold: float

    def to_dict(self) -> dict:
        return asdict(self)

    def display(self) -> str:
        return json.dumps({k: round(v, 6) if isinstance(v, float) else v for k, v in asdict(self).items()})


def _check(scores, labels):
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    if s.shape != y.shape:
        raise ValueError(f"length mismatch: {s.shape} scores, {y.shape} labels")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return s, y


def auc_roc(scores, labels) -> float:
    """Mann-Whitney AUC: (#pos>neg pairs + 0.5 #ties) / (n_pos n_neg), from mid-ranks."""
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC-ROC needs both classes present")
    ranks = rankdata(s, method="average")
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_pr(scores, labels) -> float:
    """Average precision, sum over tie blocks of (recall step) * precision."""
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("AUC-PR needs at least one positive")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    # last position of every block of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp_end = tp[ends]
    precision = tp_end / (ends + 1)
    recall = tp_end / n_pos
    prev = np.r_[0.0, recall[:-1]]
    return float(np.sum((recall - prev) * precision))


def confusion(pred, labels):
    pred = np.asarray(pred, dtype=bool)
    y = np.asarray(labels, dtype=bool)
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    tn = int(np.sum(~pred & ~y))
    return tp, fp, tn, fn


def f1_from_counts(tp, fp, fn) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def f1_at_threshold(probs, labels, threshold: float = 0.5):
    """Predict anomaly iff prob >= threshold; returns (f1, (tp, fp, tn, fn))."""
    p, y = _check(probs, labels)
    counts = confusion(p >= threshold, y)
    tp, fp, tn, fn = counts
    return f1_from_counts(tp, fp, fn), counts


def topk_threshold(scores, labels) -> float:
    """The k-th largest score, k being the number of true anomalies."""
    s, y = _check(scores, labels)
    k = max(int(y.sum()), 1)
    return float(np.sort(s)[::-1][k - 1])


def evaluate(probs, labels, threshold: float = 0.5) -> EvalReport:
    p, y = _check(probs, labels)
    f1, (tp, fp, tn, fn) = f1_at_threshold(p, y, threshold)
    kthr = topk_threshold(p, y)
    f1k, _ = f1_at_threshold(p, y, kthr)
    return EvalReport(auc_roc(p, y), auc_pr(p, y), f1, threshold, tp, fp, tn, fn, f1k, kthr)
