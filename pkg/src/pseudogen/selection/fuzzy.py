"""Kernelized fuzzy rough sets over a Gaussian-kernel relation.

The relation r_ij = exp(-||z_i - z_j||^2 / delta) is reflexive, symmetric and
T_cos-transitive. For each information granule [x_i] (row i of the relation)
we compute

    upper(x) = sup_y T_cos(r(x, y), r(i, y))
    lower(x) = inf_y S_cos(1 - r(x, y), r(i, y))

and from their sigma-counts the approximation accuracy and the weighted
uncertainty used for candidate selection.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from llvmlite import ir
from numba import types
from numba.core.extending import intrinsic
from scipy.spatial.distance import pdist, squareform


def _check_unit(*arrays):
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if np.any(~np.isfinite(a)) or np.any(a < 0.0) or np.any(a > 1.0):
            raise ValueError("fuzzy operator arguments must lie in [0, 1]")


def t_cos(a, b, check: bool = True):
    """Cosine t-norm max(ab - sqrt(1-a^2) sqrt(1-b^2), 0)."""
    if check:
        _check_unit(a, b)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.maximum(a * b - np.sqrt(np.maximum(1.0 - a * a, 0.0)) * np.sqrt(np.maximum(1.0 - b * b, 0.0)), 0.0)
    return out if out.ndim else float(out)


def s_cos(a, b, check: bool = True, paper_literal: bool = False):
    """Cosine t-conorm, the De Morgan dual of :func:`t_cos`.

    ``paper_literal=True`` flips the sign of the square-root product; that form
    is not a t-conorm (S(1, b) != 1) and is kept only for comparison runs.
    """
    if check:
        _check_unit(a, b)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    root = np.sqrt(np.maximum(2.0 * a - a * a, 0.0)) * np.sqrt(np.maximum(2.0 * b - b * b, 0.0))
    sign = -1.0 if paper_literal else 1.0
    out = np.minimum(a + b - a * b + sign * root, 1.0)
    return out if out.ndim else float(out)


@dataclass
class RelationMatrix:
    r: np.ndarray
    delta: float

    @property
    def n(self) -> int:
        return self.r.shape[0]


@dataclass
class ApproximationPair:
    lower: np.ndarray
    upper: np.ndarray


@dataclass
class UncertaintyVector:
    alpha: np.ndarray
    alpha_prime: np.ndarray
    lam: np.ndarray
    lower_count: np.ndarray
    upper_count: np.ndarray


def median_delta(Z: np.ndarray) -> float:
    """Median of the pairwise squared distances; 1.0 when that median is 0."""
    if Z.shape[0] < 2:
        return 1.0
    d2 = pdist(Z, metric="sqeuclidean")
    med = float(np.median(d2))
    return med if med > 0 else 1.0


def fuzzy_relation(Z: np.ndarray, delta: float) -> RelationMatrix:
    if not delta > 0:
        raise ValueError(f"kernel parameter delta must be positive, got {delta}")
    Z = np.asarray(Z, dtype=float)
    d2 = squareform(pdist(Z, metric="sqeuclidean")) if Z.shape[0] > 1 else np.zeros((Z.shape[0],) * 2)
    r = np.exp(-d2 / delta)
    np.fill_diagonal(r, 1.0)
    return RelationMatrix(r, float(delta))


def granule_approximations(relation: RelationMatrix, i: int, paper_literal_scos: bool = False) -> ApproximationPair:
    """Lower/upper approximation of granule i, evaluated at every point of U."""
    R = relation.r
    if not 0 <= i < R.shape[0]:
        raise IndexError(f"granule index {i} out of range for universe of size {R.shape[0]}")
    g = R[i][None, :]
    upper = t_cos(R, g, check=False).max(axis=1)
    lower = s_cos(1.0 - R, g, check=False, paper_literal=paper_literal_scos).min(axis=1)
    return ApproximationPair(lower, upper)


def _llvm_binary(name):
    # numba's builtin max/min carry NaN branches that block vectorization of
    # the reductions below; llvm.maxnum/minnum are exact on finite inputs.
    @intrinsic
    def op(typingctx, a, b):
        sig = types.float64(types.float64, types.float64)

        def codegen(context, builder, signature, args):
            dbl = ir.DoubleType()
            fn = builder.module.declare_intrinsic(name, [dbl], ir.FunctionType(dbl, [dbl, dbl]))
            return builder.call(fn, args)

        return sig, codegen

    return op


_fmax = _llvm_binary("llvm.maxnum")
_fmin = _llvm_binary("llvm.minnum")


@numba.njit(cache=True, fastmath=True)
def _row_extrema(a, sa, b, sb, sb2, sign):
    # a, sa: relation row of x and sqrt(1 - a^2); b = granule memberships,
    # sb = sqrt(1 - b^2), sb2 = sqrt(2b - b^2). Note sqrt(2u - u^2) = sa for u = 1 - a.
    up = -1.0
    lo = 2.0
    for y in range(a.shape[0]):
        up = _fmax(up, a[y] * b[y] - sa[y] * sb[y])
        u = 1.0 - a[y]
        lo = _fmin(lo, u + b[y] - u * b[y] + sign * sa[y] * sb2[y])
    return max(up, 0.0), min(lo, 1.0)


@numba.njit(cache=True)
def _granule_counts(R, SA, SB2, sign, block):
    n = R.shape[0]
    lower_sum = np.zeros(n)
    upper_sum = np.zeros(n)
    for start in range(0, n, block):
        stop = min(start + block, n)
        for x in range(n):
            a = R[x]
            sa = SA[x]
            for i in range(start, stop):
                up, lo = _row_extrema(a, sa, R[i], SA[i], SB2[i], sign)
                upper_sum[i] += up
                lower_sum[i] += lo
    return lower_sum, upper_sum


def approximation_counts(relation: RelationMatrix, paper_literal_scos: bool = False, block: int = 16):
    """Sigma-counts of the lower and upper approximation of every granule."""
    R = np.ascontiguousarray(relation.r, dtype=np.float64)
    SA = np.sqrt(np.maximum(1.0 - R * R, 0.0))
    SB2 = np.sqrt(np.maximum(2.0 * R - R * R, 0.0))
    sign = -1.0 if paper_literal_scos else 1.0
    return _granule_counts(R, SA, SB2, sign, block)


def accuracy_scores(lower_count, upper_count, granule_count, n_universe):
    """Approximation accuracy, granule weight and weighted uncertainty."""
    lower_count = np.asarray(lower_count, dtype=float)
    upper_count = np.asarray(upper_count, dtype=float)
    alpha = lower_count / upper_count
    lam = np.asarray(granule_count, dtype=float) / n_universe
    return alpha, lam, 1.0 - lam * alpha


def weighted_uncertainty(relation: RelationMatrix, paper_literal_scos: bool = False) -> UncertaintyVector:
    lower, upper = approximation_counts(relation, paper_literal_scos)
    granule = relation.r.sum(axis=1)
    alpha, lam, alpha_prime = accuracy_scores(lower, upper, granule, relation.n)
    return UncertaintyVector(alpha, alpha_prime, lam, lower, upper)
