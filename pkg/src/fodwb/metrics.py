"""Evaluation metrics and paired statistics.

ACC is the cosine similarity of two coefficient vectors over degrees
l >= 2. Coefficient sets of different band limits are compared after
zero-padding the shorter one.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _backend, sh
from .errors import DegenerateInput, EmptyInput, IsotropicInput

EXACT_LIMIT = 25
# counts sum to 2**n and are held in int64
EXACT_MAX = 62


def _coeff_array(c):
    return c.coeffs if isinstance(c, sh.SHCoeffs) else np.asarray(c, dtype=float)


def _common(u, v):
    u, v = _coeff_array(u), _coeff_array(v)
    n = max(u.shape[-1], v.shape[-1])
    order = sh.order_from_count(n)
    return sh.pad_order(u, order), sh.pad_order(v, order)


def acc(u, v):
    """Angular correlation coefficient of two SH functions (l = 0 excluded)."""
    u, v = _common(u, v)
    u, v = u[..., 1:], v[..., 1:]
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    if np.any(nu == 0) or np.any(nv == 0):
        raise IsotropicInput("ACC is undefined for a function without l >= 2 energy")
    out = np.sum(u * v, axis=-1) / (nu * nv)
    return float(out) if np.ndim(out) == 0 else out


def mse_coeffs(u, v):
    """Mean squared coefficient difference (per row for 2-D input)."""
    u, v = _common(u, v)
    out = np.mean((u - v) ** 2, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def rmse(mses):
    mses = np.asarray(mses, dtype=float)
    if mses.size == 0:
        raise EmptyInput("rmse of an empty set")
    return float(np.sqrt(np.mean(mses)))


def median(values):
    values = sorted(float(v) for v in values)
    if not values:
        raise EmptyInput("median of an empty sequence")
    n = len(values)
    mid = n // 2
    if n % 2:
        return values[mid]
    return 0.5 * (values[mid - 1] + values[mid])


@dataclass(frozen=True)
class SignedRankResult:
    statistic: float
    n_effective: int
    p_two_sided: float
    method: str

    def to_dict(self):
        return asdict(self)


def _midranks(values):
    """Ranks of ``values`` with ties sharing the average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = np.asarray(values)[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def signed_rank_null(ranks):
    """Exact null distribution of W over all 2^n sign assignments.

    Returns ``(support, probabilities)`` with support on the W scale.
    Midranks are doubled so the counting runs over integers.
    """
    ranks2 = np.rint(2.0 * np.asarray(ranks)).astype(np.int64)
    counts = _backend.signed_rank_counts(np.ascontiguousarray(ranks2))
    return np.arange(counts.size) / 2.0, counts / float(2 ** len(ranks2))


def wilcoxon_signed_rank(pairs, method="auto"):
    """Two-sided Wilcoxon signed-rank test on paired values ``(a, b)``.

    ``W`` sums the ranks of positive ``a - b``. Zero differences are
    dropped. With ``method="auto"`` the p-value is exact up to
    ``EXACT_LIMIT`` non-zero differences and uses the tie-corrected normal
    approximation with continuity correction above it.
    """
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if len(pairs) < 5:
        raise EmptyInput(f"signed-rank test needs at least 5 pairs, got {len(pairs)}")
    d = pairs[:, 0] - pairs[:, 1]
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise DegenerateInput("all paired differences are zero")
    ranks = _midranks(np.abs(d))
    w = float(ranks[d > 0].sum())
    if method == "auto":
        method = "exact" if n <= EXACT_LIMIT else "normal-approximation"
    if method == "exact":
        if n > EXACT_MAX:
            raise ValueError(f"exact null distribution limited to {EXACT_MAX} non-zero differences, got {n}")
        support, prob = signed_rank_null(ranks)
        lower = prob[support <= w + 1e-9].sum()
        upper = prob[support >= w - 1e-9].sum()
        p = min(1.0, 2.0 * min(lower, upper))
    elif method in ("normal", "normal-approximation"):
        method = "normal-approximation"
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
        if var <= 0:
            p = 1.0
        else:
            z = max(abs(w - mean) - 0.5, 0.0) / math.sqrt(var)
            p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return SignedRankResult(w, n, float(p), method)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    below: int
    above: int

    def to_dict(self):
        return {
            "edges": self.edges.tolist(),
            "counts": self.counts.tolist(),
            "below": self.below,
            "above": self.above,
        }


def histogram(values, n_bins, value_range):
    """Uniform-bin counts; out-of-range values are tallied separately.

    The last bin is closed on the right.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    lo, hi = map(float, value_range)
    values = np.asarray(values, dtype=float).ravel()
    edges = np.linspace(lo, hi, n_bins + 1)
    inside = (values >= lo) & (values <= hi)
    counts, _ = np.histogram(values[inside], bins=edges)
    return Histogram(edges, counts.astype(int), int(np.sum(values < lo)), int(np.sum(values > hi)))


@dataclass
class PairedMetrics:
    voxel_id: np.ndarray
    acc_a: np.ndarray
    acc_b: np.ndarray
    mse_a: np.ndarray
    mse_b: np.ndarray

    def records(self, names=("dnn", "csd")):
        a, b = names
        return [
            {"voxel_id": int(i), f"acc_{a}": float(x), f"acc_{b}": float(y),
             f"mse_{a}": float(p), f"mse_{b}": float(q)}
            for i, x, y, p, q in zip(self.voxel_id, self.acc_a, self.acc_b, self.mse_a, self.mse_b)
        ]


def paired_metrics(truth, pred_a, pred_b, voxel_ids=None):
    truth, pred_a, pred_b = (np.atleast_2d(_coeff_array(x)) for x in (truth, pred_a, pred_b))
    ids = np.arange(len(truth)) if voxel_ids is None else np.asarray(voxel_ids)
    return PairedMetrics(
        ids,
        np.atleast_1d(acc(truth, pred_a)),
        np.atleast_1d(acc(truth, pred_b)),
        np.atleast_1d(mse_coeffs(truth, pred_a)),
        np.atleast_1d(mse_coeffs(truth, pred_b)),
    )
