"""Numpy implementations of the compiled kernels.

Used when the Cython extension is not built. Results agree with
``_kernels.pyx`` to rounding.
"""
import numpy as np


def real_sh_basis(dirs, order):
    """Real even SH basis at each row of ``dirs`` (unit vectors), shape (n, ncoef)."""
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    n = dirs.shape[0]
    ncoef = (order + 1) * (order + 2) // 2
    x = np.clip(dirs[:, 2], -1.0, 1.0)
    s = np.hypot(dirs[:, 0], dirs[:, 1])
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])

    q = np.zeros((order + 1, order + 1, n))
    q[0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, order + 1):
        q[m, m] = -np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * q[m - 1, m - 1]
    for m in range(order):
        q[m + 1, m] = np.sqrt(2.0 * m + 3.0) * x * q[m, m]
    for m in range(order + 1):
        for l in range(m + 2, order + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            q[l, m] = a * (x * q[l - 1, m] - b * q[l - 2, m])

    out = np.zeros((n, ncoef))
    rt2 = np.sqrt(2.0)
    for l in range(0, order + 1, 2):
        base = l * (l + 1) // 2
        out[:, base] = q[l, 0]
        for m in range(1, l + 1):
            sign = -1.0 if m % 2 else 1.0
            out[:, base + m] = rt2 * sign * q[l, m] * np.cos(m * phi)
            out[:, base - m] = rt2 * sign * q[l, m] * np.sin(m * phi)
    return out


def signed_rank_counts(ranks2):
    """Number of sign assignments giving each positive-rank sum (doubled ranks)."""
    ranks2 = np.asarray(ranks2, dtype=np.int64)
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in ranks2:
        r = int(r)
        shifted = counts[: total + 1 - r].copy()
        counts[r:] += shifted
    return counts
