# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Mirrors ``_kernels_py`` one-to-one."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, atan2, cos, sin, M_PI

cnp.import_array()


def real_sh_basis(double[:, ::1] dirs, int order):
    """Real even SH basis at each row of ``dirs`` (unit vectors), shape (n, ncoef)."""
    cdef Py_ssize_t n = dirs.shape[0]
    cdef int ncoef = (order + 1) * (order + 2) // 2
    out_arr = np.zeros((n, ncoef), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] q = np.zeros((order + 1, order + 1), dtype=np.float64)
    cdef double[::1] cm = np.zeros(order + 1, dtype=np.float64)
    cdef double[::1] sm = np.zeros(order + 1, dtype=np.float64)
    cdef Py_ssize_t i
    cdef int l, m, base
    cdef double x, s, phi, a, b, sign, rt2 = sqrt(2.0)

    for i in range(n):
        x = dirs[i, 2]
        if x > 1.0:
            x = 1.0
        elif x < -1.0:
            x = -1.0
        s = sqrt(dirs[i, 0] * dirs[i, 0] + dirs[i, 1] * dirs[i, 1])
        phi = atan2(dirs[i, 1], dirs[i, 0])
        for m in range(order + 1):
            cm[m] = cos(m * phi)
            sm[m] = sin(m * phi)

        q[0, 0] = 1.0 / sqrt(4.0 * M_PI)
        for m in range(1, order + 1):
            q[m, m] = -sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * q[m - 1, m - 1]
        for m in range(order):
            q[m + 1, m] = sqrt(2.0 * m + 3.0) * x * q[m, m]
        for m in range(order + 1):
            for l in range(m + 2, order + 1):
                a = sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = sqrt(((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0))
                q[l, m] = a * (x * q[l - 1, m] - b * q[l - 2, m])

        for l in range(0, order + 1, 2):
            base = l * (l + 1) // 2
            out[i, base] = q[l, 0]
            sign = -1.0
            for m in range(1, l + 1):
                out[i, base + m] = rt2 * sign * q[l, m] * cm[m]
                out[i, base - m] = rt2 * sign * q[l, m] * sm[m]
                sign = -sign
    return out_arr


def signed_rank_counts(long[::1] ranks2):
    """Number of sign assignments giving each positive-rank sum.

    ``ranks2`` holds doubled (hence integer) midranks; entry ``k`` of the
    result counts subsets whose doubled ranks sum to ``k``.
    """
    cdef Py_ssize_t n = ranks2.shape[0]
    cdef long total = 0
    cdef Py_ssize_t i
    cdef long k, r
    for i in range(n):
        total += ranks2[i]
    counts_arr = np.zeros(total + 1, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    counts[0] = 1
    cdef long reach = 0
    for i in range(n):
        r = ranks2[i]
        reach += r
        for k in range(reach, r - 1, -1):
            counts[k] += counts[k - r]
    return counts_arr
