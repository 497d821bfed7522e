"""Uniform random rotations and their action on SH coefficients.

Rotations are unit quaternions ``(w, x, y, z)``. The action on a degree-l
coefficient block is the real Wigner matrix ``D_l`` characterised by
``evaluate(D_l @ c_l, u) == evaluate(c_l, R^-1 u)``. It is obtained exactly
by sampling the rotated basis on a fixed, well-conditioned point set and
projecting back with the pseudo-inverse of the unrotated basis: degree-l
harmonics are closed under rotation, so the projection is exact up to
rounding.
"""
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import sh

_PROBE_POINTS = 200


@dataclass(frozen=True)
class Rotation:
    q: tuple

    def __post_init__(self):
        q = tuple(float(v) for v in self.q)
        if len(q) != 4:
            raise ValueError("quaternion needs four components (w, x, y, z)")
        norm = np.sqrt(sum(v * v for v in q))
        if abs(norm - 1.0) > 1e-12:
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(f"quaternion must be unit length, got norm {norm}")
            q = tuple(v / norm for v in q)
        object.__setattr__(self, "q", q)

    @classmethod
    def identity(cls):
        return cls((1.0, 0.0, 0.0, 0.0))

    @classmethod
    def from_axis_angle(cls, axis, angle):
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        h = 0.5 * angle
        return cls((np.cos(h), *(np.sin(h) * axis)))

    @classmethod
    def from_matrix(cls, mat):
        m = np.asarray(mat, dtype=float)
        tr = np.trace(m)
        if tr > 0:
            s = 2.0 * np.sqrt(tr + 1.0)
            q = (0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
        else:
            i = int(np.argmax(np.diag(m)))
            j, k = (i + 1) % 3, (i + 2) % 3
            s = 2.0 * np.sqrt(1.0 + m[i, i] - m[j, j] - m[k, k])
            v = np.zeros(3)
            v[i] = 0.25 * s
            v[j] = (m[j, i] + m[i, j]) / s
            v[k] = (m[k, i] + m[i, k]) / s
            q = ((m[k, j] - m[j, k]) / s, *v)
        q = np.asarray(q)
        return cls(tuple(q / np.linalg.norm(q)))

    @property
    def matrix(self):
        w, x, y, z = self.q
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])

    def inverse(self):
        w, x, y, z = self.q
        return Rotation((w, -x, -y, -z))

    def __matmul__(self, other):
        """Composition: ``(a @ b)`` applies ``b`` first, then ``a``."""
        w1, x1, y1, z1 = self.q
        w2, x2, y2, z2 = other.q
        return Rotation((
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ))

    def apply(self, vectors):
        return np.asarray(vectors, dtype=float) @ self.matrix.T


def random_rotation(rng):
    """Uniform rotation via Shoemake's subgroup algorithm.

    ``rng`` is a ``numpy.random.Generator`` or an integer seed.
    """
    rng = np.random.default_rng(rng)
    u1, u2, u3 = rng.random(3)
    a, b = np.sqrt(1.0 - u1), np.sqrt(u1)
    t2, t3 = 2.0 * np.pi * u2, 2.0 * np.pi * u3
    return Rotation((b * np.cos(t3), a * np.sin(t2), a * np.cos(t2), b * np.sin(t3)))


@lru_cache(maxsize=None)
def _probe(order):
    pts = sh.fibonacci_sphere(_PROBE_POINTS, hemisphere=False)
    basis = sh.design_matrix(pts, order)
    pinvs = {}
    for l in range(0, order + 1, 2):
        pinvs[l] = np.linalg.pinv(basis[:, sh.degree_slice(l)])
    return pts, pinvs


@dataclass(frozen=True)
class WignerBlocks:
    order: int
    blocks: tuple

    def block_diag(self):
        n = sh.num_coeffs(self.order)
        out = np.zeros((n, n))
        for l, block in zip(range(0, self.order + 1, 2), self.blocks):
            s = sh.degree_slice(l)
            out[s, s] = block
        return out


def _blocks_batch(matrices, order):
    """Wigner blocks for a stack of rotation matrices, one array per degree."""
    pts, pinvs = _probe(order)
    mats = np.asarray(matrices, dtype=float).reshape(-1, 3, 3)
    # R^-1 u for every probe point u; R orthogonal so R^-1 u = R^T u
    rotated = np.einsum("kji,pj->kpi", mats, pts).reshape(-1, 3)
    rotated = sh.normalize(rotated)
    basis = sh.design_matrix(rotated, order, min_rows=False).reshape(len(mats), len(pts), -1)
    blocks = []
    for l in range(0, order + 1, 2):
        blocks.append(np.einsum("ip,kpj->kij", pinvs[l], basis[:, :, sh.degree_slice(l)]))
    blocks[0] = np.ones_like(blocks[0])
    return blocks


def wigner_blocks(rot, order):
    """Per-degree orthogonal matrices realising ``rot`` on coefficients."""
    blocks = _blocks_batch(rot.matrix, order)
    return WignerBlocks(order, tuple(b[0] for b in blocks))


def rotate_coeffs_batch(coeffs, matrices):
    """Rotate ``coeffs[k]`` by ``matrices[k]`` for a stack of rotations.

    ``coeffs`` may be a single vector broadcast against every rotation.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    mats = np.asarray(matrices, dtype=float).reshape(-1, 3, 3)
    order = sh.order_from_count(coeffs.shape[-1])
    coeffs = np.broadcast_to(coeffs, (len(mats), coeffs.shape[-1]))
    out = np.empty_like(coeffs)
    for l, block in zip(range(0, order + 1, 2), _blocks_batch(mats, order)):
        s = sh.degree_slice(l)
        out[:, s] = np.einsum("kij,kj->ki", block, coeffs[:, s])
    return out


def rotate_sh(c, rot):
    """Rotate an ``SHCoeffs`` (or raw vector) by ``rot``."""
    if isinstance(c, sh.SHCoeffs):
        return sh.SHCoeffs(c.order, rotate_coeffs_batch(c.coeffs, rot.matrix)[0])
    return rotate_coeffs_batch(c, rot.matrix)[0]


def augment_sample(sample, rot):
    """Rotate signal and FOD of a sample jointly; the group id is kept.

    The stored rotation composes with any rotation already on the sample,
    so ``sample.rotation`` always maps the base voxel to this one.
    """
    return replace(
        sample,
        signal_sh=rotate_sh(sample.signal_sh, rot),
        fod_sh=rotate_sh(sample.fod_sh, rot),
        rotation=rot @ sample.rotation,
    )
