"""Real, antipodally symmetric spherical harmonics.

Coefficients are stored flat with even degrees ascending and, inside each
degree, orders from ``-l`` to ``+l``; ``sh_index`` is the single source of
that layout. Basis functions follow the Descoteaux convention with the
Condon-Shortley phase in the complex harmonics.
"""
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import InvalidDirection, InvalidIndex, InvalidOrder, SingularFit, TooFewDirections

MAX_ORDER = 10
UNIT_TOL = 1e-12
COND_LIMIT = 1e12
DEFAULT_NOISY_LAMBDA = 0.006


def sh_index(l, m):
    """Flat index of the (l, m) coefficient."""
    if l < 0 or l % 2 or l > MAX_ORDER:
        raise InvalidIndex(f"degree must be even and in [0, {MAX_ORDER}], got {l}")
    if abs(m) > l:
        raise InvalidIndex(f"order |m| must not exceed degree {l}, got {m}")
    return l * (l + 1) // 2 + m


def num_coeffs(order):
    if order < 0 or order % 2:
        raise InvalidOrder(f"band limit must be even and non-negative, got {order}")
    return (order + 1) * (order + 2) // 2


def order_from_count(n):
    """Inverse of ``num_coeffs``."""
    for order in range(0, MAX_ORDER + 1, 2):
        if num_coeffs(order) == n:
            return order
    raise InvalidOrder(f"{n} is not a valid even-SH coefficient count")


def degrees(order):
    """Degree ``l`` of every coefficient, in storage order."""
    return np.concatenate([np.full(2 * l + 1, l) for l in range(0, order + 1, 2)])


def orders_m(order):
    """Order ``m`` of every coefficient, in storage order."""
    return np.concatenate([np.arange(-l, l + 1) for l in range(0, order + 1, 2)])


def degree_slice(l):
    """Slice selecting the degree-``l`` block of a flat coefficient vector."""
    start = l * (l - 1) // 2
    return slice(start, start + 2 * l + 1)


def pad_order(coeffs, order):
    """Zero-pad a coefficient vector up to ``order``."""
    coeffs = np.asarray(coeffs, dtype=float)
    n = num_coeffs(order)
    if coeffs.shape[-1] > n:
        raise InvalidOrder(f"cannot pad {coeffs.shape[-1]} coefficients down to order {order}")
    out = np.zeros(coeffs.shape[:-1] + (n,))
    out[..., : coeffs.shape[-1]] = coeffs
    return out


@dataclass(frozen=True)
class SHCoeffs:
    """Coefficient vector of an even real spherical function."""

    order: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size != num_coeffs(self.order):
            raise InvalidOrder(
                f"order {self.order} needs {num_coeffs(self.order)} coefficients, got {c.size}"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_array(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(order_from_count(values.size), values)

    def padded(self, order):
        return SHCoeffs(order, pad_order(self.coeffs, order))

    def slice(self, l):
        return self.coeffs[degree_slice(l)]

    def __len__(self):
        return self.coeffs.size


@dataclass(frozen=True)
class GradientScheme:
    """Single-shell acquisition: one b-value (s/mm^2) and unit directions."""

    bvalue: float
    directions: np.ndarray

    def __post_init__(self):
        d = as_directions(self.directions)
        if not self.bvalue > 0:
            raise ValueError(f"b-value must be positive, got {self.bvalue}")
        object.__setattr__(self, "directions", d)

    def __len__(self):
        return self.directions.shape[0]


def as_directions(dirs, tol=UNIT_TOL):
    """Validate an (n, 3) array of unit vectors."""
    d = np.atleast_2d(np.asarray(dirs, dtype=float))
    if d.ndim != 2 or d.shape[1] != 3:
        raise InvalidDirection(f"directions must have shape (n, 3), got {d.shape}")
    err = np.abs(np.einsum("ij,ij->i", d, d) - 1.0)
    if err.size and (not np.all(np.isfinite(err)) or err.max() > tol):
        raise InvalidDirection(f"directions must be unit vectors (max norm error {err.max():.3g})")
    return np.ascontiguousarray(d)


def fibonacci_sphere(n, hemisphere=True):
    """Spherical Fibonacci lattice of ``n`` unit vectors.

    With ``hemisphere`` the points cover z > 0 only, so no two of them are
    antipodal copies of the same axis.
    """
    i = np.arange(n) + 0.5
    z = i / n if hemisphere else 1.0 - 2.0 * i / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * np.arange(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def normalize(dirs):
    d = np.asarray(dirs, dtype=float)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def eval_basis(direction, order):
    """Basis values at one direction, length ``num_coeffs(order)``."""
    num_coeffs(order)
    return _backend.real_sh_basis(as_directions(direction), order)[0]


def design_matrix(directions, order, min_rows=True):
    """Stack basis rows for every direction, shape (n_dirs, num_coeffs)."""
    n = num_coeffs(order)
    d = as_directions(directions)
    if min_rows and d.shape[0] < n:
        raise TooFewDirections(f"{d.shape[0]} directions cannot determine {n} coefficients")
    return _backend.real_sh_basis(d, order)


def laplace_beltrami(order):
    l = degrees(order).astype(float)
    return l**2 * (l + 1) ** 2


def fit_matrix(directions, order, lb_lambda=0.0):
    """Linear map from sampled amplitudes to fitted coefficients.

    Solves the (optionally Laplace-Beltrami regularised) normal equations
    through an SVD, refusing condition numbers above ``COND_LIMIT``.
    """
    if lb_lambda < 0:
        raise ValueError("lb_lambda must be non-negative")
    basis = design_matrix(directions, order)
    aug = basis
    if lb_lambda > 0:
        aug = np.vstack([basis, np.sqrt(lb_lambda) * np.diag(laplace_beltrami(order))])
    u, s, vt = np.linalg.svd(aug, full_matrices=False)
    cond = (s[0] / s[-1]) ** 2 if s[-1] > 0 else np.inf
    if not cond <= COND_LIMIT:
        raise SingularFit(f"normal matrix condition {cond:.3g} exceeds {COND_LIMIT:.0e}")
    # pseudo-inverse of the augmented system restricted to the data rows
    return (vt.T / s) @ u[: basis.shape[0]].T


def fit_sh(amplitudes, directions, order, lb_lambda=0.0):
    """Least-squares SH fit of amplitudes sampled on ``directions``."""
    a = np.asarray(amplitudes, dtype=float)
    d = as_directions(directions)
    if a.shape[-1] != d.shape[0]:
        raise ValueError(f"{a.shape[-1]} amplitudes for {d.shape[0]} directions")
    coeffs = a @ fit_matrix(d, order, lb_lambda).T
    if coeffs.ndim == 1:
        return SHCoeffs(order, coeffs)
    return coeffs


def evaluate(coeffs, directions):
    """Amplitudes of the SH function at each direction."""
    if isinstance(coeffs, SHCoeffs):
        c, order = coeffs.coeffs, coeffs.order
    else:
        c = np.asarray(coeffs, dtype=float)
        order = order_from_count(c.shape[-1])
    return c @ design_matrix(directions, order, min_rows=False).T


def delta_sh(direction, order):
    """Band-limited projection of a unit point mass at ``direction``."""
    return SHCoeffs(order, eval_basis(direction, order))


def peak_directions(coeffs, n_dirs=10000, rel_threshold=0.1, neighbor_deg=4.0):
    """Local maxima of an even SH function, strongest first.

    The function is sampled on ``n_dirs`` hemisphere lattice points; a point
    is a peak when no sample within ``neighbor_deg`` (antipodes included)
    exceeds it and its amplitude is at least ``rel_threshold`` of the
    global maximum. Returns ``(directions, amplitudes)``.
    """
    from scipy.spatial import cKDTree

    dirs = fibonacci_sphere(n_dirs)
    amp = evaluate(coeffs, dirs)
    both = np.vstack([dirs, -dirs])
    tree = cKDTree(both)
    radius = 2.0 * np.sin(np.radians(neighbor_deg) / 2.0)
    amp2 = np.concatenate([amp, amp])
    top = amp.max()
    keep = []
    for i in np.argsort(-amp):
        if amp[i] < rel_threshold * top:
            break
        nbrs = tree.query_ball_point(dirs[i], radius)
        if amp[i] >= amp2[nbrs].max():
            keep.append(i)
    return dirs[keep], amp[keep]


def axial_angle_deg(u, v):
    """Angle between two axes (sign-insensitive), in degrees."""
    c = abs(float(np.dot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return float(np.degrees(np.arccos(min(1.0, c))))
