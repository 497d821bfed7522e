"""Constrained spherical deconvolution baseline.

The single-fiber response is a set of zonal (m = 0) coefficients; the
forward model multiplies each FOD degree by the rotational harmonic of
the response. Deconvolution starts from a low-order direct inverse and
then re-solves a least-squares problem in which directions where the
current FOD falls below a threshold are pushed towards zero, until the
set of penalised directions stops changing.
"""
from dataclasses import dataclass, field

import numpy as np

from . import sh
from .errors import NotZonal, SingularResponse
from .phantom import FiberPopulation, tensor_signal
from .rotation import random_rotation

ZONAL_TOL = 0.05


@dataclass(frozen=True)
class ResponseFunction:
    order: int
    zonal: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.zonal, dtype=float)
        if z.size != self.order // 2 + 1:
            raise ValueError(f"order {self.order} response needs {self.order // 2 + 1} terms")
        if not z[0] > 0:
            raise SingularResponse(f"response r_0 must be positive, got {z[0]}")
        object.__setattr__(self, "zonal", z)

    def kernel(self, order=None):
        """Per-coefficient convolution weights sqrt(4pi/(2l+1)) * r_l."""
        order = self.order if order is None else order
        if order > self.order:
            raise SingularResponse(f"response of order {self.order} cannot convolve order {order}")
        l = sh.degrees(order)
        return np.sqrt(4.0 * np.pi / (2 * l + 1)) * self.zonal[l // 2]


@dataclass
class CsdParams:
    n_constraint_dirs: int = 300
    tau: float = 0.1
    lam: float = 1.0
    max_iters: int = 50
    init_order: int = 4

    def __post_init__(self):
        if not (self.tau > 0 and self.lam > 0 and self.max_iters >= 1):
            raise ValueError("need tau > 0, lam > 0 and max_iters >= 1")
        sh.num_coeffs(self.init_order)


@dataclass
class CsdResult:
    fod: sh.SHCoeffs
    converged: bool
    n_iter: int
    residuals: list = field(default_factory=list)

    @property
    def flag(self):
        return "Converged" if self.converged else "NonConverged"


def estimate_response(zsignal, tol=ZONAL_TOL):
    """Zonal part of a z-aligned single-fiber signal.

    Anisotropy off the z axis is measured over degrees l >= 2; an
    isotropic signal has none and passes.
    """
    c = zsignal.coeffs
    l, m = sh.degrees(zsignal.order), sh.orders_m(zsignal.order)
    aniso = np.sum(c[l > 0] ** 2)
    off = np.sum(c[m != 0] ** 2)
    if aniso > 0 and off > tol * aniso:
        raise NotZonal(f"{off / aniso:.1%} of the anisotropic energy is off-axis (limit {tol:.0%})")
    zonal = np.array([c[sh.sh_index(k, 0)] for k in range(0, zsignal.order + 1, 2)])
    return ResponseFunction(zsignal.order, zonal)


def calibrate_response(scheme, axial_diffusivity, radial_diffusivity, order=8,
                       lb_lambda=0.0, n_voxels=30, seed=0):
    """Average response of ``n_voxels`` noiseless z-aligned fibers.

    Each voxel sees the scheme under a different random rotation so the
    average does not inherit the sampling pattern of one direction set.
    """
    rng = np.random.default_rng(seed)
    pop = FiberPopulation([[0.0, 0.0, 1.0]], [1.0], axial_diffusivity, radial_diffusivity)
    zonals = []
    for _ in range(n_voxels):
        rot = random_rotation(rng)
        dirs = sh.normalize(rot.apply(scheme.directions))
        rotated = sh.GradientScheme(scheme.bvalue, dirs)
        fit = sh.fit_sh(tensor_signal(pop, rotated), dirs, order, lb_lambda)
        zonals.append(estimate_response(fit).zonal)
    return ResponseFunction(order, np.mean(zonals, axis=0))


def forward_convolve(fod, resp):
    """Signal coefficients predicted by convolving ``fod`` with ``resp``."""
    return sh.SHCoeffs(fod.order, resp.kernel(fod.order) * fod.coeffs)


class Deconvolver:
    """Reusable CSD solver for one response and parameter set."""

    def __init__(self, resp, params=None, order=None):
        self.params = params or CsdParams()
        self.order = resp.order if order is None else order
        self.resp = resp
        self.kernel = resp.kernel(self.order)
        low = sh.degrees(self.order) <= self.params.init_order
        if np.any(self.kernel[low] == 0):
            raise SingularResponse("response vanishes below init_order")
        self.low = low
        dirs = sh.fibonacci_sphere(self.params.n_constraint_dirs)
        self.basis = sh.design_matrix(dirs, self.order, min_rows=False)

    def __call__(self, signal):
        p = self.params
        s = signal.coeffs if isinstance(signal, sh.SHCoeffs) else np.asarray(signal, float)
        k = self.kernel
        f = np.zeros_like(s)
        f[self.low] = s[self.low] / k[self.low]
        threshold = p.tau * np.mean(self.basis @ f)
        normal = np.diag(k * k)
        rhs = k * s
        lam2 = p.lam * p.lam
        residuals = []
        prev = None
        converged = False
        n_iter = 0
        for n_iter in range(1, p.max_iters + 1):
            neg = np.flatnonzero(self.basis @ f < threshold)
            if prev is not None and np.array_equal(neg, prev):
                converged = True
                n_iter -= 1
                break
            rows = self.basis[neg]
            f = np.linalg.solve(normal + lam2 * rows.T @ rows, rhs)
            residuals.append(float(np.linalg.norm(k * f - s)))
            prev = neg
        return CsdResult(sh.SHCoeffs(self.order, f), converged, n_iter, residuals)


def csd_deconvolve(signal, resp, params=None):
    """FOD of ``signal`` (order-8 SH) under response ``resp``."""
    return Deconvolver(resp, params, signal.order)(signal)
