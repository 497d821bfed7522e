"""Multi-tensor phantom standing in for histology-matched voxels.

Each base voxel holds one to three fibers. Its diffusion signal is
simulated on a single-shell scheme, optionally corrupted with Rician
noise, and fitted to order-8 SH. The ground-truth FOD is the order-10
projection of the weighted fiber point masses. Every base voxel is then
augmented with random rotations applied jointly to signal and FOD.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import sh
from .errors import ConfigError, TooFewDirections
from .rotation import Rotation, rotate_coeffs_batch, random_rotation

SIGNAL_ORDER = 8
FOD_ORDER = 10


@dataclass(frozen=True)
class FiberPopulation:
    directions: np.ndarray
    fractions: np.ndarray
    axial_diffusivity: float = 1.7e-3
    radial_diffusivity: float = 0.2e-3

    def __post_init__(self):
        d = sh.as_directions(self.directions, tol=1e-9)
        f = np.atleast_1d(np.asarray(self.fractions, dtype=float))
        if not 1 <= len(d) <= 3 or len(f) != len(d):
            raise ConfigError("a population holds 1 to 3 fibers, one fraction each")
        if np.any(f <= 0) or abs(f.sum() - 1.0) > 1e-9:
            raise ConfigError(f"fractions must be positive and sum to 1, got {f}")
        if not self.axial_diffusivity >= self.radial_diffusivity > 0:
            raise ConfigError("need axial >= radial > 0 diffusivity")
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "fractions", f)


@dataclass(frozen=True)
class VoxelSample:
    group_id: int
    signal_sh: sh.SHCoeffs
    fod_sh: sh.SHCoeffs
    rotation: Rotation = field(default_factory=Rotation.identity)

    def __post_init__(self):
        if self.signal_sh.order != SIGNAL_ORDER or self.fod_sh.order != FOD_ORDER:
            raise ConfigError(
                f"samples pair order-{SIGNAL_ORDER} signal with order-{FOD_ORDER} FOD, "
                f"got {self.signal_sh.order} and {self.fod_sh.order}"
            )


@dataclass
class DatasetConfig:
    n_base_voxels: int = 567
    rotations_per_voxel: int = 100
    n_directions: int = 100
    bvalue: float = 2000.0
    snr: float | None = 30.0
    crossing_angle_range: tuple = (30.0, 90.0)
    fraction_floor: float = 0.2
    fiber_count_probs: tuple = (0.5, 0.4, 0.1)
    axial_diffusivity: float = 1.7e-3
    radial_diffusivity: float = 0.2e-3
    fit_lambda: float | None = None
    seed: int = 0

    def __post_init__(self):
        self.crossing_angle_range = tuple(float(v) for v in self.crossing_angle_range)
        self.fiber_count_probs = tuple(float(v) for v in self.fiber_count_probs)
        lo, hi = self.crossing_angle_range
        if self.n_base_voxels < 1 or self.rotations_per_voxel < 0:
            raise ConfigError("need n_base_voxels >= 1 and rotations_per_voxel >= 0")
        if not 0 < lo <= hi <= 90:
            raise ConfigError(f"crossing angles must lie in (0, 90] degrees, got {lo}..{hi}")
        if len(self.fiber_count_probs) != 3 or abs(sum(self.fiber_count_probs) - 1) > 1e-9:
            raise ConfigError("fiber_count_probs needs three probabilities summing to 1")
        if not 0 <= self.fraction_floor * 3 < 1:
            raise ConfigError("fraction_floor must be below 1/3")
        if self.snr is not None and self.snr <= 0:
            raise ConfigError("snr must be positive or null")

    @property
    def lb_lambda(self):
        if self.fit_lambda is not None:
            return self.fit_lambda
        return 0.0 if self.snr is None else sh.DEFAULT_NOISY_LAMBDA

    def to_dict(self):
        return asdict(self)


def make_gradient_scheme(n, bvalue):
    """Fibonacci-lattice scheme with ``n`` directions on the upper hemisphere."""
    if n < sh.num_coeffs(SIGNAL_ORDER):
        raise TooFewDirections(f"{n} directions cannot support an order-{SIGNAL_ORDER} fit")
    return sh.GradientScheme(bvalue, sh.fibonacci_sphere(n))


def tensor_signal(pop, scheme):
    """Noise-free attenuation S/S0 of axially symmetric tensors."""
    g = scheme.directions
    cos2 = (g @ pop.directions.T) ** 2
    adc = pop.radial_diffusivity + (pop.axial_diffusivity - pop.radial_diffusivity) * cos2
    return np.exp(-scheme.bvalue * adc) @ pop.fractions


def add_rician_noise(a, snr, rng):
    """Magnitude of the signal plus complex Gaussian noise of std ``1/snr``."""
    a = np.asarray(a, dtype=float)
    if snr is None or np.isinf(snr):
        return a.copy()
    if snr <= 0:
        raise ConfigError("snr must be positive")
    rng = np.random.default_rng(rng)
    sigma = 1.0 / snr
    n1 = rng.normal(0.0, sigma, a.shape)
    n2 = rng.normal(0.0, sigma, a.shape)
    return np.hypot(a + n1, n2)


def truth_fod(pop, order=FOD_ORDER):
    """Fraction-weighted sum of band-limited fiber deltas."""
    basis = sh.design_matrix(pop.directions, order, min_rows=False)
    return sh.SHCoeffs(order, pop.fractions @ basis)


def _axial_angle(u, v):
    return np.degrees(np.arccos(min(1.0, abs(float(u @ v)))))


def _at_angle(axis, angle_deg, rng):
    """Unit vector at ``angle_deg`` from ``axis`` with uniform azimuth."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    psi = rng.uniform(0.0, 2.0 * np.pi)
    perp = np.cos(psi) * e1 + np.sin(psi) * e2
    t = np.radians(angle_deg)
    return sh.normalize(np.cos(t) * axis + np.sin(t) * perp)


def sample_population(cfg, rng):
    """Draw a random fiber configuration under ``cfg``'s mix."""
    k = int(rng.choice(3, p=cfg.fiber_count_probs)) + 1
    lo, hi = cfg.crossing_angle_range
    first = sh.normalize(rng.normal(size=3))
    dirs = [first]
    while len(dirs) < k:
        cand = _at_angle(first, rng.uniform(lo, hi), rng)
        if all(_axial_angle(cand, d) >= lo for d in dirs):
            dirs.append(cand)
    if k == 1:
        fractions = np.ones(1)
    else:
        fractions = cfg.fraction_floor + (1.0 - k * cfg.fraction_floor) * rng.dirichlet(np.ones(k))
        fractions /= fractions.sum()
    return FiberPopulation(np.array(dirs), fractions, cfg.axial_diffusivity, cfg.radial_diffusivity)


def voxel_rng(seed, index):
    """Independent stream for base voxel ``index``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _base_voxel(cfg, scheme, fit, index):
    rng = voxel_rng(cfg.seed, index)
    pop = sample_population(cfg, rng)
    signal = add_rician_noise(tensor_signal(pop, scheme), cfg.snr, rng)
    signal_sh = fit @ signal
    fod = truth_fod(pop).coeffs
    samples = [VoxelSample(index, sh.SHCoeffs(SIGNAL_ORDER, signal_sh), sh.SHCoeffs(FOD_ORDER, fod))]
    if cfg.rotations_per_voxel:
        rots = [random_rotation(rng) for _ in range(cfg.rotations_per_voxel)]
        mats = np.array([r.matrix for r in rots])
        sig_rot = rotate_coeffs_batch(signal_sh, mats)
        fod_rot = rotate_coeffs_batch(fod, mats)
        for r, s, f in zip(rots, sig_rot, fod_rot):
            samples.append(
                VoxelSample(index, sh.SHCoeffs(SIGNAL_ORDER, s), sh.SHCoeffs(FOD_ORDER, f), r)
            )
    return samples


def generate_dataset(cfg, scheme=None, n_jobs=1):
    """Build ``n_base_voxels * (rotations_per_voxel + 1)`` samples.

    Output order is base voxel by base voxel, the unrotated sample first.
    Results do not depend on ``n_jobs``: each voxel draws from its own
    stream seeded by ``(seed, voxel index)``.
    """
    if scheme is None:
        scheme = make_gradient_scheme(cfg.n_directions, cfg.bvalue)
    fit = sh.fit_matrix(scheme.directions, SIGNAL_ORDER, cfg.lb_lambda)

    def work(i):
        return _base_voxel(cfg, scheme, fit, i)

    indices = range(cfg.n_base_voxels)
    if n_jobs == 1:
        chunks = map(work, indices)
        return [s for chunk in chunks for s in chunk]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return [s for chunk in pool.map(work, indices) for s in chunk]


def stack(samples):
    """Signal and FOD coefficient matrices plus group ids."""
    x = np.array([s.signal_sh.coeffs for s in samples])
    y = np.array([s.fod_sh.coeffs for s in samples])
    g = np.array([s.group_id for s in samples])
    return x, y, g
