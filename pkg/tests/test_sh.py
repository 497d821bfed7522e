import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import sph_harm_y

from fodwb import sh
from fodwb.errors import InvalidDirection, InvalidIndex, InvalidOrder, SingularFit, TooFewDirections

from conftest import random_unit

Y00 = 0.5 / np.sqrt(np.pi)


def real_basis_oracle(direction, order):
    """Real even SH built directly from scipy's complex harmonics."""
    x, y, z = direction
    theta = np.arccos(np.clip(z, -1, 1))
    phi = np.arctan2(y, x)
    out = []
    for l in range(0, order + 1, 2):
        for m in range(-l, l + 1):
            if m < 0:
                val = np.sqrt(2) * (-1) ** m * sph_harm_y(l, -m, theta, phi).imag
            elif m == 0:
                val = sph_harm_y(l, 0, theta, phi).real
            else:
                val = np.sqrt(2) * (-1) ** m * sph_harm_y(l, m, theta, phi).real
            out.append(val)
    return np.array(out)


@pytest.mark.parametrize("l, m, j", [(0, 0, 0), (2, -2, 1), (8, 8, 44), (10, 10, 65)])
def test_sh_index_examples(l, m, j):
    assert sh.sh_index(l, m) == j


@pytest.mark.parametrize("l, m", [(1, 0), (2, 3), (2, -3), (12, 0), (-2, 0)])
def test_sh_index_rejects(l, m):
    with pytest.raises(InvalidIndex):
        sh.sh_index(l, m)


@pytest.mark.parametrize("order", [0, 2, 4, 6, 8, 10])
def test_sh_index_bijective(order):
    idx = [sh.sh_index(l, m) for l in range(0, order + 1, 2) for m in range(-l, l + 1)]
    assert sorted(idx) == list(range(sh.num_coeffs(order)))


def test_num_coeffs():
    assert sh.num_coeffs(8) == 45
    assert sh.num_coeffs(10) == 66
    assert sh.num_coeffs(0) == 1
    with pytest.raises(InvalidOrder):
        sh.num_coeffs(7)


def test_eval_basis_closed_forms():
    z = np.array([0.0, 0.0, 1.0])
    b = sh.eval_basis(z, 8)
    assert b[sh.sh_index(0, 0)] == pytest.approx(Y00, abs=1e-15)
    assert b[sh.sh_index(2, 0)] == pytest.approx(np.sqrt(5 / (4 * np.pi)), abs=1e-15)
    assert b[sh.sh_index(2, 2)] == pytest.approx(0.0, abs=1e-15)
    assert len(b) == 45


def test_eval_basis_matches_scipy(rng):
    for d in random_unit(rng, 25):
        np.testing.assert_allclose(sh.eval_basis(d, 10), real_basis_oracle(d, 10), atol=1e-12)


def test_eval_basis_rejects_non_unit():
    with pytest.raises(InvalidDirection):
        sh.eval_basis([1.0, 1.0, 0.0], 4)


@pytest.mark.parametrize("order", [0, 2, 4, 6, 8, 10])
def test_eval_basis_length(order, rng):
    assert sh.eval_basis(random_unit(rng, 1)[0], order).shape == (sh.num_coeffs(order),)


def test_design_matrix_shapes(scheme):
    assert sh.design_matrix(scheme.directions, 8).shape == (100, 45)
    np.testing.assert_allclose(sh.design_matrix([[0, 0, 1.0]], 0), [[Y00]], atol=1e-15)
    with pytest.raises(TooFewDirections):
        sh.design_matrix(scheme.directions[:10], 8)


def test_fit_constant(scheme):
    c = sh.fit_sh(np.ones(100), scheme.directions, 8)
    assert c.coeffs[0] == pytest.approx(2 * np.sqrt(np.pi), abs=1e-12)
    assert np.abs(c.coeffs[1:]).max() < 1e-10


def test_fit_round_trip(scheme, rng):
    c = rng.normal(size=45)
    fit = sh.fit_sh(sh.evaluate(c, scheme.directions), scheme.directions, 8)
    assert np.abs(fit.coeffs - c).max() < 1e-8
    np.testing.assert_allclose(sh.evaluate(fit, scheme.directions), sh.evaluate(c, scheme.directions), atol=1e-8)


def test_fit_matches_normal_equations(scheme):
    from fodwb.phantom import FiberPopulation, tensor_signal

    pop = FiberPopulation([sh.normalize([1.0, 2.0, 3.0])], [1.0])
    a = tensor_signal(pop, scheme)
    B = sh.design_matrix(scheme.directions, 8)
    oracle = np.linalg.solve(B.T @ B, B.T @ a)
    fit = sh.fit_sh(a, scheme.directions, 8).coeffs
    assert np.linalg.norm(B @ fit - a) == pytest.approx(np.linalg.norm(B @ oracle - a), abs=1e-10)
    np.testing.assert_allclose(fit, oracle, atol=1e-10)


def test_fit_regularised_matches_normal_equations(scheme, rng):
    a = rng.random(100)
    B = sh.design_matrix(scheme.directions, 8)
    lb = np.diag(sh.laplace_beltrami(8))
    oracle = np.linalg.solve(B.T @ B + 0.006 * lb @ lb, B.T @ a)
    np.testing.assert_allclose(sh.fit_sh(a, scheme.directions, 8, 0.006).coeffs, oracle, atol=1e-10)


def test_fit_singular():
    # 45 directions on one great circle cannot separate order-8 harmonics
    t = np.linspace(0, np.pi, 45, endpoint=False)
    dirs = np.column_stack([np.cos(t), np.sin(t), np.zeros_like(t)])
    with pytest.raises(SingularFit):
        sh.fit_sh(np.ones(45), dirs, 8)


def test_evaluate_constant(rng):
    c = np.zeros(45)
    c[0] = 1.0
    np.testing.assert_allclose(sh.evaluate(c, random_unit(rng, 20)), Y00, atol=1e-15)


def test_evaluate_batch_shape(rng):
    c = rng.normal(size=(7, 66))
    assert sh.evaluate(c, random_unit(rng, 5)).shape == (7, 5)


def test_delta_sh():
    np.testing.assert_allclose(sh.delta_sh([0, 0, 1.0], 0).coeffs, [Y00], atol=1e-15)
    d = sh.delta_sh([0, 0, 1.0], 10).coeffs
    m = sh.orders_m(10)
    assert np.abs(d[m != 0]).max() < 1e-15
    u = sh.normalize([0.3, -0.5, 0.8])
    np.testing.assert_allclose(sh.delta_sh(u, 10).coeffs, sh.delta_sh(-u, 10).coeffs, atol=1e-14)
    pole = sh.evaluate(sh.delta_sh([0, 0, 1.0], 10), [[0, 0, 1.0]])
    equator = sh.evaluate(sh.delta_sh([0, 0, 1.0], 10), [[1.0, 0, 0]])
    assert pole[0] > equator[0]


def test_parseval(rng):
    pts = sh.fibonacci_sphere(10000, hemisphere=False)
    for _ in range(5):
        c = rng.normal(size=45)
        mean_sq = np.mean(sh.evaluate(c, pts) ** 2)
        assert mean_sq == pytest.approx(c @ c / (4 * np.pi), rel=0.01)


def test_shcoeffs_validation():
    with pytest.raises(InvalidOrder):
        sh.SHCoeffs(8, np.zeros(44))
    assert sh.SHCoeffs.from_array(np.zeros(66)).order == 10
    assert sh.SHCoeffs(8, np.ones(45)).padded(10).coeffs[45:].sum() == 0


def test_fibonacci_scheme_angles(scheme):
    d = scheme.directions
    cos = np.clip(d @ d.T - 2 * np.eye(len(d)), -1, 1)
    assert np.degrees(np.arccos(cos.max())) > 10.0


def test_peak_directions_single():
    u = sh.normalize([1.0, 1.0, 0.3])
    peaks, _ = sh.peak_directions(sh.delta_sh(u, 10))
    assert sh.axial_angle_deg(peaks[0], u) < 3.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 6, 8]))
def test_round_trip_property(seed, order):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=sh.num_coeffs(order))
    dirs = sh.fibonacci_sphere(100)
    fit = sh.fit_sh(sh.evaluate(c, dirs), dirs, order)
    assert np.abs(fit.coeffs - c).max() < 1e-8
