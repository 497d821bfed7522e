import numpy as np
import pytest

from fodwb import _backend, _kernels_py, sh

from conftest import random_unit

try:
    from fodwb import _kernels
except ImportError:
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")


@needs_ext
@pytest.mark.parametrize("order", [0, 2, 8, 10])
def test_basis_compiled_matches_fallback(order, rng):
    d = random_unit(rng, 300)
    d[0] = [0, 0, 1.0]
    d[1] = [0, 0, -1.0]
    np.testing.assert_allclose(_kernels.real_sh_basis(d, order), _kernels_py.real_sh_basis(d, order), atol=1e-13)


@needs_ext
def test_signed_rank_counts_compiled_matches_fallback(rng):
    ranks2 = rng.integers(1, 40, size=20).astype(np.int64)
    np.testing.assert_array_equal(_kernels.signed_rank_counts(ranks2), _kernels_py.signed_rank_counts(ranks2))


def test_signed_rank_counts_total():
    counts = _kernels_py.signed_rank_counts(np.array([2, 4, 6, 8, 10]))
    assert counts.sum() == 2**5
    assert counts[30] == 1 and counts[0] == 1


def test_backend_exports():
    assert _backend.real_sh_basis is not None
    assert isinstance(_backend.COMPILED, bool)
    assert sh.design_matrix([[0, 0, 1.0]], 2, min_rows=False).shape == (1, 6)
