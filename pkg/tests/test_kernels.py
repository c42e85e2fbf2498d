"""Compiled and numpy kernels must agree."""

import numpy as np
import pytest

from gscrank import kernels

py = kernels.python_kernels
cy = kernels.compiled_kernels
needs_compiled = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@needs_compiled
@pytest.mark.parametrize("shape,p,radius,c", [((64, 64), 8, 10, 60), ((31, 45), 6, 4, 30),
                                              ((12, 12), 8, 10, 20)])
def test_block_match_parity(shape, p, radius, c):
    rng = np.random.default_rng(0)
    img = np.round(rng.uniform(0, 255, shape))
    refs = np.array([(r, cc) for r in range(0, shape[0] - p + 1, 3)
                     for cc in range(0, shape[1] - p + 1, 3)])
    oa, da, pa = py.block_match(img, refs, p, radius, c)
    ob, db, pb = cy.block_match(img, refs, p, radius, c)
    np.testing.assert_array_equal(oa, ob)
    np.testing.assert_array_equal(pa, pb)
    np.testing.assert_allclose(da, db, rtol=0, atol=1e-8)


@needs_compiled
def test_aggregate_bit_identical():
    rng = np.random.default_rng(1)
    img = rng.uniform(0, 255, (40, 36))
    refs = np.array([(r, c) for r in range(0, 33, 4) for c in range(0, 29, 4)])
    origins, _, _ = py.block_match(img, refs, 8, 5, 15)
    vals = rng.standard_normal((len(refs), 64, 15))
    na, da = py.aggregate(vals, origins, 8, 40, 36)
    nb, db = cy.aggregate(vals, origins, 8, 40, 36)
    assert np.array_equal(na, nb) and np.array_equal(da, db)


@needs_compiled
@pytest.mark.parametrize("extremal_only", [True, False])
def test_adaptive_median_parity(extremal_only):
    rng = np.random.default_rng(2)
    img = np.round(rng.uniform(20, 230, (50, 47)))
    idx = rng.choice(img.size, 900, replace=False)
    img.reshape(-1)[idx] = rng.integers(0, 2, 900) * 255.0
    fa, ma = py.adaptive_median(img, 11, extremal_only)
    fb, mb = cy.adaptive_median(img, 11, extremal_only)
    np.testing.assert_array_equal(ma, mb)
    np.testing.assert_array_equal(fa, fb)
