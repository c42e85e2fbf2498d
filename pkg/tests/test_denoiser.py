import numpy as np
import pytest

from gscrank.denoiser import DenoiserParams, compute_tau, denoise_image, tau_for_image
from gscrank.imaging import psnr
from gscrank.patches import GroupGeometry, count_groups
from gscrank.shrinkage import RelaxationSpec

GEOM = GroupGeometry(patch_side=6, group_size=16, window=10, stride=3)


def piecewise_constant(h=48, w=48):
    img = np.full((h, w), 60.0)
    img[:, w // 2:] = 180.0
    img[h // 3: 2 * h // 3, w // 4: 3 * w // 4] = 120.0
    return img


def test_compute_tau_example():
    geom = GroupGeometry(patch_side=6, group_size=60)
    assert compute_tau(0.1, 0.01, 1, geom, 65536) == pytest.approx(0.1 * 2160 / (0.01 * 65536))
    assert compute_tau(0.1, 0.01, 1, geom, 65536) == pytest.approx(0.32959, abs=1e-5)
    assert compute_tau(0.0, 0.01, 5, geom, 100) == 0.0
    assert compute_tau(1.0, 0.02, 5, geom, 100) == pytest.approx(
        compute_tau(1.0, 0.01, 5, geom, 100) / 2)
    with pytest.raises(ValueError):
        compute_tau(1.0, 0.0, 5, geom, 100)
    with pytest.raises(ValueError):
        compute_tau(1.0, 1.0, 5, geom, 0)


def test_tau_for_image_counts_groups():
    g = GroupGeometry()
    expected = compute_tau(0.15, 0.01, count_groups(256, 256, g), g, 256 * 256)
    assert tau_for_image(0.15, 0.01, (256, 256), g) == expected
    assert tau_for_image(0.15, 0.01, (256, 256, 3), g) == expected


def test_zero_tau_is_identity():
    img = np.random.default_rng(0).uniform(0, 255, (40, 37))
    x, spectra = denoise_image(img, DenoiserParams(GEOM, RelaxationSpec.from_p(0.5), tau=0.0))
    assert np.abs(x - img).max() <= 1e-10
    assert spectra[0].shape == (count_groups(40, 37, GEOM), 16)


def test_constant_image_preserved():
    # rank-one groups keep their leading value; the nonconvex penalty leaves only a
    # bias of order tau / sqrt(sigma_1) on it
    img = np.full((36, 36), 93.0)
    x, _ = denoise_image(img, DenoiserParams(GEOM, RelaxationSpec.from_p(0.5), tau=5.0))
    np.testing.assert_allclose(x, img, atol=1e-3)
    x, _ = denoise_image(img, DenoiserParams(GEOM, RelaxationSpec.from_p(0.5), tau=0.0))
    np.testing.assert_allclose(x, img, atol=1e-10)


# tau large enough to clear the noise spectrum of 36x16 groups at sigma = 20
@pytest.mark.parametrize("p,tau", [(0.5, 1500.0), (2 / 3, 700.0), (1.0, 150.0)])
def test_noise_reduction(p, tau):
    clean = piecewise_constant()
    noisy = clean + 20 * np.random.default_rng(1).standard_normal(clean.shape)
    params = DenoiserParams(GEOM, RelaxationSpec.from_p(p), tau=tau)
    x, _ = denoise_image(noisy, params)
    assert psnr(x, clean) > psnr(noisy, clean) + 3


def test_threads_bit_identical(monkeypatch):
    import gscrank.denoiser as dn
    monkeypatch.setattr(dn, "_CHUNK", 7)
    noisy = piecewise_constant() + 10 * np.random.default_rng(2).standard_normal((48, 48))
    params = DenoiserParams(GEOM, RelaxationSpec.from_p(0.5), tau=40.0)
    a, _ = denoise_image(noisy, params, threads=1)
    b, _ = denoise_image(noisy, params, threads=3)
    assert np.array_equal(a, b)


def test_color_channels_independent():
    rng = np.random.default_rng(3)
    img = rng.uniform(0, 255, (30, 30, 3))
    params = DenoiserParams(GEOM, RelaxationSpec.from_p(0.5), tau=30.0)
    x, spectra = denoise_image(img, params)
    assert x.shape == img.shape and len(spectra) == 3
    x1, _ = denoise_image(img[..., 1], params)
    np.testing.assert_array_equal(x[..., 1], x1)


def test_rejects_non_finite_and_bad_params():
    img = np.zeros((20, 20))
    img[3, 3] = np.inf
    with pytest.raises(ValueError):
        denoise_image(img, DenoiserParams(GEOM))
    with pytest.raises(ValueError):
        DenoiserParams(GEOM, tau=-1.0)
    with pytest.raises(ValueError):
        DenoiserParams(GEOM, inner_iters=0)
