import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gscrank import imaging
from gscrank.imaging import (find_test_image, load_image, load_test_image, psnr, quantize,
                             save_image, to_gray)


def test_psnr_reference_values():
    a = np.zeros((8, 8))
    assert psnr(a, a) == math.inf
    assert psnr(a, np.full((8, 8), 255.0)) == pytest.approx(0.0)
    assert psnr(a, np.ones((8, 8))) == pytest.approx(48.1308036, abs=1e-6)
    with pytest.raises(ValueError):
        psnr(a, np.zeros((8, 9)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_psnr_symmetric(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(0, 255, (2, 10, 10))
    assert psnr(x, y) == psnr(y, x)


def test_psnr_decreases_with_noise():
    rng = np.random.default_rng(0)
    img = rng.uniform(0, 255, (64, 64))
    means = []
    for sigma in (2, 5, 10, 20, 40):
        vals = [psnr(img + sigma * np.random.default_rng(s).standard_normal(img.shape), img)
                for s in range(5)]
        means.append(np.mean(vals))
    assert np.all(np.diff(means) < 0)


def test_quantize_clamps_and_rounds_half_even():
    np.testing.assert_array_equal(quantize([300.0, -4.0, 2.5, 3.5, 7.49]), [255, 0, 2, 4, 7])


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_gray_round_trip(tmp_path, suffix):
    img = np.random.default_rng(0).integers(0, 256, (17, 23)).astype(float)
    save_image(img, tmp_path / f"x{suffix}")
    np.testing.assert_array_equal(load_image(tmp_path / f"x{suffix}"), img)


@pytest.mark.parametrize("suffix", [".png", ".ppm"])
def test_color_round_trip(tmp_path, suffix):
    img = np.random.default_rng(1).integers(0, 256, (9, 11, 3)).astype(float)
    save_image(img, tmp_path / f"x{suffix}")
    np.testing.assert_array_equal(load_image(tmp_path / f"x{suffix}"), img)


def test_save_clamps(tmp_path):
    save_image(np.array([[300.0, -2.0]]), tmp_path / "c.png")
    np.testing.assert_array_equal(load_image(tmp_path / "c.png"), [[255.0, 0.0]])


def test_pgm_known_bytes(tmp_path):
    p = tmp_path / "k.pgm"
    p.write_bytes(b"P5\n3 2\n255\n" + bytes([0, 1, 2, 100, 200, 255]))
    np.testing.assert_array_equal(load_image(p), [[0, 1, 2], [100, 200, 255]])


def test_load_errors(tmp_path):
    with pytest.raises(ValueError, match="unsupported"):
        load_image(tmp_path / "x.gif")
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    with pytest.raises(ValueError, match="cannot read"):
        load_image(bad)


def test_to_gray():
    rgb = np.zeros((2, 2, 3))
    rgb[..., 1] = 100.0
    assert to_gray(rgb)[0, 0] == pytest.approx(58.7043074451121)
    g = np.ones((3, 3))
    assert to_gray(g) is g


def test_manifest_and_bundled_cameraman():
    manifest = imaging.load_manifest()
    assert {"cameraman", "house", "peppers"} <= set(manifest)
    img = load_test_image("cameraman")
    assert img.shape == (256, 256)
    assert img.min() >= 0 and img.max() <= 255


def test_image_dir_override(tmp_path, monkeypatch):
    img = np.full((256, 256), 7.0)
    save_image(img, tmp_path / "cameraman.png")
    monkeypatch.setenv(imaging.IMAGE_DIR_ENV, str(tmp_path))
    assert find_test_image("cameraman") == tmp_path / "cameraman.png"
    np.testing.assert_array_equal(load_test_image("cameraman"), img)


def test_missing_test_image_message(tmp_path, monkeypatch):
    monkeypatch.setenv(imaging.IMAGE_DIR_ENV, str(tmp_path))
    if any((tmp_path / f).exists() for f in imaging.load_manifest()["house"]["files"]):
        pytest.skip("house present")
    try:
        find_test_image("house")
    except FileNotFoundError as exc:
        assert imaging.IMAGE_DIR_ENV in str(exc)
    with pytest.raises(KeyError):
        find_test_image("lena")


def test_test_image_shape_checked(tmp_path, monkeypatch):
    save_image(np.zeros((10, 10)), tmp_path / "peppers.png")
    monkeypatch.setenv(imaging.IMAGE_DIR_ENV, str(tmp_path))
    with pytest.raises(ValueError, match="expected"):
        load_test_image("peppers")


def test_resolve_input(tmp_path):
    save_image(np.ones((5, 5)), tmp_path / "a.png")
    assert imaging.resolve_input(str(tmp_path / "a.png")).shape == (5, 5)
    assert imaging.resolve_input("@cameraman").shape == (256, 256)
