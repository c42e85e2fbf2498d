"""Image I/O, PSNR and the bundled test-image manifest."""

import json
import math
import os
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_DIR_ENV = "GSCRANK_IMAGE_DIR"
_SUFFIXES = {".png", ".pgm", ".ppm", ".pnm", ".tif", ".tiff", ".bmp"}
# luma weights of ITU-R BT.601
_LUMA = np.array([0.298936021293775, 0.587043074451121, 0.114020904255103])


def load_image(path):
    """Read an 8-bit grayscale or RGB image as float64 ``(H, W)`` or ``(H, W, 3)``."""
    path = Path(path)
    if path.suffix.lower() not in _SUFFIXES:
        raise ValueError(f"unsupported image format: {path.suffix!r}")
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "RGB"):
                pass
            elif im.mode in ("1", "P", "LA"):
                im = im.convert("RGB" if im.mode == "P" else "L")
            elif im.mode in ("RGBA", "CMYK", "YCbCr"):
                im = im.convert("RGB")
            else:
                raise ValueError(f"{path}: only 8-bit images are supported (mode {im.mode})")
            arr = np.asarray(im, dtype=np.float64)
    except OSError as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    if arr.ndim == 3 and np.array_equal(arr[..., 0], arr[..., 1]) \
            and np.array_equal(arr[..., 0], arr[..., 2]) and path.suffix.lower() != ".ppm":
        arr = arr[..., 0].copy()
    return arr


def quantize(image):
    """Clamp to [0, 255] and round half-to-even."""
    return np.rint(np.clip(np.asarray(image, dtype=np.float64), 0.0, 255.0))


def save_image(image, path):
    img = quantize(image).astype(np.uint8)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img).save(path)


def to_gray(image):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    return image[..., :3] @ _LUMA


def psnr(x, reference, peak=255.0):
    """PSNR in dB over all pixels and channels; identical inputs give ``math.inf``.

    Inputs are compared as given; pass ``quantize(x)`` to score an 8-bit output.
    """
    x = np.asarray(x, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if x.shape != reference.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {reference.shape}")
    mse = np.mean((x - reference) ** 2)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def load_manifest():
    text = resources.files("gscrank").joinpath("data/images/manifest.json").read_text()
    return json.loads(text)["images"]


def _candidate_dirs():
    dirs = []
    env = os.environ.get(IMAGE_DIR_ENV)
    if env:
        dirs.append(Path(env))
    dirs.append(Path(str(resources.files("gscrank").joinpath("data/images"))))
    return dirs


def find_test_image(name):
    """Path of a manifest image, searching ``$GSCRANK_IMAGE_DIR`` first."""
    manifest = load_manifest()
    if name not in manifest:
        raise KeyError(f"unknown test image {name!r}; known: {sorted(manifest)}")
    for d in _candidate_dirs():
        for fname in manifest[name]["files"]:
            p = d / fname
            if p.is_file():
                return p
    raise FileNotFoundError(
        f"test image {name!r} not found (tried {manifest[name]['files']}); "
        f"place it in a directory and set {IMAGE_DIR_ENV}")


def load_test_image(name):
    """Load a manifest image and check its dimensions.

    An RGB file is converted to grayscale when the manifest expects one channel.
    """
    expected = tuple(load_manifest()[name]["shape"])
    img = load_image(find_test_image(name))
    if len(expected) == 2 and img.ndim == 3:
        img = np.rint(to_gray(img))
    if len(expected) == 3 and img.ndim == 2:
        img = np.repeat(img[..., None], expected[2], axis=2)
    if img.shape != expected:
        raise ValueError(f"test image {name!r} has shape {img.shape}, expected {expected}")
    return img


def resolve_input(spec):
    """``@name`` selects a manifest image; anything else is a file path."""
    if isinstance(spec, str) and spec.startswith("@"):
        return load_test_image(spec[1:])
    return load_image(spec)
