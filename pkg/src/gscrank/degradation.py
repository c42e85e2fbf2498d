"""Forward operators, blur kernels, noise synthesis and impulse detection.

Every operator exposes ``apply`` and ``adjoint`` and accepts ``(H, W)`` or
``(H, W, C)`` images; colour channels share one operator.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class MaskOperator:
    """Pixel selection. ``mask`` is True where a pixel is observed."""

    mask: np.ndarray
    kind: str = field(default="mask", init=False)

    def _m(self, x):
        m = np.asarray(self.mask, dtype=bool)
        return m[..., None] if x.ndim == m.ndim + 1 else m

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(self._m(x), x, 0.0)

    def adjoint(self, y):
        return self.apply(y)


def _otf(kernel, shape):
    """Transfer function of ``kernel`` centred at the origin on a periodic grid."""
    kh, kw = kernel.shape
    pad = np.zeros(shape)
    pad[:kh, :kw] = kernel
    pad = np.roll(pad, (-(kh // 2), -(kw // 2)), axis=(0, 1))
    return np.fft.fft2(pad)


@dataclass(frozen=True)
class BlurOperator:
    """Circular 2-D convolution with a normalized kernel."""

    kernel: np.ndarray
    kind: str = field(default="blur", init=False)

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float64)
        if k.ndim != 2:
            raise ValueError("blur kernel must be 2-D")
        if not np.isclose(k.sum(), 1.0, atol=1e-9):
            raise ValueError(f"blur kernel must sum to 1, got {k.sum()}")

    def transfer(self, shape):
        kh, kw = np.shape(self.kernel)
        if kh > shape[0] or kw > shape[1]:
            raise ValueError("kernel larger than image")
        return _otf(np.asarray(self.kernel, dtype=np.float64), shape[:2])

    def _filter(self, x, conj):
        x = np.asarray(x, dtype=np.float64)
        K = self.transfer(x.shape)
        if conj:
            K = np.conj(K)
        if x.ndim == 3:
            K = K[..., None]
        return np.real(np.fft.ifft2(np.fft.fft2(x, axes=(0, 1)) * K, axes=(0, 1)))

    def apply(self, x):
        return self._filter(x, conj=False)

    def adjoint(self, y):
        return self._filter(y, conj=True)


@dataclass(frozen=True)
class BlockCSOperator:
    """Block-wise random projection with one shared matrix.

    Images whose sides are not multiples of ``block_side`` are zero-padded
    before projection and cropped after the adjoint. Blocks are vectorized
    column-major and ordered row-major over the block grid. Measurements have
    shape ``(n_blocks, M)`` or ``(n_blocks, M, C)``.
    """

    block_side: int
    subrate: float
    seed: int
    image_shape: tuple
    matrix: np.ndarray = field(repr=False, compare=False)
    kind: str = field(default="cs", init=False)

    @property
    def n_measurements(self):
        return self.matrix.shape[0]

    def _grid(self):
        b = self.block_side
        h, w = self.image_shape[:2]
        return -(-h // b), -(-w // b)

    def _check(self, x):
        if x.shape[:2] != tuple(self.image_shape[:2]):
            raise ValueError(f"operator built for {self.image_shape[:2]}, got {x.shape[:2]}")

    def _to_blocks(self, x):
        b = self.block_side
        nr, nc = self._grid()
        h, w = x.shape[:2]
        extra = x.shape[2:]
        pad = np.zeros((nr * b, nc * b) + extra)
        pad[:h, :w] = x
        blocks = pad.reshape(nr, b, nc, b, *extra).swapaxes(1, 2)  # (nr, nc, b_i, b_j, ...)
        blocks = blocks.swapaxes(2, 3)  # column-major: j before i
        return blocks.reshape(nr * nc, b * b, *extra)

    def _from_blocks(self, v):
        b = self.block_side
        nr, nc = self._grid()
        h, w = self.image_shape[:2]
        extra = v.shape[2:]
        blocks = v.reshape(nr, nc, b, b, *extra).swapaxes(2, 3).swapaxes(1, 2)
        return blocks.reshape(nr * b, nc * b, *extra)[:h, :w].copy()

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        return np.einsum("mb,nb...->nm...", self.matrix, self._to_blocks(x))

    def adjoint(self, y):
        y = np.asarray(y, dtype=np.float64)
        return self._from_blocks(np.einsum("mb,nm...->nb...", self.matrix, y))

    def to_dict(self):
        return {"block_side": self.block_side, "subrate": self.subrate,
                "seed": self.seed, "image_shape": list(self.image_shape)}

    @classmethod
    def from_dict(cls, d):
        return make_block_cs_operator(d["block_side"], d["subrate"], d["seed"],
                                      tuple(d["image_shape"]))


def make_block_cs_operator(block_side=32, subrate=0.3, seed=0, image_shape=(256, 256)):
    if not 0.0 < subrate <= 1.0:
        raise ValueError(f"subrate must lie in (0, 1], got {subrate}")
    B = block_side * block_side
    M = int(round(subrate * B))
    if M == 0:
        raise ValueError("subrate too small: zero measurements per block")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((B, M)))
    return BlockCSOperator(block_side, float(subrate), int(seed), tuple(image_shape),
                           np.ascontiguousarray(q.T))


def make_uniform_kernel(side=9):
    if side < 1 or side % 2 == 0:
        raise ValueError("uniform kernel side must be a positive odd integer")
    return np.full((side, side), 1.0 / (side * side))


def make_gaussian_kernel(side=25, sigma=1.6):
    """Sampled isotropic Gaussian; entries below eps times the peak are dropped."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if side < 1 or side % 2 == 0:
        raise ValueError("gaussian kernel side must be a positive odd integer")
    r = np.arange(side) - (side - 1) / 2.0
    h = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * sigma * sigma))
    h[h < _EPS * h.max()] = 0.0
    return h / h.sum()


def make_motion_kernel(length=20, angle_degrees=45.0):
    """Anti-aliased line segment, built the way the usual ``motion`` generator does.

    One quadrant of perpendicular-distance weights is computed, mirrored
    through the centre, normalized and flipped so the angle is measured
    counter-clockwise from the horizontal.
    """
    length = max(1.0, float(length))
    half = (length - 1.0) / 2.0
    phi = np.mod(angle_degrees, 180.0) / 180.0 * np.pi
    cphi, sphi = np.cos(phi), np.sin(phi)
    xsign = np.sign(cphi) or 1.0
    width = 1.0
    sx = np.fix(half * cphi + width * xsign - length * _EPS)
    sy = np.fix(half * sphi + width - length * _EPS)
    xs = np.arange(0.0, sx + xsign * 0.5, xsign) if xsign > 0 else np.arange(0.0, sx - 0.5, -1.0)
    ys = np.arange(0.0, sy + 0.5)
    x, y = np.meshgrid(xs, ys)
    dist = y * cphi - x * sphi
    rad = np.sqrt(x * x + y * y)
    last = (rad >= half) & (np.abs(dist) <= width)
    x2last = half - np.abs((x[last] + dist[last] * sphi) / cphi)
    dist[last] = np.sqrt(dist[last] ** 2 + x2last ** 2)
    dist = width + _EPS - np.abs(dist)
    dist[dist < 0] = 0.0

    ny, nx = dist.shape
    h = np.zeros((2 * ny - 1, 2 * nx - 1))
    h[:ny, :nx] = np.rot90(dist, 2)
    h[ny - 1:, nx - 1:] = dist
    h = h / (h.sum() + _EPS * length * length)
    if cphi > 0:
        h = np.flipud(h)
    # the eps guard leaves the sum a hair below one
    return h / h.sum()


def make_random_mask(height, width, missing_fraction, seed=0):
    """Boolean mask with exactly ``round(fraction * H * W)`` missing pixels."""
    if not 0.0 <= missing_fraction < 1.0:
        raise ValueError("missing_fraction must lie in [0, 1)")
    n = height * width
    k = int(round(missing_fraction * n))
    rng = np.random.default_rng(seed)
    mask = np.ones(n, dtype=bool)
    mask[rng.choice(n, size=k, replace=False)] = False
    return mask.reshape(height, width)


def load_text_mask(path):
    """Mask image where 0 marks a missing pixel."""
    from .imaging import load_image
    img = load_image(path)
    if img.ndim == 3:
        img = img.max(axis=2)
    return img != 0


def add_gaussian_noise(image, sigma, seed=0):
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    image = np.asarray(image, dtype=np.float64)
    rng = np.random.default_rng(seed)
    return image + sigma * rng.standard_normal(image.shape)


def add_salt_pepper(image, density, seed=0):
    """Set ``round(density * N)`` distinct entries to 0 or 255 with equal odds."""
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    out = np.array(image, dtype=np.float64)
    flat = out.reshape(-1)
    k = int(round(density * flat.size))
    rng = np.random.default_rng(seed)
    idx = rng.choice(flat.size, size=k, replace=False)
    flat[idx] = 255.0 * rng.integers(0, 2, size=k)
    return out


def adaptive_median_filter(image, max_window=39, extremal_only=True):
    """Adaptive median filter.

    Returns ``(filtered, impulse)``. The window grows from 3x3 until its
    median lies strictly between its min and max; the pixel is an impulse if
    its own value does not. With ``extremal_only`` only values 0 and 255 can
    be flagged. A pixel whose window never settles is flagged iff it is 0 or
    255.
    """
    if max_window < 3 or max_window % 2 == 0:
        raise ValueError("max_window must be an odd integer >= 3")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        parts = [kernels.adaptive_median(np.ascontiguousarray(image[..., c]), max_window,
                                         extremal_only)
                 for c in range(image.shape[2])]
        return (np.stack([f for f, _ in parts], axis=-1),
                np.stack([m for _, m in parts], axis=-1))
    return kernels.adaptive_median(np.ascontiguousarray(image), max_window, extremal_only)
