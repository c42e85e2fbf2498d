"""Image-level group sparse coding denoiser: group, shrink, aggregate."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .patches import GroupGeometry, aggregate_stack, build_groups, count_groups
from .shrinkage import RelaxationSpec, shrink_stack

_CHUNK = 512


@dataclass(frozen=True)
class DenoiserParams:
    """``tau`` is the per-group shrinkage weight passed to the scalar prox."""

    geom: GroupGeometry = field(default_factory=GroupGeometry)
    spec: RelaxationSpec = field(default_factory=RelaxationSpec)
    tau: float = 1.0
    inner_iters: int = 2

    def __post_init__(self):
        if not np.isfinite(self.tau) or self.tau < 0:
            raise ValueError(f"tau must be finite and >= 0, got {self.tau}")
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")


def compute_tau(lam, mu, n_groups, geom, n_pixels):
    """Shrinkage weight lam * K / (mu * N).

    K counts every group entry (``n_groups * group_size * patch_dim``) and N
    the pixels of one channel.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if n_pixels <= 0:
        raise ValueError("image has no pixels")
    k = n_groups * geom.group_size * geom.patch_dim
    return lam * k / (mu * n_pixels)


def tau_for_image(lam, mu, shape, geom):
    h, w = shape[:2]
    return compute_tau(lam, mu, count_groups(h, w, geom), geom, h * w)


def _shrink_chunks(data, params, threads):
    out = np.empty_like(data)
    spectra = np.empty((data.shape[0], min(data.shape[1:])))
    bounds = [(i, min(i + _CHUNK, len(data))) for i in range(0, len(data), _CHUNK)]

    # chunks write disjoint slices, so the result does not depend on scheduling
    def work(b):
        lo, hi = b
        out[lo:hi], spectra[lo:hi] = shrink_stack(
            data[lo:hi], params.tau, params.spec, params.inner_iters)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, bounds))
    else:
        for b in bounds:
            work(b)
    return out, spectra


def denoise_channel(channel, params, threads=1):
    """Returns the denoised channel and the shrunk spectra, one row per group."""
    h, w = channel.shape
    stack = build_groups(channel, params.geom)
    shrunk, spectra = _shrink_chunks(stack.data, params, threads)
    return aggregate_stack(shrunk, stack.origins, params.geom.patch_side, h, w), spectra


def denoise_image(image, params, threads=1):
    """Denoise a 2-D image, or each channel of an ``(H, W, C)`` image.

    Groups are re-matched on ``image`` on every call. Returns ``(X, spectra)``
    where ``spectra`` holds one ``(n_groups, min(B_s, c))`` array per channel.
    """
    image = np.asarray(image, dtype=np.float64)
    if not np.all(np.isfinite(image)):
        raise ValueError("non-finite values in denoiser input")
    if image.ndim == 2:
        x, spec = denoise_channel(image, params, threads)
        return x, [spec]
    if image.ndim == 3:
        parts = [denoise_channel(image[..., ch], params, threads)
                 for ch in range(image.shape[2])]
        return np.stack([x for x, _ in parts], axis=-1), [s for _, s in parts]
    raise ValueError(f"expected a 2-D or 3-D image, got shape {image.shape}")
