"""Pure numpy implementations of the hot loops.

These mirror ``_ckernels.pyx`` argument for argument and are used when the
compiled module is unavailable or ``GSCRANK_KERNELS=python`` is set.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage


def window_offsets(radius):
    """Candidate offsets of the search window in row-major scan order."""
    span = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    return np.stack([dy.ravel(), dx.ravel()], axis=1)


def block_match(image, refs, patch_side, radius, group_size):
    """Select the ``group_size`` closest patches for every reference origin.

    Returns ``(origins, distances, padded)`` with shapes ``(n, c, 2)``,
    ``(n, c)`` and ``(n,)``. Column 0 is always the reference itself.
    """
    image = np.ascontiguousarray(image, dtype=np.float64)
    refs = np.asarray(refs, dtype=np.int64).reshape(-1, 2)
    p = patch_side
    n_rows = image.shape[0] - p + 1
    n_cols = image.shape[1] - p + 1
    patches = sliding_window_view(image, (p, p))
    ref_patches = patches[refs[:, 0], refs[:, 1]]

    offsets = window_offsets(radius)
    n = refs.shape[0]
    dist = np.full((n, offsets.shape[0]), np.inf)
    for k, (dy, dx) in enumerate(offsets):
        rr = refs[:, 0] + dy
        cc = refs[:, 1] + dx
        ok = (rr >= 0) & (rr < n_rows) & (cc >= 0) & (cc < n_cols)
        if not ok.any():
            continue
        diff = patches[rr[ok], cc[ok]] - ref_patches[ok]
        dist[ok, k] = np.einsum("nij,nij->n", diff, diff)

    center = offsets.shape[0] // 2
    dist[:, center] = -1.0
    order = np.argsort(dist, axis=1, kind="stable")
    n_valid = np.isfinite(dist).sum(axis=1)
    padded = n_valid < group_size
    if padded.any():
        cols = np.arange(group_size)
        full = np.empty((n, group_size), dtype=order.dtype)
        keep = ~padded
        full[keep] = order[keep, :group_size]
        for g in np.flatnonzero(padded):
            full[g] = order[g, cols % n_valid[g]]
        order = full
    else:
        order = order[:, :group_size]

    distances = np.take_along_axis(dist, order, axis=1)
    distances[distances < 0] = 0.0
    origins = refs[:, None, :] + offsets[order]
    return origins, distances, padded


def aggregate(values, origins, patch_side, height, width):
    """Scatter-add group columns back into numerator/count buffers.

    ``values`` has shape ``(n, B_s, c)`` with column-major patch
    vectorization. Accumulation order is (group, pixel, column).
    """
    values = np.asarray(values, dtype=np.float64)
    origins = np.asarray(origins, dtype=np.int64)
    p = patch_side
    k = np.arange(p * p)
    di = k % p
    dj = k // p
    flat = ((origins[:, None, :, 0] + di[None, :, None]) * width
            + origins[:, None, :, 1] + dj[None, :, None])
    flat = flat.ravel()
    num = np.bincount(flat, weights=values.ravel(), minlength=height * width)
    den = np.bincount(flat, minlength=height * width).astype(np.float64)
    return num.reshape(height, width), den.reshape(height, width)


def adaptive_median(image, max_window, extremal_only=True):
    """Adaptive median filter with symmetric border padding.

    Returns ``(filtered, impulse)``; ``impulse`` is True on flagged pixels.
    """
    image = np.asarray(image, dtype=np.float64)
    filtered = image.copy()
    impulse = np.zeros(image.shape, dtype=bool)
    unresolved = np.ones(image.shape, dtype=bool)
    extremal = (image == 0.0) | (image == 255.0)
    med = image
    for size in range(3, max_window + 1, 2):
        lo = ndimage.minimum_filter(image, size=size, mode="reflect")
        hi = ndimage.maximum_filter(image, size=size, mode="reflect")
        med = ndimage.median_filter(image, size=size, mode="reflect")
        settled = unresolved & (lo < med) & (med < hi)
        hit = settled & ~((lo < image) & (image < hi))
        if extremal_only:
            hit &= extremal
        impulse |= hit
        filtered[hit] = med[hit]
        unresolved &= ~settled
        if not unresolved.any():
            return filtered, impulse
    hit = unresolved & extremal
    impulse |= hit
    filtered[hit] = med[hit]
    return filtered, impulse
