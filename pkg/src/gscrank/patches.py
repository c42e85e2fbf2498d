"""Nonlocal patch grouping: reference grid, block matching, aggregation.

Patches are vectorized column-major: entry ``k`` of a column holds pixel
``(k % side, k // side)`` of the patch. Group matrices therefore have shape
``(side**2, group_size)``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass(frozen=True)
class GroupGeometry:
    """Grouping layout.

    ``window`` is the side L of the search window; candidates lie within
    ``window // 2`` pixels of the reference origin along each axis.
    """

    patch_side: int = 8
    group_size: int = 60
    window: int = 20
    stride: int = 4

    def __post_init__(self):
        if self.patch_side < 1:
            raise ValueError("patch_side must be >= 1")
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if self.window < 0:
            raise ValueError("window must be >= 0")
        if not 1 <= self.stride <= self.patch_side:
            # a wider stride leaves pixels that no reference patch covers
            raise ValueError("stride must lie in [1, patch_side]")

    @property
    def patch_dim(self):
        return self.patch_side * self.patch_side

    @property
    def search_radius(self):
        return self.window // 2


@dataclass
class PatchGroup:
    data: np.ndarray
    origins: np.ndarray
    distances: np.ndarray = field(default=None)
    reference_index: int = 0
    padded: bool = False


@dataclass
class GroupStack:
    """All groups of one image, stacked for batched linear algebra."""

    data: np.ndarray  # (n, B_s, c)
    origins: np.ndarray  # (n, c, 2)
    distances: np.ndarray  # (n, c)
    padded: np.ndarray  # (n,)
    patch_side: int

    def __len__(self):
        return self.data.shape[0]

    def groups(self):
        return [
            PatchGroup(self.data[g], self.origins[g], self.distances[g],
                       padded=bool(self.padded[g]))
            for g in range(len(self))
        ]


def _axis_positions(length, side, stride):
    pos = list(range(0, length - side + 1, stride))
    if pos[-1] != length - side:
        pos.append(length - side)
    return pos


def extract_reference_positions(image_height, image_width, geom):
    """Reference origins on a stride grid, last row/column snapped to the border."""
    side = geom.patch_side
    if image_height < side or image_width < side:
        raise ValueError(
            f"image {image_height}x{image_width} is smaller than one {side}x{side} patch")
    rows = _axis_positions(image_height, side, geom.stride)
    cols = _axis_positions(image_width, side, geom.stride)
    return [(r, c) for r in rows for c in cols]


def count_groups(image_height, image_width, geom):
    return len(extract_reference_positions(image_height, image_width, geom))


def gather_patches(image, origins, patch_side):
    """Stack patches at ``origins`` (shape ``(..., c, 2)``) into ``(..., B_s, c)``."""
    p = patch_side
    windows = np.lib.stride_tricks.sliding_window_view(image, (p, p))
    picked = windows[origins[..., 0], origins[..., 1]]  # (..., c, p, p)
    # column-major vectorization: swap the in-patch axes before flattening
    vecs = np.swapaxes(picked, -1, -2).reshape(*picked.shape[:-2], p * p)
    return np.swapaxes(vecs, -1, -2)


def block_match(image, ref_pos, geom):
    image = np.asarray(image, dtype=np.float64)
    r, c = ref_pos
    h, w = image.shape
    if not (0 <= r <= h - geom.patch_side and 0 <= c <= w - geom.patch_side):
        raise ValueError(f"reference origin {ref_pos} is not a valid patch origin")
    stack = build_groups(image, geom, positions=[ref_pos])
    return stack.groups()[0]


def build_groups(image, geom, positions=None):
    """Block-match every reference position and stack the groups."""
    image = np.ascontiguousarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("grouping works on single-channel images")
    if positions is None:
        positions = extract_reference_positions(*image.shape, geom)
    refs = np.asarray(positions, dtype=np.int64).reshape(-1, 2)
    origins, distances, padded = kernels.block_match(
        image, refs, geom.patch_side, geom.search_radius, geom.group_size)
    data = gather_patches(image, origins, geom.patch_side)
    return GroupStack(data, origins, distances, padded, geom.patch_side)


def aggregate_stack(data, origins, patch_side, image_height, image_width):
    num, den = kernels.aggregate(np.ascontiguousarray(data), origins, patch_side,
                                 image_height, image_width)
    if (den == 0).any():
        missing = int((den == 0).sum())
        raise ValueError(f"{missing} pixels are not covered by any group; broken geometry")
    return num / den


def aggregate_groups(groups, image_height, image_width):
    """Average all group columns back into an image.

    ``groups`` is a sequence of :class:`PatchGroup` or a :class:`GroupStack`.
    """
    if isinstance(groups, GroupStack):
        return aggregate_stack(groups.data, groups.origins, groups.patch_side,
                               image_height, image_width)
    groups = list(groups)
    if not groups:
        raise ValueError("no groups to aggregate")
    side = int(round(np.sqrt(groups[0].data.shape[0])))
    data = np.stack([g.data for g in groups])
    origins = np.stack([np.asarray(g.origins, dtype=np.int64) for g in groups])
    return aggregate_stack(data, origins, side, image_height, image_width)
