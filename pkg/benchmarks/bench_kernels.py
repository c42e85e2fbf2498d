"""Compare the compiled and numpy kernels on a 256x256 image.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--side 256]

Prints one line per kernel with the best wall time of each backend, the
speedup, and whether the outputs agree.
"""

import argparse
import time

import numpy as np

from gscrank import _pykernels
from gscrank.degradation import add_salt_pepper
from gscrank.patches import GroupGeometry, extract_reference_positions

try:
    from gscrank import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def best_time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def cases(side):
    rng = np.random.default_rng(0)
    y, x = np.mgrid[0:side, 0:side]
    image = np.round(128 + 60 * np.sin(x / 9.0) + 40 * np.cos(y / 13.0)
                     + 5 * rng.standard_normal((side, side)))
    geom = GroupGeometry()
    refs = np.asarray(extract_reference_positions(side, side, geom))
    r = geom.search_radius

    def match(mod):
        return lambda: mod.block_match(image, refs, geom.patch_side, r, geom.group_size)

    origins, _, _ = _pykernels.block_match(image, refs, geom.patch_side, r, geom.group_size)
    values = rng.standard_normal((origins.shape[0], geom.patch_dim, geom.group_size))

    def agg(mod):
        return lambda: mod.aggregate(values, origins, geom.patch_side, side, side)

    noisy = add_salt_pepper(np.clip(image, 0, 255), 0.3, seed=1)

    def amf(mod):
        return lambda: mod.adaptive_median(noisy, 39, True)

    return [("block_match", match), ("aggregate", agg), ("adaptive_median", amf)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--side", type=int, default=256)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation`")
        return 1
    print(f"{'kernel':<16}{'cython s':>10}{'python s':>10}{'speedup':>9}  match")
    for name, make in cases(args.side):
        tc, oc = best_time(make(_ckernels), args.repeat)
        tp, op = best_time(make(_pykernels), args.repeat)
        print(f"{name:<16}{tc:>10.3f}{tp:>10.3f}{tp / tc:>8.1f}x  {same(oc, op)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
