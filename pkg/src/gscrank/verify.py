"""Self-checks: brute-force prox oracle, SVT, monotonicity, round trips, adjoints.

``run_all`` returns a list of :class:`Check`; ``main`` prints them as a table
and exits nonzero on any failure.
"""

import sys
import time
from dataclasses import dataclass

import numpy as np

from . import kernels, shrinkage
from .degradation import (BlurOperator, MaskOperator, make_block_cs_operator,
                          make_gaussian_kernel, make_motion_kernel, make_random_mask)
from .patches import GroupGeometry, aggregate_groups, build_groups
from .shrinkage import Family, RelaxationSpec

ORACLE_XI = (0.05, 0.3, 1.0, 2.5)
ORACLE_DELTA = np.linspace(0.0, 8.0, 200)
ORACLE_SPECS = {
    "p=1/2": RelaxationSpec(Family.SCHATTEN_P, 0.5),
    "p=2/3": RelaxationSpec(Family.SCHATTEN_P, 2.0 / 3.0),
    "nuclear": RelaxationSpec(Family.NUCLEAR, 1.0),
}


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    seconds: float = 0.0


def grid_prox_oracle(xi, delta, p, coarse=1e-3, fine=1e-5):
    """argmin over s >= 0 of 1/2 (s - delta)^2 + xi s^p by exhaustive search.

    Every local minimum of a ``coarse`` grid on [0, delta] (s = 0 included)
    is refined on a ``fine`` grid; the best refined point wins. The minimizer
    never exceeds ``delta`` because the penalty is nondecreasing.
    """
    if delta <= 0:
        return 0.0
    f = lambda s: 0.5 * (s - delta) ** 2 + xi * s ** p
    s = np.arange(0.0, delta + coarse, coarse)
    v = f(s)
    interior = np.flatnonzero((v[1:-1] <= v[:-2]) & (v[1:-1] <= v[2:])) + 1
    cands = [0.0]
    for i in list(interior) + ([len(s) - 1] if v[-1] <= v[-2] else []):
        lo = max(0.0, s[i] - coarse)
        grid = np.arange(lo, s[i] + coarse + fine / 2, fine)
        cands.append(grid[np.argmin(f(grid))])
    cands = np.asarray(cands)
    return float(cands[np.argmin(f(cands))])


def prox_oracle_errors(spec, xis=ORACLE_XI, deltas=ORACLE_DELTA):
    """Largest |closed form - oracle| over the grid of (xi, delta)."""
    worst = 0.0
    for xi in xis:
        got = shrinkage.scalar_prox(spec, xi, deltas)
        ref = np.array([grid_prox_oracle(xi, d, spec.exponent) for d in deltas])
        worst = max(worst, float(np.abs(got - ref).max()))
    return worst


def check_prox_oracle(tol=1e-4):
    out = []
    for label, spec in ORACLE_SPECS.items():
        t = time.perf_counter()
        err = prox_oracle_errors(spec)
        out.append(Check(f"prox oracle {label}", err <= tol, err, tol, time.perf_counter() - t))
    return out


def svt_errors(n=100, shape=(36, 60), seed=0):
    rng = np.random.default_rng(seed)
    spec = RelaxationSpec(Family.NUCLEAR, 1.0)
    worst = 0.0
    for _ in range(n):
        Y = rng.standard_normal(shape) * rng.uniform(0.5, 20.0)
        lam = rng.uniform(0.1, 10.0)
        w = np.ones(min(shape))
        X, _ = shrinkage.weighted_sv_prox(Y, w, spec, lam)
        U, s, Vt = np.linalg.svd(Y, full_matrices=False)
        ref = U @ np.diag(np.maximum(s - lam, 0.0)) @ Vt
        worst = max(worst, float(np.linalg.norm(X - ref)))
    return worst


def reweighted_objectives(Y, lam, spec, iters):
    """Objective 1/2 ||Y - X||^2 + lam * sum rho(rho(sigma(X))) after each inner pass."""
    vals = []
    for t in range(1, iters + 1):
        X, sp = shrinkage.denoise_group(Y, lam, spec, inner_iters=t)
        vals.append(0.5 * np.linalg.norm(Y - X) ** 2
                    + lam * shrinkage.surrogate_penalty(spec, sp.values))
    return np.asarray(vals)


def monotonicity_violation(n=50, iters=6, seed=1):
    """Largest per-step increase of the surrogate objective over random groups."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for g in range(n):
        p = (0.5, 2.0 / 3.0)[g % 2]
        spec = RelaxationSpec(Family.SCHATTEN_P, p)
        low = rng.standard_normal((36, 3)) @ rng.standard_normal((3, 60)) * 20.0
        Y = low + rng.standard_normal((36, 60)) * rng.uniform(1.0, 10.0)
        lam = rng.uniform(1.0, 40.0)
        obj = reweighted_objectives(Y, lam, spec, iters)
        worst = max(worst, float(np.diff(obj).max()))
    return worst


def aggregation_roundtrip_error(shape=(53, 61), seed=2):
    rng = np.random.default_rng(seed)
    img = rng.uniform(0, 255, shape)
    geom = GroupGeometry(patch_side=6, group_size=20, window=10, stride=4)
    stack = build_groups(img, geom)
    return float(np.abs(aggregate_groups(stack, *shape) - img).max())


def _dot_test(op, x_shape, y_like, rng):
    x = rng.standard_normal(x_shape)
    y = rng.standard_normal(np.shape(y_like))
    lhs = float(np.vdot(op.apply(x), y))
    rhs = float(np.vdot(x, op.adjoint(y)))
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def adjoint_errors(seed=3):
    rng = np.random.default_rng(seed)
    shape = (40, 48)
    ops = {
        "mask": MaskOperator(make_random_mask(*shape, 0.5, seed=seed)),
        "blur gaussian": BlurOperator(make_gaussian_kernel(25, 1.6)),
        "blur motion": BlurOperator(make_motion_kernel(20, 45)),
        "block cs": make_block_cs_operator(16, 0.3, seed=seed, image_shape=shape),
    }
    out = {}
    for name, op in ops.items():
        probe = op.apply(np.zeros(shape))
        out[name] = _dot_test(op, shape, probe, rng)
    return out


def backend_parity(seed=4):
    """Compiled vs numpy kernels on a random image; inf when no compiled backend."""
    if kernels.compiled_kernels is None:
        return None
    rng = np.random.default_rng(seed)
    img = rng.uniform(0, 255, (48, 40))
    refs = np.array([(r, c) for r in range(0, 41, 4) for c in range(0, 33, 4)])
    a = kernels.python_kernels.block_match(img, refs, 8, 6, 30)
    b = kernels.compiled_kernels.block_match(img, refs, 8, 6, 30)
    if not np.array_equal(a[0], b[0]):
        return np.inf
    err = float(np.abs(a[1] - b[1]).max())
    na, da = kernels.python_kernels.aggregate(np.ones((len(refs), 64, 30)), a[0], 8, 48, 40)
    nb, db = kernels.compiled_kernels.aggregate(np.ones((len(refs), 64, 30)), a[0], 8, 48, 40)
    err = max(err, float(np.abs(na - nb).max()), float(np.abs(da - db).max()))
    noisy = img.copy()
    noisy.reshape(-1)[rng.choice(noisy.size, 400, replace=False)] = 255.0
    fa, ma = kernels.python_kernels.adaptive_median(noisy, 9)
    fb, mb = kernels.compiled_kernels.adaptive_median(noisy, 9)
    if not np.array_equal(ma, mb):
        return np.inf
    return max(err, float(np.abs(fa - fb).max()))


def _timed(name, fn, limit, compare=lambda v, lim: v <= lim):
    t = time.perf_counter()
    v = fn()
    return Check(name, bool(compare(v, limit)), float(v), limit, time.perf_counter() - t)


def run_all():
    checks = check_prox_oracle()
    checks.append(_timed("weighted SVT vs soft threshold", svt_errors, 1e-8))
    checks.append(_timed("surrogate monotonicity", monotonicity_violation, 1e-8))
    checks.append(_timed("aggregation round trip", aggregation_roundtrip_error, 1e-10))
    t = time.perf_counter()
    adj = adjoint_errors()
    dt = (time.perf_counter() - t) / len(adj)
    for name, err in adj.items():
        checks.append(Check(f"adjoint {name}", err <= 1e-8, err, 1e-8, dt))
    t = time.perf_counter()
    parity = backend_parity()
    if parity is not None:
        checks.append(Check("kernel backend parity", parity <= 1e-8, parity, 1e-8,
                            time.perf_counter() - t))
    return checks


def format_table(checks):
    lines = [f"{'check':<34} {'result':<6} {'value':>12} {'limit':>10} {'sec':>7}"]
    for c in checks:
        lines.append(f"{c.name:<34} {'PASS' if c.passed else 'FAIL':<6} "
                     f"{c.value:>12.3e} {c.limit:>10.1e} {c.seconds:>7.2f}")
    return "\n".join(lines)


def main():
    checks = run_all()
    print(format_table(checks))
    print(f"kernel backend: {kernels.BACKEND}")
    failed = [c for c in checks if not c.passed]
    if failed:
        print(f"{len(failed)} check(s) failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
