"""ADMM restoration loop with a group low-rank denoiser as the prior step.

Each outer iteration solves the data subproblem for ``z`` given
``q = x + u``, denoises ``R = z - u`` into ``x`` and updates the scaled
multiplier with ``u <- u - (z - x)``.
"""

import csv
import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .denoiser import DenoiserParams, denoise_image, tau_for_image
from .imaging import psnr, quantize


class SolverDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class AdmmConfig:
    mu: float
    lam: float
    denoiser: DenoiserParams = field(default_factory=DenoiserParams)
    max_outer_iters: int = 100
    tol: float = 5e-4
    grad_steps_per_outer: int = 200
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.grad_steps_per_outer < 1:
            raise ValueError("grad_steps_per_outer must be >= 1")


@dataclass
class AdmmState:
    z: np.ndarray
    u: np.ndarray
    x: np.ndarray
    iteration: int = 0


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    rel_change: float
    psnr: float = math.nan
    seconds: float = 0.0


@dataclass
class RestoreResult:
    image: np.ndarray  # clamped to [0, 255], not rounded
    raw: np.ndarray  # last iterate before clamping
    trace: list
    iterations: int
    converged: bool


def z_update_mask(b, mask, x_plus_u, mu):
    """Elementwise minimizer of 1/2 ||b - Az||^2 + mu/2 ||z - q||^2 for a pixel mask."""
    q = np.asarray(x_plus_u, dtype=np.float64)
    a = np.asarray(mask, dtype=np.float64)
    if q.ndim == a.ndim + 1:
        a = a[..., None]
    return (a * b + mu * q) / (a + mu)


def z_update_blur(b, kernel_or_op, x_plus_u, mu):
    """Exact frequency-domain minimizer under periodic boundaries."""
    from .degradation import BlurOperator

    op = kernel_or_op if isinstance(kernel_or_op, BlurOperator) else BlurOperator(
        np.asarray(kernel_or_op, dtype=np.float64))
    q = np.asarray(x_plus_u, dtype=np.float64)
    K = op.transfer(q.shape)
    if q.ndim == 3:
        K = K[..., None]
    num = np.conj(K) * np.fft.fft2(b, axes=(0, 1)) + mu * np.fft.fft2(q, axes=(0, 1))
    return np.real(np.fft.ifft2(num / (np.abs(K) ** 2 + mu), axes=(0, 1)))


def z_update_cs(b, op, x_plus_u, mu, steps, z_init):
    """Steepest descent with exact line search on 1/2 ||b - Az||^2 + mu/2 ||z - q||^2."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    q = np.asarray(x_plus_u, dtype=np.float64)
    z = np.array(z_init, dtype=np.float64)
    resid = op.apply(z) - b  # Az - b, updated incrementally
    for _ in range(steps):
        d = op.adjoint(resid) + mu * (z - q)
        dd = float(np.vdot(d, d))
        if dd == 0.0:
            break
        ad = op.apply(d)
        denom = float(np.vdot(ad, ad)) + mu * dd
        if denom == 0.0:
            break
        eta = dd / denom
        z -= eta * d
        resid -= eta * ad
    return z


def initial_estimate(b, op):
    kind = op.kind
    if kind == "mask":
        mask = np.asarray(op.mask, dtype=bool)
        z = np.array(b, dtype=np.float64)
        if z.ndim == 2:
            z[~mask] = np.median(z[mask]) if mask.any() else 0.0
        else:
            for c in range(z.shape[2]):
                ch = z[..., c]
                ch[~mask] = np.median(ch[mask]) if mask.any() else 0.0
        return z
    if kind == "blur":
        return np.array(b, dtype=np.float64)
    if kind == "cs":
        return op.adjoint(b)
    raise ValueError(f"unknown operator kind {kind!r}")


def _z_step(b, op, q, z_prev, config):
    if op.kind == "mask":
        return z_update_mask(b, op.mask, q, config.mu)
    if op.kind == "blur":
        return z_update_blur(b, op, q, config.mu)
    return z_update_cs(b, op, q, config.mu, config.grad_steps_per_outer, z_prev)


def _finite(name, arr, it):
    if not np.all(np.isfinite(arr)):
        raise SolverDivergedError(f"non-finite values in {name} at iteration {it}")


def restore(b, op, config, reference=None, image_shape=None, callback=None):
    """Run the ADMM loop.

    ``image_shape`` is needed only when it cannot be inferred from ``b``
    (block CS measurements). ``callback(state)`` is called after every
    iteration with the live state; it must not mutate it.
    """
    b = np.asarray(b, dtype=np.float64)
    z = initial_estimate(b, op)
    shape = image_shape or z.shape
    if z.shape != tuple(shape):
        raise ValueError(f"initial estimate has shape {z.shape}, expected {shape}")
    if reference is not None and np.shape(reference) != z.shape:
        raise ValueError("reference shape does not match the image")

    tau = tau_for_image(config.lam, config.mu, z.shape, config.denoiser.geom)
    dparams = dataclasses.replace(config.denoiser, tau=tau)
    state = AdmmState(z=z, u=np.zeros_like(z), x=z.copy())
    trace = []
    converged = False
    t0 = time.perf_counter()
    for it in range(1, config.max_outer_iters + 1):
        state.z = _z_step(b, op, state.x + state.u, state.z, config)
        _finite("z", state.z, it)
        x_new, _ = denoise_image(state.z - state.u, dparams, threads=config.threads)
        _finite("x", x_new, it)
        state.u = state.u - (state.z - x_new)
        norm = np.linalg.norm(state.x)
        rel = float(np.linalg.norm(x_new - state.x) / norm) if norm > 0 else math.inf
        state.x = x_new
        state.iteration = it
        score = psnr(quantize(x_new), reference) if reference is not None else math.nan
        trace.append(TraceRecord(it, rel, score, time.perf_counter() - t0))
        if callback is not None:
            callback(state)
        if rel < config.tol:
            converged = True
            break
    return RestoreResult(np.clip(state.x, 0.0, 255.0), state.x, trace, state.iteration,
                         converged)


def write_trace(trace, path, delimiter=","):
    """One row per outer iteration. Wall-clock time is left out so that
    identical runs produce identical files."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["iteration", "rel_change", "psnr"])
        for r in trace:
            w.writerow([r.iteration, f"{r.rel_change:.9e}",
                        "" if math.isnan(r.psnr) else f"{r.psnr:.4f}"])
