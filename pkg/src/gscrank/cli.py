"""Command-line front end.

    gscrank spn --input @cameraman --density 0.3 --p 0.5
    gscrank run --task deblur --input peppers.png --kernel uniform9
    gscrank verify

``@name`` inputs refer to the bundled test-image manifest (searched in
``$GSCRANK_IMAGE_DIR`` first).
"""

import argparse
import csv
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import params as ptable
from .admm import AdmmConfig, SolverDivergedError, restore, write_trace
from .degradation import (BlurOperator, MaskOperator, add_gaussian_noise, add_salt_pepper,
                          adaptive_median_filter, load_text_mask, make_block_cs_operator,
                          make_gaussian_kernel, make_motion_kernel, make_random_mask,
                          make_uniform_kernel)
from .denoiser import DenoiserParams
from .imaging import load_image, psnr, quantize, resolve_input, save_image
from .patches import GroupGeometry
from .shrinkage import RelaxationSpec

log = logging.getLogger("gscrank")

TASKS = ("cs", "inpaint", "textremove", "deblur", "spn", "denoise")
SUMMARY_FIELDS = ("task", "p", "param", "psnr_in", "psnr_out", "iters", "seconds")
MAX_ITERS = {"cs": 100, "deblur": 100, "inpaint": 200, "textremove": 200, "spn": 200,
             "denoise": 1}
# No table exists for plain denoising. One pass of the group denoiser with
# lam = DENOISE_LAM20[p] * (sigma / 20) ** (2 - p) tracks the threshold's growth
# with sigma; picked on Cameraman crops at sigma 10, 20 and 30. Further ADMM
# passes with a fixed threshold drift back toward the noisy input.
DENOISE_MU = 0.1
DENOISE_LAM20 = {0.5: 1.5, 0.6667: 0.6, 1.0: 0.07}


def denoise_defaults(p, sigma):
    key = min(DENOISE_LAM20, key=lambda k: abs(k - p))
    if abs(key - p) > 1e-3:
        raise KeyError(f"no built-in denoise parameters for p={p}; pass --mu and --lam")
    return DENOISE_MU, DENOISE_LAM20[key] * (sigma / 20.0) ** (2.0 - p)


def parse_kernel(text):
    """``uniform9``, ``gaussian`` / ``gaussian:25:1.6``, ``motion`` / ``motion:20:45``."""
    name, *args = text.lower().replace(",", ":").split(":")
    if name.startswith("uniform"):
        side = int(name[len("uniform"):] or (args[0] if args else 9))
        return make_uniform_kernel(side)
    if name == "gaussian":
        side, sigma = (int(args[0]), float(args[1])) if args else (25, 1.6)
        return make_gaussian_kernel(side, sigma)
    if name == "motion":
        length, angle = (float(args[0]), float(args[1])) if args else (20, 45)
        return make_motion_kernel(length, angle)
    raise ValueError(f"unknown kernel {text!r}")


def _task_param(args):
    return {"cs": args.subrate, "inpaint": args.missing, "textremove": "text",
            "deblur": args.kernel, "spn": args.density,
            "denoise": 20.0 if args.noise_sigma is None else args.noise_sigma}[args.task]


def _add_task_args(p):
    g = p.add_argument_group("input/output")
    g.add_argument("--input", help="clean image path or @name (used as PSNR reference)")
    g.add_argument("--degraded", help="use this degraded image instead of synthesizing one")
    g.add_argument("--mask", help="mask image, 0 = missing (textremove; optional for inpaint "
                   "with --degraded)")
    g.add_argument("--output", default="restored.png", help="restored image (default: %(default)s)")
    g.add_argument("--trace", help="per-iteration trace CSV (default: <output>_trace.csv)")
    g.add_argument("--report", help="run report CSV (default: <output>_report.csv)")
    g.add_argument("--save-degraded", help="also write the degraded observation here")

    g = p.add_argument_group("task")
    g.add_argument("--p", type=float, default=0.5,
                   help="exponent: 0.5, 0.6667, or 1 for the nuclear norm (default: %(default)s)")
    g.add_argument("--subrate", type=float, default=0.3, help="cs sampling rate (default: %(default)s)")
    g.add_argument("--block-side", type=int, default=32, help="cs block side (default: %(default)s)")
    g.add_argument("--missing", type=float, default=0.5,
                   help="inpaint missing fraction (default: %(default)s)")
    g.add_argument("--kernel", default="uniform9",
                   help="deblur kernel: uniform9, gaussian[:25:1.6], motion[:20:45] "
                   "(default: %(default)s)")
    g.add_argument("--noise-sigma", type=float, default=None,
                   help="Gaussian noise std; default sqrt(2) for deblur, 20 for denoise, 0 otherwise")
    g.add_argument("--density", type=float, default=0.3, help="spn density (default: %(default)s)")
    g.add_argument("--seed", type=int, default=0, help="seed for masks, noise and cs (default: 0)")

    g = p.add_argument_group("solver overrides (defaults come from the built-in tables)")
    g.add_argument("--mu", type=float, help="ADMM penalty")
    g.add_argument("--lam", type=float, help="regularization weight")
    g.add_argument("--group-size", type=int, default=60, help="patches per group (default: 60)")
    g.add_argument("--patch-side", type=int, help="patch side (default: 6 cs, 10 textremove, 8 other)")
    g.add_argument("--stride", type=int, help="reference stride (default: 4, 5 for patch side >= 10)")
    g.add_argument("--window", type=int, default=20, help="search window side (default: 20)")
    g.add_argument("--iters", type=int, help="max outer iterations (default: 100 cs/deblur, "
                   "200 inpaint/spn/textremove, 1 denoise)")
    g.add_argument("--inner-iters", type=int, default=2, help="reweighting passes (default: 2)")
    g.add_argument("--tol", type=float, default=5e-4, help="relative change stop (default: 5e-4)")
    g.add_argument("--grad-steps", type=int, default=200,
                   help="cs gradient steps per outer iteration (default: 200)")
    g.add_argument("--threads", type=int, default=1, help="denoiser threads (default: 1)")
    g.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="gscrank", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a restoration task")
    run.add_argument("--task", required=True, choices=TASKS)
    _add_task_args(run)
    for task in TASKS:
        sp = sub.add_parser(task, help=f"shorthand for run --task {task}")
        sp.set_defaults(task=task)
        _add_task_args(sp)
    sub.add_parser("verify", help="run the built-in oracle checks")
    return parser


def _degrade(args, clean):
    """Return ``(b, op, baseline, extra)``; ``baseline`` is the psnr_in image."""
    task = args.task
    sigma = args.noise_sigma
    degraded = load_image(args.degraded) if args.degraded else None
    shape = (clean if clean is not None else degraded).shape

    if task in ("inpaint", "textremove"):
        if args.mask:
            mask = load_text_mask(args.mask)
        elif task == "textremove":
            raise ValueError("textremove needs --mask (0 = missing)")
        elif degraded is not None:
            raise ValueError("inpaint with --degraded needs --mask")
        else:
            mask = make_random_mask(shape[0], shape[1], args.missing, seed=args.seed)
        if mask.shape != shape[:2]:
            raise ValueError(f"mask shape {mask.shape} does not match image {shape[:2]}")
        op = MaskOperator(mask)
        if degraded is None:
            degraded = op.apply(add_gaussian_noise(clean, sigma or 0.0, seed=args.seed))
        b = op.apply(degraded)
        return b, op, b, None
    if task == "spn":
        if degraded is None:
            degraded = add_salt_pepper(clean, args.density, seed=args.seed)
        filtered, impulse = adaptive_median_filter(degraded)
        mask = ~impulse if impulse.ndim == 2 else ~impulse.any(axis=2)
        op = MaskOperator(mask)
        return op.apply(degraded), op, filtered, degraded
    if task == "denoise":
        if degraded is None:
            degraded = add_gaussian_noise(clean, 20.0 if sigma is None else sigma, seed=args.seed)
        op = MaskOperator(np.ones(shape[:2], dtype=bool))
        return degraded, op, degraded, None
    if task == "deblur":
        op = BlurOperator(parse_kernel(args.kernel))
        if degraded is None:
            degraded = add_gaussian_noise(op.apply(clean), math.sqrt(2.0) if sigma is None
                                          else sigma, seed=args.seed)
        return degraded, op, degraded, None
    if task == "cs":
        if degraded is not None:
            raise ValueError("cs measurements are always synthesized; --degraded is not supported")
        op = make_block_cs_operator(args.block_side, args.subrate, args.seed, shape)
        b = op.apply(clean)
        if sigma:
            b = add_gaussian_noise(b, sigma, seed=args.seed + 1)
        return b, op, op.adjoint(b), None
    raise ValueError(f"unknown task {task!r}")


def make_config(args):
    task = args.task
    mu, lam = args.mu, args.lam
    if mu is None or lam is None:
        if task == "denoise":
            dmu, dlam = denoise_defaults(args.p, _task_param(args))
        else:
            dmu, dlam = ptable.lookup(task, _task_param(args), args.p)
        mu = dmu if mu is None else mu
        lam = dlam if lam is None else lam
    side = args.patch_side or ptable.default_patch_side(task)
    stride = args.stride or ptable.default_stride(side)
    geom = GroupGeometry(side, args.group_size, args.window, stride)
    dparams = DenoiserParams(geom, RelaxationSpec.from_p(args.p), tau=0.0,
                             inner_iters=args.inner_iters)
    return AdmmConfig(mu=mu, lam=lam, denoiser=dparams,
                      max_outer_iters=args.iters or MAX_ITERS[task], tol=args.tol,
                      grad_steps_per_outer=args.grad_steps, seed=args.seed,
                      threads=args.threads)


def _fmt(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else (
        "inf" if v == math.inf else f"{v:.2f}")


def run_task(args):
    if not args.input and not args.degraded:
        raise ValueError("need --input or --degraded")
    clean = resolve_input(args.input) if args.input else None
    b, op, baseline, observed = _degrade(args, clean)
    config = make_config(args)
    log.info("task=%s mu=%g lam=%g geom=%s", args.task, config.mu, config.lam,
             config.denoiser.geom)
    if args.save_degraded:
        save_image(observed if observed is not None else (
            baseline if args.task != "cs" else op.adjoint(b)), args.save_degraded)

    t0 = time.perf_counter()
    result = restore(b, op, config, reference=clean,
                     image_shape=(clean if clean is not None else baseline).shape)
    seconds = time.perf_counter() - t0

    out = Path(args.output)
    save_image(result.image, out)
    trace_path = Path(args.trace) if args.trace else out.with_name(out.stem + "_trace.csv")
    write_trace(result.trace, trace_path)
    psnr_in = psnr(quantize(baseline), clean) if clean is not None else math.nan
    psnr_out = psnr(quantize(result.image), clean) if clean is not None else math.nan
    row = {"task": args.task, "p": f"{args.p:g}", "param": str(_task_param(args)),
           "psnr_in": _fmt(psnr_in), "psnr_out": _fmt(psnr_out),
           "iters": str(result.iterations), "seconds": f"{seconds:.1f}"}
    report_path = Path(args.report) if args.report else out.with_name(out.stem + "_report.csv")
    with open(report_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS + ("mu", "lam", "converged"),
                           lineterminator="\n")
        w.writeheader()
        w.writerow({**row, "mu": f"{config.mu:g}", "lam": f"{config.lam:g}",
                    "converged": str(result.converged).lower()})
    print(",".join(row[k] for k in SUMMARY_FIELDS))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "verify":
        from .verify import main as verify_main
        return verify_main()
    try:
        return run_task(args)
    except SolverDivergedError as exc:
        print(f"gscrank: solver aborted: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"gscrank: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
