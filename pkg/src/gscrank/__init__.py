"""Group low-rank image restoration with reweighted nonconvex singular value shrinkage."""

from .admm import AdmmConfig, RestoreResult, SolverDivergedError, restore
from .denoiser import DenoiserParams, compute_tau, denoise_image
from .kernels import BACKEND
from .patches import GroupGeometry, aggregate_groups, block_match, build_groups
from .shrinkage import Family, RelaxationSpec, denoise_group, scalar_prox, weighted_sv_prox

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig", "BACKEND", "DenoiserParams", "Family", "GroupGeometry", "RelaxationSpec",
    "RestoreResult", "SolverDivergedError", "aggregate_groups", "block_match", "build_groups",
    "compute_tau", "denoise_group", "denoise_image", "restore", "scalar_prox",
    "weighted_sv_prox",
]
