"""Pseudo-spectral toolkit for u_t + Lambda^alpha u = div(u grad Pu) in Fourier-Besov norms."""

from .littlewood_paley import DyadicPartition, build_partition
from .norms import FBNormParams, TrajectoryRecord, fb_norm, mixed_norm
from .pressure import PressureSpec, estimate_sigma
from .solver import ModelParams, SolverConfig, picard_solve, time_march
from .spectral import GridSpec, RealField, SpectralField, forward_transform, inverse_transform
from .wellposedness import admissible, critical_index, local_time_bound, smallness_check

__all__ = [
    "GridSpec",
    "RealField",
    "SpectralField",
    "forward_transform",
    "inverse_transform",
    "DyadicPartition",
    "build_partition",
    "FBNormParams",
    "TrajectoryRecord",
    "fb_norm",
    "mixed_norm",
    "PressureSpec",
    "estimate_sigma",
    "ModelParams",
    "SolverConfig",
    "time_march",
    "picard_solve",
    "critical_index",
    "admissible",
    "smallness_check",
    "local_time_bound",
]

__version__ = "0.1.0"
