"""Holomorphic disks with boundaries on graphical tori, transverse foliations
and extension of finite holomorphic motions."""

from .circle_fourier import (
    BoundaryFunction,
    hilbert_transform,
    holder_norm,
    holomorphic_extension,
    holomorphy_residual,
    log_branch,
    winding_number,
)
from .disk_solver import HolomorphicDisk, SolverConfig, continue_in_t, solve_disk
from .foliation import Foliation, build_foliation, leaf_through_point
from .motion_extend import HolomorphicMotionSpec, extend_motion, integrate_motion, normalize_motion
from .psh_verify import Barrier, evaluate_barrier, hessian_min_eigen, laplacian_sign_check, trapping_check
from .torus_model import TorusFamily, TorusFamilySpec, validate_family

__all__ = [
    "Barrier",
    "BoundaryFunction",
    "Foliation",
    "HolomorphicDisk",
    "HolomorphicMotionSpec",
    "SolverConfig",
    "TorusFamily",
    "TorusFamilySpec",
    "build_foliation",
    "continue_in_t",
    "evaluate_barrier",
    "extend_motion",
    "hessian_min_eigen",
    "hilbert_transform",
    "holder_norm",
    "holomorphic_extension",
    "holomorphy_residual",
    "integrate_motion",
    "laplacian_sign_check",
    "leaf_through_point",
    "log_branch",
    "normalize_motion",
    "solve_disk",
    "trapping_check",
    "validate_family",
    "winding_number",
]
