"""Minimum Sobolev norm trigonometric interpolation on the torus and on [-1, 1]^q."""

from msn.errors import (
    DiagnosticFailure,
    DomainError,
    DuplicateNodes,
    InsufficientDegree,
    MsnError,
    NotEven,
    NotPositiveDefinite,
    RankDeficient,
)
from msn.geometry import NodeSet, cosine_lift, cosine_unlift, equispaced_interval_nodes
from msn.kernels import CutoffFunction, psi, psi_tilde, sobolev_kernel
from msn.rkhs import build_gram, kernel_fit
from msn.solver import MsnProblem, OrderRule, interval_fit, msn_fit, select_order
from msn.trigpoly import CosinePoly, MultiIndexSet, TrigPoly

__version__ = "0.1.0"

__all__ = [
    "CosinePoly",
    "CutoffFunction",
    "DiagnosticFailure",
    "DomainError",
    "DuplicateNodes",
    "InsufficientDegree",
    "MsnError",
    "MsnProblem",
    "MultiIndexSet",
    "NodeSet",
    "NotEven",
    "NotPositiveDefinite",
    "OrderRule",
    "RankDeficient",
    "TrigPoly",
    "build_gram",
    "cosine_lift",
    "cosine_unlift",
    "equispaced_interval_nodes",
    "interval_fit",
    "kernel_fit",
    "msn_fit",
    "psi",
    "psi_tilde",
    "select_order",
    "sobolev_kernel",
]
