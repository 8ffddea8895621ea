"""Kernel interpolation with the truncated Sobolev kernel ``K_{2s}``.

The minimal ``W_s^2`` interpolant lies in the span of ``K_{2s}(. - y_j)``;
its coefficients solve the Gram system ``I c = f`` with
``I_jk = K_{2s}(y_j - y_k)``.  The kernel is always a finite truncation
``sigma_{2^N}(h, K_{2s})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from msn.errors import NotPositiveDefinite
from msn.geometry import NodeSet, min_separation_integer, separation_radius
from msn.kernels import DEFAULT_CUTOFF, CutoffFunction, KernelPoly, sobolev_kernel
from msn.trigpoly import TrigPoly, evaluate_many


def default_level(nodes: NodeSet) -> int:
    """Smallest ``N`` with ``2^N >= 8 / eta`` (``N = 3`` for a single node)."""
    if len(nodes) < 2:
        return 3
    eta = separation_radius(nodes)
    return max(0, math.ceil(math.log2(8.0 / eta) - 1e-12))


def kernel_matrix(kernel: KernelPoly, x, y) -> np.ndarray:
    """``K(x_i - y_j)`` for all pairs, from the kernel's Fourier coefficients."""
    k = kernel.index_set.indices.astype(float)
    ex = np.exp(1j * (np.asarray(x, dtype=float) @ k.T))
    ey = np.exp(1j * (np.asarray(y, dtype=float) @ k.T))
    return ((ex * kernel.coeffs) @ ey.conj().T).real


@dataclass
class GramSystem:
    nodes: NodeSet
    s: float
    level: int
    kernel: KernelPoly
    matrix: np.ndarray
    _chol: Optional[tuple] = None

    def factor(self):
        if self._chol is None:
            try:
                self._chol = sla.cho_factor(self.matrix, lower=True, check_finite=True)
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefinite(str(exc)) from exc
        return self._chol

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def build_gram(
    nodes: NodeSet, s: float, level: Optional[int] = None, h: CutoffFunction = DEFAULT_CUTOFF
) -> GramSystem:
    """Gram matrix of the truncated ``K_{2s}`` at the nodes (symmetrized)."""
    if s <= nodes.dim / 2:
        raise ValueError("kernel interpolation needs s > q/2")
    if len(nodes) > 1:
        separation_radius(nodes)  # raises DuplicateNodes
    if level is None:
        level = default_level(nodes)
    kernel = sobolev_kernel(2 * s, level, nodes.dim, h)
    G = kernel_matrix(kernel, nodes.points, nodes.points)
    G = 0.5 * (G + G.T)
    return GramSystem(nodes, s, level, kernel, G)


@dataclass
class KernelInterpolant:
    """``g(x) = sum_j c_j K(x - y_j)``."""

    coeffs: np.ndarray
    nodes: NodeSet
    kernel: KernelPoly

    def __call__(self, x) -> np.ndarray:
        return kernel_matrix(self.kernel, np.asarray(x, dtype=float).reshape(-1, self.nodes.dim), self.nodes.points) @ self.coeffs

    def to_trigpoly(self) -> TrigPoly:
        """Fourier coefficients ``K_hat(k) sum_j c_j exp(-i k.y_j)``."""
        k = self.kernel.index_set.indices.astype(float)
        phases = np.exp(-1j * (k @ self.nodes.points.T))
        return TrigPoly(self.kernel.index_set, self.kernel.coeffs * (phases @ self.coeffs))

    def residual(self, values) -> float:
        return float(np.max(np.abs(self(self.nodes.points) - np.asarray(values))))


def kernel_fit(system: GramSystem, values=None) -> KernelInterpolant:
    """Solve the Gram system by Cholesky; ``NotPositiveDefinite`` on failure."""
    if values is None:
        values = system.nodes.values
    if values is None:
        raise ValueError("no values to interpolate")
    f = np.asarray(values, dtype=float).reshape(-1)
    c = sla.cho_solve(system.factor(), f)
    return KernelInterpolant(c, system.nodes, system.kernel)


@dataclass
class InverseNormRow:
    M: int
    m: int
    eta: float
    lambda_min: float
    inverse_norm: float


def inverse_norm_diagnostic(
    family: Sequence[NodeSet], s: float, level: Optional[int] = None
) -> tuple[list[InverseNormRow], float]:
    """Spectral norm of the inverse Gram matrix along a node family.

    Returns one row per member and the least-squares growth exponent of
    ``||I^{-1}||`` in the integer separation ``m`` (``nan`` with fewer than
    two distinct ``m``).
    """
    rows = []
    for nodes in family:
        system = build_gram(nodes, s, level)
        lam = system.eigvalsh()
        if lam[0] <= 0:
            raise NotPositiveDefinite(f"smallest Gram eigenvalue {lam[0]:.3g} for M={len(nodes)}")
        if len(nodes) > 1:
            eta = separation_radius(nodes)
            m = min_separation_integer(eta)
        else:
            eta, m = float("inf"), 1
        rows.append(InverseNormRow(len(nodes), m, eta, float(lam[0]), float(1.0 / lam[0])))
    ms = np.array([r.m for r in rows], dtype=float)
    if len(set(ms)) < 2:
        return rows, float("nan")
    slope = float(np.polyfit(np.log(ms), np.log([r.inverse_norm for r in rows]), 1)[0])
    return rows, slope
