"""Minimum Sobolev norm (MSN) interpolation.

Given nodes ``y_j`` and values ``f_j`` the interpolant minimizes
``sum_k |a_k|^2 (1 + |k|^2)^s`` subject to ``sum_k a_k exp(i k.y_j) = f_j``.
With ``b_k = w_k a_k`` and ``w_k = (1 + |k|^2)^(s/2)`` this becomes the
least-norm problem ``min ||b||_2`` s.t. ``B b = f`` with
``B_jk = exp(i k.y_j) / w_k``, solved through a pivoted QR factorization
of ``B^H`` (an LQ factorization of ``B``).
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Literal, Optional, Union

import numpy as np
import scipy.linalg as sla

from msn.errors import InsufficientDegree, RankDeficient
from msn.geometry import NodeSet, cosine_lift, separation_radius
from msn.kernels import CutoffFunction, h_eval
from msn.trigpoly import (
    CosinePoly,
    MultiIndexSet,
    TrigPoly,
    cosine_expand,
    derivative_s,
    evaluate_many,
    mz_grid_norm,
    sobolev_norm,
)

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8
RANK_TOL = 1e-12

Mode = Literal["torus", "interval_cosine"]


@dataclass(frozen=True)
class OrderRule:
    """How to pick the polynomial order from the nodes.

    ``multiplier_of_nodes``: ``N* = c * M``; ``inverse_separation``:
    ``N* = ceil(c / eta)``.
    """

    rule: Literal["multiplier_of_nodes", "inverse_separation"] = "inverse_separation"
    c: float = 4.0

    @classmethod
    def multiplier_of_nodes(cls, c: float = 2.0) -> "OrderRule":
        return cls("multiplier_of_nodes", c)

    @classmethod
    def inverse_separation(cls, c: float = 4.0) -> "OrderRule":
        return cls("inverse_separation", c)


def select_order(nodes: NodeSet, rule: OrderRule = OrderRule()) -> int:
    if len(nodes) == 0:
        raise ValueError("empty node set")
    if rule.rule == "multiplier_of_nodes":
        return max(1, int(math.ceil(rule.c * len(nodes) - 1e-9)))
    if rule.rule == "inverse_separation":
        if len(nodes) == 1:
            return max(1, int(math.ceil(rule.c - 1e-9)))
        eta = separation_radius(nodes)
        return max(1, int(math.ceil(rule.c / eta - 1e-9)))
    raise ValueError(f"unknown order rule {rule.rule!r}")


@dataclass
class MsnProblem:
    """Nodes with values, smoothness ``s`` and the frequency set to search.

    In ``torus`` mode ``index_set`` is a :class:`MultiIndexSet` and nodes are
    radians.  In ``interval_cosine`` mode nodes are already lifted angles in
    ``[0, pi]^q``, ``degree`` gives the coordinatewise cosine degree and the
    search space is the even subspace spanned by ``prod cos(k_l theta_l)``.

    ``taper`` optionally divides the squared weights by ``h(|k|/taper_scale)``
    (indices where that vanishes are excluded); this makes the MSN system
    identical to kernel interpolation with the truncated Sobolev kernel.
    """

    nodes: NodeSet
    s: float
    index_set: Optional[MultiIndexSet] = None
    mode: Mode = "torus"
    degree: Optional[int] = None
    taper: Optional[CutoffFunction] = None
    taper_scale: Optional[float] = None

    def __post_init__(self):
        if self.nodes.values is None:
            raise ValueError("MSN problem needs node values")
        if not math.isfinite(self.s):
            raise ValueError("s must be finite")
        q = self.nodes.dim
        if self.s <= q / 2:
            warnings.warn(f"s={self.s} <= q/2={q / 2}: point evaluation is not bounded in W_s^2", stacklevel=3)
        if self.mode == "torus":
            if self.index_set is None:
                raise ValueError("torus mode needs an index set")
            if self.index_set.dim != q:
                raise ValueError("index set dimension does not match nodes")
        elif self.mode == "interval_cosine":
            if self.degree is None or self.degree < 0:
                raise ValueError("interval mode needs a nonnegative degree")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.taper is not None and not self.taper_scale:
            raise ValueError("taper needs a positive taper_scale")

    @property
    def frequencies(self) -> np.ndarray:
        if self.mode == "torus":
            return self.index_set.indices
        return CosinePoly(self.nodes.dim, self.degree, np.zeros((self.degree + 1) ** self.nodes.dim)).indices

    def weights(self) -> np.ndarray:
        """Per-column scale ``w_k`` so that the objective is ``sum |w_k a_k|^2``.

        In interval mode the factor ``2^(-nnz(k)/2)`` makes the objective the
        exact Sobolev norm of the even polynomial.  Tapered indices with
        ``h = 0`` get ``inf`` (excluded).
        """
        k = self.frequencies.astype(float)
        norms_sq = np.sum(k * k, axis=1)
        with np.errstate(over="raise"):
            try:
                w = (1.0 + norms_sq) ** (0.5 * self.s)
            except FloatingPointError as exc:
                raise OverflowError("Sobolev weights overflow; reduce s or the order") from exc
        if self.mode == "interval_cosine":
            w = w * np.sqrt(0.5 ** np.count_nonzero(self.frequencies, axis=1))
        if self.taper is not None:
            hv = h_eval(self.taper, np.sqrt(norms_sq) / self.taper_scale)
            with np.errstate(divide="ignore"):
                w = np.where(hv > 0, w / np.sqrt(np.where(hv > 0, hv, 1.0)), np.inf)
        return w


@dataclass
class SolverStats:
    factorization: str
    condition: float
    elapsed: float
    rank_ratio: float
    refinement_steps: int = 1


@dataclass
class MsnInterpolant:
    """Fitted polynomial plus diagnostics.

    ``poly`` is a :class:`TrigPoly` in torus mode and a :class:`CosinePoly`
    in interval mode.  :meth:`__call__` takes points in the problem's native
    coordinates (radians, or raw ``[-1, 1]^q`` coordinates in interval mode).
    """

    poly: Union[TrigPoly, CosinePoly]
    sobolev_norm: float
    max_residual: float
    solver_stats: SolverStats
    s: float
    mode: Mode = "torus"
    converged: bool = True

    def __call__(self, points) -> np.ndarray:
        if self.mode == "interval_cosine":
            return self.poly.evaluate_interval(points)
        return evaluate_many(self.poly, points)

    def as_trigpoly(self) -> TrigPoly:
        return cosine_expand(self.poly) if isinstance(self.poly, CosinePoly) else self.poly


def assemble_scaled_basis(problem: MsnProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaled constraint matrix ``B`` (M x K), weights ``w`` and the kept columns.

    Columns whose weight is infinite (tapered away) are dropped; ``keep``
    maps the columns of ``B`` back to the full frequency list.
    """
    w = problem.weights()
    keep = np.flatnonzero(np.isfinite(w))
    k = problem.frequencies[keep].astype(float)
    y = problem.nodes.points
    if problem.mode == "torus":
        B = np.exp(1j * (y @ k.T))
    else:
        B = np.ones((y.shape[0], k.shape[0]))
        for ax in range(y.shape[1]):
            B *= np.cos(np.outer(y[:, ax], k[:, ax]))
    B /= w[keep]
    return B, w, keep


@dataclass
class LeastNormSolution:
    b: np.ndarray
    residual: float
    condition: float
    rank_ratio: float


def solve_least_norm(B: np.ndarray, f, tol: float = RESIDUAL_TOL, rank_tol: float = RANK_TOL) -> LeastNormSolution:
    """Minimum 2-norm solution of the underdetermined system ``B b = f``.

    Factors ``B^H P = Q R`` with column pivoting, solves ``R^H z = P^T f``
    and returns ``b = Q z`` (so ``b`` lies in the row space of ``B``),
    followed by one step of iterative refinement on the residual.
    """
    B = np.asarray(B)
    f = np.asarray(f, dtype=B.dtype if np.iscomplexobj(B) else float).reshape(-1)
    M, K = B.shape
    if f.shape[0] != M:
        raise ValueError("right-hand side length does not match the number of rows")
    if M == 0:
        raise ValueError("no constraints")
    if K < M:
        raise InsufficientDegree(f"{K} coefficients for {M} constraints")
    Q, R, piv = sla.qr(B.conj().T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    ratio = float(diag[-1] / diag[0]) if diag[0] > 0 else 0.0
    if diag[0] == 0 or ratio < rank_tol:
        raise RankDeficient(
            f"factor diagonal ratio {ratio:.3g} below {rank_tol:g}: near-duplicate nodes or insufficient degree"
        )
    RH = R.conj().T

    def apply(rhs):
        return Q @ sla.solve_triangular(RH, rhs[piv], lower=True)

    b = apply(f)
    b = b + apply(f - B @ b)
    res = float(np.max(np.abs(B @ b - f)))
    trcon = sla.lapack.ztrcon if np.iscomplexobj(R) else sla.lapack.dtrcon
    rcond = trcon(R, norm="1")[0]
    cond = float(1.0 / rcond) if rcond > 0 else float("inf")
    scale = float(np.max(np.abs(f))) if np.any(f) else 1.0
    if res > tol * scale:
        warnings.warn(f"least-norm residual {res:.3g} exceeds {tol:g} * max|f|", RuntimeWarning, stacklevel=2)
    return LeastNormSolution(b, res, cond, ratio)


def msn_fit(problem: MsnProblem, tol: float = RESIDUAL_TOL, rank_tol: float = RANK_TOL) -> MsnInterpolant:
    """Solve the MSN problem exactly in coefficient form."""
    nodes = problem.nodes
    if len(nodes) > 1:
        # raises DuplicateNodes; on the torus -pi and pi coincide
        separation_radius(nodes.with_metric("periodic") if problem.mode == "torus" else nodes)
    t0 = time.perf_counter()
    B, w, keep = assemble_scaled_basis(problem)
    if B.shape[1] < B.shape[0]:
        raise InsufficientDegree(f"{B.shape[1]} coefficients for {B.shape[0]} nodes")
    f = nodes.values
    sol = solve_least_norm(B, f, tol=tol, rank_tol=rank_tol)
    a_kept = sol.b / w[keep]
    elapsed = time.perf_counter() - t0
    scale = float(np.max(np.abs(f))) if np.any(f) else 1.0
    converged = sol.residual <= tol * scale
    stats = SolverStats("pivoted QR of B^H (LQ of B) + 1 refinement step", sol.condition, elapsed, sol.rank_ratio)

    if problem.mode == "torus":
        a = np.zeros(len(problem.index_set), dtype=complex)
        a[keep] = a_kept
        poly = TrigPoly(problem.index_set, a)
        # real data: the exact solution satisfies a_{-k} = conj(a_k); remove round-off skew
        poly = poly.real_part()
        norm = sobolev_norm(poly, problem.s)
    else:
        c = np.zeros(len(w))
        c[keep] = a_kept.real
        poly = CosinePoly(nodes.dim, problem.degree, c)
        norm = poly.sobolev_norm(problem.s)
    log.debug("msn fit: M=%d K=%d cond=%.3g residual=%.3g", B.shape[0], B.shape[1], sol.condition, sol.residual)
    return MsnInterpolant(poly, norm, sol.residual, stats, problem.s, problem.mode, converged)


def torus_fit(nodes: NodeSet, s: float, order: Optional[float] = None, shape="spherical", **kw) -> MsnInterpolant:
    """Convenience wrapper: MSN fit on the torus with an automatic order."""
    if order is None:
        order = select_order(nodes)
    return msn_fit(MsnProblem(nodes, s, MultiIndexSet(nodes.dim, order, shape)), **kw)


def interval_fit(x_nodes, values, s: float, degree: int, **kw) -> MsnInterpolant:
    """MSN interpolation of data on ``[-1, 1]^q`` through the cosine lift.

    Returns an interpolant whose ``poly`` is a :class:`CosinePoly` of
    coordinatewise degree ``degree``; calling it evaluates at raw ``x``.
    """
    x = np.asarray(x_nodes, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    theta = cosine_lift(x)
    nodes = NodeSet(theta, values)
    return msn_fit(MsnProblem(nodes, s, mode="interval_cosine", degree=degree), **kw)


def mz_objective(P: Union[TrigPoly, CosinePoly], s: float, n_star: int, p: float = 2.0) -> float:
    """Discrete Sobolev objective on the ``3 N*`` lattice for any ``p`` (reporting only)."""
    if isinstance(P, CosinePoly):
        P = cosine_expand(P)
    return mz_grid_norm(derivative_s(P, s), n_star, p)
