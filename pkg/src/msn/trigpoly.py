"""Multivariate trigonometric polynomials.

A :class:`TrigPoly` is ``sum_k a_k exp(i k.x)`` over a :class:`MultiIndexSet`.
Continuous L^2 norms use the normalized measure ``dx / (2 pi)^q``, so that
Parseval reads ``||T||_2 = ||a||_l2``.  The Sobolev norm of order ``s`` is
``(sum_k |a_k|^2 (1 + |k|^2)^s)^(1/2)`` in the same convention.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal

import numpy as np

from msn.errors import NotEven

Shape = Literal["spherical", "rectangular"]

_EVAL_CHUNK = 4_000_000  # complex entries per evaluation block


class MultiIndexSet:
    """Frequencies ``k`` in ``Z^q`` with ``|k|_2 <= order`` or ``max|k_l| <= order``.

    ``order`` may be any nonnegative real.  Indices are enumerated in
    lexicographic order of ``(k_1, ..., k_q)``.
    """

    def __init__(self, dim: int, order: float, shape: Shape = "spherical"):
        if dim < 1:
            raise ValueError("dim must be positive")
        if order < 0:
            raise ValueError("order must be nonnegative")
        if shape not in ("spherical", "rectangular"):
            raise ValueError(f"unknown index-set shape {shape!r}")
        self.dim = int(dim)
        self.order = float(order)
        self.shape = shape
        r = int(math.floor(self.order + 1e-12))
        axis = np.arange(-r, r + 1)
        grid = np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"), axis=-1)
        idx = grid.reshape(-1, self.dim)
        if shape == "spherical":
            idx = idx[np.sum(idx * idx, axis=1) <= self.order**2 + 1e-9]
        idx.setflags(write=False)
        self.indices = idx

    def __len__(self) -> int:
        return self.indices.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiIndexSet)
            and self.dim == other.dim
            and self.shape == other.shape
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):
        return hash((self.dim, self.shape, self.order))

    def __repr__(self) -> str:
        return f"MultiIndexSet(dim={self.dim}, order={self.order:g}, shape={self.shape!r}, size={len(self)})"

    @cached_property
    def norms_sq(self) -> np.ndarray:
        return np.sum(self.indices.astype(float) ** 2, axis=1)

    @cached_property
    def position(self) -> dict:
        return {tuple(k): i for i, k in enumerate(self.indices.tolist())}

    @cached_property
    def negation(self) -> np.ndarray:
        """Permutation ``p`` with ``indices[p[i]] == -indices[i]``."""
        pos = self.position
        return np.array([pos[tuple(-v for v in k)] for k in self.indices.tolist()], dtype=np.intp)

    @classmethod
    def from_indices(cls, indices, shape: Shape = "rectangular") -> "MultiIndexSet":
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim == 1:
            idx = idx.reshape(-1, 1)
        order = float(np.max(np.abs(idx))) if shape == "rectangular" else float(np.sqrt(np.max(np.sum(idx**2, axis=1))))
        out = cls(idx.shape[1], order, shape)
        if not np.array_equal(out.indices, idx):
            raise ValueError("indices are not a complete lexicographic index set")
        return out


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Complex Fourier coefficients ``a_k`` over an index set."""

    index_set: MultiIndexSet
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if c.shape[0] != len(self.index_set):
            raise ValueError(f"{c.shape[0]} coefficients for an index set of size {len(self.index_set)}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.index_set.dim

    @classmethod
    def zeros(cls, index_set: MultiIndexSet) -> "TrigPoly":
        return cls(index_set, np.zeros(len(index_set), dtype=complex))

    @classmethod
    def monomial(cls, k, coeff: complex = 1.0, shape: Shape = "spherical") -> "TrigPoly":
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        order = float(np.sqrt(np.sum(k**2))) if shape == "spherical" else float(np.max(np.abs(k)))
        iset = MultiIndexSet(len(k), order, shape)
        c = np.zeros(len(iset), dtype=complex)
        c[iset.position[tuple(k.tolist())]] = coeff
        return cls(iset, c)

    def coefficient(self, k) -> complex:
        key = tuple(int(v) for v in np.atleast_1d(k))
        i = self.index_set.position.get(key)
        return 0j if i is None else complex(self.coeffs[i])

    def __call__(self, x) -> np.ndarray:
        return evaluate_many(self, x)

    def is_real(self, tol: float = 1e-12) -> bool:
        neg = self.index_set.negation
        scale = max(1.0, float(np.sum(np.abs(self.coeffs))))
        return bool(np.max(np.abs(self.coeffs - np.conj(self.coeffs[neg])), initial=0.0) <= tol * scale)

    def real_part(self) -> "TrigPoly":
        """Polynomial whose values are ``Re T``: ``(a_k + conj(a_-k)) / 2``."""
        neg = self.index_set.negation
        return TrigPoly(self.index_set, 0.5 * (self.coeffs + np.conj(self.coeffs[neg])))

    def reindex(self, index_set: MultiIndexSet) -> "TrigPoly":
        """Copy coefficients onto a superset index set (missing entries zero)."""
        if index_set.dim != self.dim:
            raise ValueError("dimension mismatch")
        out = np.zeros(len(index_set), dtype=complex)
        pos = index_set.position
        for i, k in enumerate(self.index_set.indices.tolist()):
            j = pos.get(tuple(k))
            if j is None:
                if self.coeffs[i] != 0:
                    raise ValueError(f"index {k} not contained in target index set")
                continue
            out[j] = self.coeffs[i]
        return TrigPoly(index_set, out)


def _points(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {arr.shape[1]}")
    return arr


def evaluate_many(T: TrigPoly, points) -> np.ndarray:
    """Direct sum ``sum_k a_k exp(i k.x)`` at every row of ``points``."""
    pts = _points(points, T.dim)
    K = T.index_set.indices.astype(float)
    out = np.empty(pts.shape[0], dtype=complex)
    step = max(1, _EVAL_CHUNK // max(1, K.shape[0]))
    for lo in range(0, pts.shape[0], step):
        phase = pts[lo : lo + step] @ K.T
        out[lo : lo + step] = np.exp(1j * phase) @ T.coeffs
    return out


def evaluate(T: TrigPoly, x) -> complex:
    return complex(evaluate_many(T, np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1))[0])


def coeff_norm(T: TrigPoly) -> float:
    """Plain l2 norm of the coefficients (the normalized L^2 norm)."""
    return float(np.linalg.norm(T.coeffs))


def sobolev_weights(index_set: MultiIndexSet, s: float) -> np.ndarray:
    """``(1 + |k|^2)^(s/2)`` per index."""
    return (1.0 + index_set.norms_sq) ** (0.5 * s)


def derivative_s(T: TrigPoly, s: float) -> TrigPoly:
    """Pseudo-derivative: multiply ``a_k`` by ``(1 + |k|^2)^(s/2)``."""
    return TrigPoly(T.index_set, T.coeffs * sobolev_weights(T.index_set, s))


def sobolev_norm(T: TrigPoly, s: float) -> float:
    return float(np.sqrt(np.sum(np.abs(T.coeffs) ** 2 * (1.0 + T.index_set.norms_sq) ** s)))


def apply_filter(T: TrigPoly, h: Callable[[np.ndarray], np.ndarray], t: float) -> TrigPoly:
    """Coefficient form of convolution with the localized kernel of scale ``t``.

    ``a_k -> h(|k|/t) a_k`` for ``t > 0``; ``t == 0`` keeps only the constant
    term and ``t < 0`` gives the zero polynomial.
    """
    if t < 0:
        return TrigPoly.zeros(T.index_set)
    if t == 0:
        factor = (T.index_set.norms_sq == 0).astype(float)
    else:
        factor = np.asarray(h(np.sqrt(T.index_set.norms_sq) / t), dtype=float)
    return TrigPoly(T.index_set, T.coeffs * factor)


def grid_values(T: TrigPoly, n: int) -> np.ndarray:
    """Values of ``T`` on the lattice ``2 pi j / (3n)``, ``0 <= j_l < 3n``, via FFT.

    Frequencies are folded modulo ``3n`` first, which is exact at grid points.
    Returns an array of shape ``(3n,) * q``.
    """
    if n < 1:
        raise ValueError("grid size must be positive")
    L = 3 * n
    spec = np.zeros((L,) * T.dim, dtype=complex)
    folded = np.mod(T.index_set.indices, L)
    np.add.at(spec, tuple(folded.T), T.coeffs)
    return np.fft.ifftn(spec) * L**T.dim


def mz_grid_norm(T: TrigPoly, n: int, p: float = 2.0) -> float:
    """Discrete norm ``((1/n^q) sum_j |T(2 pi j/(3n))|^p)^(1/p)`` on the 3n-lattice.

    ``p = inf`` takes the maximum over the same lattice.
    """
    vals = np.abs(grid_values(T, n)).ravel()
    if math.isinf(p):
        return float(np.max(vals))
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((np.sum(vals**p) / n**T.dim) ** (1.0 / p))


def nodal_norm(T: TrigPoly, points, m: int, p: float = 2.0) -> float:
    """Scattered-node discrete norm ``((1/m^q) sum_j |T(y_j)|^p)^(1/p)``."""
    pts = _points(getattr(points, "points", points), T.dim)
    if pts.shape[0] == 0:
        raise ValueError("empty node set")
    if m < 1:
        raise ValueError("m must be >= 1")
    vals = np.abs(evaluate_many(T, pts))
    if math.isinf(p):
        return float(np.max(vals))
    return float((np.sum(vals**p) / m**T.dim) ** (1.0 / p))


class CosinePoly:
    """Even polynomial ``sum_k c_k prod_l cos(k_l theta_l)`` with ``0 <= k_l <= degree``.

    Corresponds to an algebraic polynomial of coordinatewise degree
    ``degree`` on ``[-1, 1]^q`` through ``x_l = cos(theta_l)``.
    """

    def __init__(self, dim: int, degree: int, coeffs):
        self.dim = int(dim)
        self.degree = int(degree)
        axis = np.arange(self.degree + 1)
        grid = np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"), axis=-1)
        self.indices = grid.reshape(-1, self.dim)
        c = np.asarray(coeffs, dtype=float).reshape(-1)
        if c.shape[0] != self.indices.shape[0]:
            raise ValueError(f"{c.shape[0]} coefficients for {self.indices.shape[0]} cosine indices")
        c.setflags(write=False)
        self.coeffs = c

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def __repr__(self) -> str:
        return f"CosinePoly(dim={self.dim}, degree={self.degree})"

    @property
    def nonzero_axes(self) -> np.ndarray:
        return np.count_nonzero(self.indices, axis=1)

    def evaluate_theta(self, theta) -> np.ndarray:
        th = _points(theta, self.dim)
        k = np.arange(self.degree + 1, dtype=float)
        tensor = self.coeffs.reshape((self.degree + 1,) * self.dim)
        # contract one axis at a time: (P, d+1, ..., d+1) -> (P,)
        out = np.einsum("pi,i...->p...", np.cos(np.outer(th[:, 0], k)), tensor)
        for ax in range(1, self.dim):
            out = np.einsum("pi,pi...->p...", np.cos(np.outer(th[:, ax], k)), out)
        return out

    def evaluate_interval(self, x) -> np.ndarray:
        from msn.geometry import cosine_lift

        return self.evaluate_theta(cosine_lift(_points(x, self.dim)))

    def sobolev_norm(self, s: float) -> float:
        """Sobolev norm of the even trigonometric polynomial this represents."""
        w = (1.0 + np.sum(self.indices.astype(float) ** 2, axis=1)) ** s
        return float(np.sqrt(np.sum(self.coeffs**2 * w * 0.5 ** self.nonzero_axes)))


def cosine_expand(P: CosinePoly) -> TrigPoly:
    """Split every cosine product into its ``2^nnz`` exponentials."""
    iset = MultiIndexSet(P.dim, P.degree, "rectangular")
    pos = iset.position
    out = np.zeros(len(iset), dtype=complex)
    for k, c, nnz in zip(P.indices.tolist(), P.coeffs, P.nonzero_axes):
        share = c * 0.5**nnz
        for signs in itertools.product((1, -1), repeat=P.dim):
            key = tuple(sg * kk for sg, kk in zip(signs, k))
            out[pos[key]] = share
    return TrigPoly(iset, out)


def cosine_restrict(T: TrigPoly, tol: float = 1e-10) -> CosinePoly:
    """Left inverse of :func:`cosine_expand`; raises :class:`NotEven` otherwise."""
    q = T.dim
    degree = int(np.max(np.abs(T.index_set.indices))) if len(T.index_set) else 0
    if T.index_set.shape != "rectangular":
        T = T.reindex(MultiIndexSet(q, degree, "rectangular"))
    pos = T.index_set.position
    out = CosinePoly(q, degree, np.zeros((degree + 1) ** q))
    coeffs = np.zeros(len(out))
    scale = max(1.0, float(np.max(np.abs(T.coeffs), initial=0.0)))
    for i, k in enumerate(out.indices.tolist()):
        images = {tuple(sg * kk for sg, kk in zip(signs, k)) for signs in itertools.product((1, -1), repeat=q)}
        vals = np.array([T.coeffs[pos[key]] for key in images])
        if np.max(np.abs(vals - vals[0])) > tol * scale or np.max(np.abs(vals.imag)) > tol * scale:
            raise NotEven(f"coefficients at the sign images of {k} differ")
        coeffs[i] = vals[0].real * 2 ** np.count_nonzero(k)
    return CosinePoly(q, degree, coeffs)


def write_coeffs(path, T: TrigPoly) -> None:
    """CSV ``k1,...,kq,re,im`` in lexicographic order with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"k{i + 1}" for i in range(T.dim)] + ["re", "im"])
        for k, a in zip(T.index_set.indices.tolist(), T.coeffs):
            w.writerow([str(v) for v in k] + [f"{a.real:.17g}", f"{a.imag:.17g}"])


def read_coeffs(path) -> TrigPoly:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [row for row in reader if row]
    q = len(header) - 2
    if q < 1 or header[-2:] != ["re", "im"]:
        raise ValueError(f"bad coefficient header {header}")
    idx = np.array([[int(v) for v in row[:q]] for row in rows], dtype=np.int64).reshape(-1, q)
    coeffs = np.array([complex(float(row[q]), float(row[q + 1])) for row in rows])
    for shape in ("spherical", "rectangular"):
        try:
            iset = MultiIndexSet.from_indices(idx, shape)
            break
        except ValueError:
            continue
    else:
        raise ValueError("coefficient file does not hold a complete index set")
    return TrigPoly(iset, coeffs)
