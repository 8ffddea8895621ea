"""Smooth cutoffs, localized kernels and truncated Sobolev kernels.

All kernels here are trigonometric polynomials with real radial
coefficients ``c(|k|)``:

* ``psi(h, t)``: ``h(|k|/t)``
* ``psi_tilde(n, s)``: ``g(|k|/2^n) (1 + |k|^2)^(-s/2)`` with ``g(u) = h(u) - h(2u)``
* ``sobolev_kernel(s, N)``: ``h(|k|/2^N) (1 + |k|^2)^(-s/2)``

so ``sobolev_kernel(s, N) == 1 + sum_{n<=N} psi_tilde(n, s)`` coefficient-wise.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import scipy.linalg as sla

from msn.errors import DiagnosticFailure
from msn.geometry import NodeSet, min_separation_integer, separation_radius
from msn.trigpoly import MultiIndexSet, TrigPoly, evaluate_many

log = logging.getLogger(__name__)


def _phi(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smoothstep(u: np.ndarray, order: int) -> np.ndarray:
    """Polynomial S on [0, 1] with S(0)=0, S(1)=1 and derivatives 1..order-1 zero at both ends."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    # S(u) = 1 - S(1 - u); evaluate the half nearer 0 to avoid cancellation
    upper = u > 0.5
    v = np.where(upper, 1.0 - u, u)
    N = order - 1
    total = np.zeros_like(v)
    for j in range(N + 1):
        total += math.comb(N + j, j) * math.comb(2 * N + 1, N - j) * (-v) ** j
    low = v ** (N + 1) * total
    return np.clip(np.where(upper, 1.0 - low, low), 0.0, 1.0)


@dataclass(frozen=True)
class CutoffFunction:
    """``h`` with ``h = 1`` on ``[0, 1/2]``, ``h = 0`` on ``[1, inf)``, decreasing between.

    ``kind="smooth_bump"`` is C-infinity; ``kind="smoothstep"`` with order
    ``Q`` is ``Q - 1`` times continuously differentiable with a Lipschitz
    ``(Q-1)``-th derivative.
    """

    kind: Literal["smooth_bump", "smoothstep"] = "smooth_bump"
    order: Optional[int] = None

    def __post_init__(self):
        if self.kind == "smoothstep":
            if self.order is None or self.order < 1:
                raise ValueError("smoothstep cutoff needs an order Q >= 1")
        elif self.kind != "smooth_bump":
            raise ValueError(f"unknown cutoff kind {self.kind!r}")

    def __call__(self, t) -> np.ndarray:
        return h_eval(self, t)

    def g(self, t) -> np.ndarray:
        """Dyadic difference ``h(t) - h(2t)``, supported on ``[1/4, 1]``."""
        t = np.asarray(t, dtype=float)
        return h_eval(self, t) - h_eval(self, 2.0 * t)


DEFAULT_CUTOFF = CutoffFunction()


def h_eval(h: CutoffFunction, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    out[t <= 0.5] = 1.0
    mid = (t > 0.5) & (t < 1.0)
    u = 2.0 * t[mid] - 1.0  # transition variable in (0, 1)
    if h.kind == "smooth_bump":
        a, b = _phi(1.0 - u), _phi(u)
        out[mid] = a / (a + b)
    else:
        out[mid] = 1.0 - smoothstep(u, h.order)
    return out[0] if scalar else out


class _ShellCache:
    """Spherical index sets keyed by (dim, radius), built once per key."""

    def __init__(self):
        self._lock = threading.Lock()
        self._sets: dict = {}

    def get(self, dim: int, radius: float) -> MultiIndexSet:
        key = (dim, float(radius))
        iset = self._sets.get(key)
        if iset is None:
            with self._lock:
                iset = self._sets.get(key)
                if iset is None:
                    iset = MultiIndexSet(dim, radius, "spherical")
                    self._sets[key] = iset
        return iset


_shells = _ShellCache()


@dataclass(frozen=True, eq=False)
class KernelPoly:
    """A radial kernel polynomial tagged with how it was generated."""

    poly: TrigPoly
    kind: str
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return evaluate_many(self.poly, x).real

    @property
    def index_set(self) -> MultiIndexSet:
        return self.poly.index_set

    @property
    def coeffs(self) -> np.ndarray:
        return self.poly.coeffs.real

    def peak(self) -> float:
        """Value at the origin, ``sum_k c_k``."""
        return float(np.sum(self.coeffs))

    def l1_norm(self, per_axis: Optional[int] = None) -> float:
        """Normalized L^1 norm by the trapezoid rule on a uniform lattice."""
        from msn.trigpoly import grid_values

        order = int(np.max(np.abs(self.index_set.indices), initial=0))
        n = per_axis or max(8, 8 * order)
        return float(np.mean(np.abs(grid_values(self.poly, n).real)))


def _radial_kernel(dim: int, radius: float, profile, kind: str, **params) -> KernelPoly:
    iset = _shells.get(dim, radius)
    c = profile(iset.norms_sq)
    return KernelPoly(TrigPoly(iset, c.astype(complex)), kind, params)


def psi_kernel(h: CutoffFunction, t: float, dim: int = 1) -> KernelPoly:
    """``Psi_t(h, .)`` as a polynomial; ``t = 0`` is the constant 1, ``t < 0`` is 0."""
    if t < 0:
        return _radial_kernel(dim, 0, lambda r2: np.zeros_like(r2), "psi", t=t)
    if t == 0:
        return _radial_kernel(dim, 0, lambda r2: np.ones_like(r2), "psi", t=t)
    return _radial_kernel(dim, t, lambda r2: h_eval(h, np.sqrt(r2) / t), "psi", t=t)


def psi(h: CutoffFunction, t: float, x) -> np.ndarray:
    """Evaluate ``Psi_t(h, x) = sum_k h(|k|/t) exp(i k.x)`` (real-valued)."""
    x = np.asarray(x, dtype=float)
    dim = 1 if x.ndim <= 1 else x.shape[1]
    return psi_kernel(h, t, dim)(x)


def sobolev_kernel(s: float, N: int, dim: int = 1, h: CutoffFunction = DEFAULT_CUTOFF) -> KernelPoly:
    """Truncation ``sigma_{2^N}(h, K_s)`` of the Sobolev kernel.

    Coefficients ``h(|k|/2^N) (1 + |k|^2)^(-s/2)``; exact ``(1+|k|^2)^(-s/2)``
    for ``|k| <= 2^(N-1)``.
    """
    if N < 0:
        raise ValueError("truncation level must be >= 0")
    t = 2.0**N
    return _radial_kernel(
        dim, t, lambda r2: h_eval(h, np.sqrt(r2) / t) * (1.0 + r2) ** (-0.5 * s), "sobolev", s=s, N=N
    )


def psi_tilde(n: int, s: float, dim: int = 1, h: CutoffFunction = DEFAULT_CUTOFF) -> KernelPoly:
    """Dyadic block ``sum_k g(|k|/2^n) (1 + |k|^2)^(-s/2) exp(i k.x)``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    t = 2.0**n
    return _radial_kernel(
        dim, t, lambda r2: h.g(np.sqrt(r2) / t) * (1.0 + r2) ** (-0.5 * s), "psi_tilde", n=n, s=s
    )


@dataclass
class LocalizationReport:
    slope: float
    r_hat: float
    expected_r: Optional[float]
    radii: np.ndarray
    envelope: np.ndarray

    def records(self, t: float) -> list[dict]:
        """JSON-ready ``{t, radius, value}`` rows of the fitted envelope."""
        return [{"t": t, "radius": float(r), "value": float(v)} for r, v in zip(self.radii, self.envelope)]


def localization_profile(
    kernel: KernelPoly,
    t: float,
    R: Optional[float] = None,
    samples: int = 20000,
    noise_floor: float = 1e-12,
) -> LocalizationReport:
    """Fit the power-law decay of ``|kernel|`` away from the origin.

    The kernel is sampled along the first coordinate axis on ``[2/t, pi]``;
    local maxima of ``|kernel|`` form the envelope, and the least-squares
    slope of ``log envelope`` against ``log radius`` is returned together
    with ``r_hat = -slope``.  Envelope points below ``noise_floor`` times
    the peak are treated as round-off and dropped.
    """
    dim = kernel.index_set.dim
    radii = np.linspace(2.0 / t, np.pi, samples)
    pts = np.zeros((samples, dim))
    pts[:, 0] = radii
    vals = np.abs(kernel(pts))
    interior = (vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])
    peaks = np.flatnonzero(interior) + 1
    floor = noise_floor * abs(kernel.peak())
    peaks = peaks[vals[peaks] > floor]
    if peaks.size < 3:
        raise ValueError("too few envelope samples above the noise floor to fit a slope")
    # running maximum from the right keeps the upper envelope only
    env = np.maximum.accumulate(vals[peaks][::-1])[::-1]
    keep = vals[peaks] >= env
    r, v = radii[peaks][keep], vals[peaks][keep]
    if r.size < 3:
        raise ValueError("too few envelope samples to fit a slope")
    slope = float(np.polyfit(np.log(r), np.log(v), 1)[0])
    return LocalizationReport(slope, -slope, R, r, v)


def _sigma_tail_ratio(power: np.ndarray, radius: np.ndarray, h: CutoffFunction, N: float) -> float:
    total = np.sum(power)
    if total == 0:
        return 0.0
    keep = 1.0 - h_eval(h, radius / N)
    return float(np.sqrt(np.sum(keep**2 * power) / total))


@dataclass
class ContractionResult:
    n_star: int
    ratio: float
    m: int
    constant: float
    history: list = field(default_factory=list)
    worst_ratio: Optional[float] = None


def sigma_contraction_check(
    nodes: NodeSet,
    s: float,
    coeffs,
    h: CutoffFunction = DEFAULT_CUTOFF,
    level: Optional[int] = None,
    cap: Optional[int] = None,
    target: float = 0.5,
    uniform: bool = False,
) -> ContractionResult:
    """Smallest dyadic ``N`` with ``||G - sigma_N(h, G)||_2 <= target ||G||_2``.

    ``G = sum_j a_j K_s(. - y_j)`` is formed from the truncated kernel at
    ``level`` (default: 2^level >= 16 / eta, several octaves above the
    expected answer ``N* ~ 1/eta``).
    Both norms are computed from Fourier coefficients by Parseval.  The
    returned ``constant`` is ``N* / m`` with ``m`` the integer separation.

    With ``uniform=True`` the stopping rule uses the worst case over all
    coefficient vectors (largest generalized eigenvalue of the tail form
    against the Gram form), so ``N*`` depends on the nodes only; ``ratio``
    is still reported for the given ``coeffs``.
    """
    a = np.asarray(coeffs, dtype=float).reshape(-1)
    if a.shape[0] != len(nodes):
        raise ValueError("one coefficient per node required")
    q = nodes.dim
    if s <= q / 2:
        raise ValueError("contraction check needs s > q/2")
    if len(nodes) > 1:
        eta = separation_radius(nodes)
        m = min_separation_integer(eta)
    else:
        eta, m = np.pi, 1
    if not np.any(a) and not uniform:
        return ContractionResult(1, 0.0, m, 1.0 / m)
    if level is None:
        level = max(6, math.ceil(math.log2(16.0 / eta)))
    if cap is None:
        cap = 2 ** (level - 1)
    K = sobolev_kernel(s, level, q, h)
    iset = K.index_set
    kk = iset.indices.astype(float)
    radius = np.sqrt(iset.norms_sq)
    if uniform:
        # columns: Fourier coefficients of K_s(. - y_j)
        E = np.exp(-1j * (kk @ nodes.points.T)) * K.coeffs[:, None]
        gram = E.conj().T @ E
        ghat = E @ a
    else:
        ghat = np.zeros(len(iset), dtype=complex)
        for aj, yj in zip(a, nodes.points):
            ghat += aj * np.exp(-1j * (kk @ yj))
        ghat *= K.coeffs
    power = np.abs(ghat) ** 2
    N, history = 1, []
    while N <= cap:
        ratio = _sigma_tail_ratio(power, radius, h, N)
        worst = None
        if uniform:
            tail = (1.0 - h_eval(h, radius / N))[:, None] * E
            lam = sla.eigh(tail.conj().T @ tail, gram, eigvals_only=True)[-1]
            worst = math.sqrt(max(float(lam), 0.0))
        history.append((N, ratio if worst is None else worst))
        if (worst if uniform else ratio) <= target:
            log.info("contraction: N*=%d ratio=%.3g m=%d N*/m=%.3g", N, ratio, m, N / m)
            return ContractionResult(N, ratio, m, N / m, history, worst)
        N *= 2
    raise DiagnosticFailure(f"no N <= {cap} reached ratio {target}; last ratio {history[-1][1]:.3g}")
