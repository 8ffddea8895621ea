"""Node sets, distances, mesh norm, separation radius and the cosine lift.

Coordinates of torus problems are radians in ``[-pi, pi]^q``.  Interval
problems store raw coordinates in ``[-1, 1]^q`` (a subset of the same box)
and are moved to the torus with :func:`cosine_lift`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy.spatial import cKDTree

from msn.errors import DomainError, DuplicateNodes

Metric = Literal["euclidean", "periodic"]

TWO_PI = 2.0 * np.pi
_BOX_TOL = 1e-12
LIFT_TOL = 1e-12


def _as_points(points, dim: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(1, -1)
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {arr.shape[1]}")
    return arr


@dataclass(frozen=True)
class NodeSet:
    """Scattered sample points, optionally with data values.

    Parameters
    ----------
    points
        ``(M, q)`` array of coordinates in ``[-pi, pi]^q``.
    values
        Optional length-``M`` array of real data values.
    metric
        ``"euclidean"`` (default, distances on the cube) or ``"periodic"``
        (distances on the torus).
    """

    points: np.ndarray
    values: Optional[np.ndarray] = None
    metric: Metric = "euclidean"
    dim: int = field(init=False)

    def __post_init__(self):
        pts = _as_points(self.points)
        if pts.shape[0] < 1:
            raise ValueError("a node set needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise DomainError("node coordinates must be finite")
        if np.any(np.abs(pts) > np.pi + _BOX_TOL):
            raise DomainError("node coordinates must lie in [-pi, pi]")
        if self.metric not in ("euclidean", "periodic"):
            raise ValueError(f"unknown metric {self.metric!r}")
        pts = np.clip(pts, -np.pi, np.pi)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dim", pts.shape[1])
        if self.values is not None:
            vals = np.asarray(self.values, dtype=float).reshape(-1)
            if vals.shape[0] != pts.shape[0]:
                raise ValueError(f"{vals.shape[0]} values for {pts.shape[0]} points")
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.points.shape[0]

    def with_values(self, values) -> "NodeSet":
        return NodeSet(self.points, values, self.metric)

    def with_metric(self, metric: Metric) -> "NodeSet":
        return NodeSet(self.points, self.values, metric)


@dataclass(frozen=True)
class GeometrySummary:
    mesh_norm: float
    separation_radius: float
    min_sep_integer: int
    probe_spacing: float


def distance(x, y, metric: Metric = "euclidean") -> float:
    """Distance between two points; ``periodic`` wraps every coordinate by 2*pi."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    d = np.abs(x - y)
    if metric == "periodic":
        d = np.mod(d, TWO_PI)
        d = np.minimum(d, TWO_PI - d)
    elif metric != "euclidean":
        raise ValueError(f"unknown metric {metric!r}")
    return float(np.sqrt(np.sum(d * d)))


def _tree(points: np.ndarray, metric: Metric) -> cKDTree:
    if metric == "periodic":
        wrapped = np.mod(points, TWO_PI)
        wrapped[wrapped >= TWO_PI] = 0.0
        return cKDTree(wrapped, boxsize=TWO_PI)
    return cKDTree(points)


def _query_points(points: np.ndarray, metric: Metric) -> np.ndarray:
    if metric == "periodic":
        wrapped = np.mod(points, TWO_PI)
        wrapped[wrapped >= TWO_PI] = 0.0
        return wrapped
    return points


def probe_grid(dim: int, per_axis: int, lo: float = -np.pi, hi: float = np.pi):
    """Uniform tensor grid with ``per_axis`` points per coordinate.

    Returns the ``(per_axis**dim, dim)`` probe array and its spacing.
    """
    per_axis = max(int(per_axis), 2)
    axis = np.linspace(lo, hi, per_axis)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1), (hi - lo) / (per_axis - 1)


def default_probe_grid(nodes: NodeSet, per_node: int = 32, max_probes: int = 2_000_000):
    """Probe grid over ``[-pi, pi]^q`` with about ``per_node`` probes per node spacing."""
    per_axis = per_node * math.ceil(len(nodes) ** (1.0 / nodes.dim))
    per_axis = min(per_axis, int(max_probes ** (1.0 / nodes.dim)))
    return probe_grid(nodes.dim, per_axis)


def mesh_norm(nodes: NodeSet, probes=None) -> float:
    """Largest distance from a probe point to its nearest node.

    ``probes`` is a finite ``(P, q)`` array approximating the region K; by
    default a uniform grid on ``[-pi, pi]^q`` from :func:`default_probe_grid`.
    The result underestimates the true supremum by at most the probe spacing.
    """
    if len(nodes) == 0:
        raise ValueError("empty node set")
    if probes is None:
        probes, _ = default_probe_grid(nodes)
    probes = _as_points(probes, nodes.dim)
    dist, _ = _tree(nodes.points, nodes.metric).query(_query_points(probes, nodes.metric))
    return float(np.max(dist))


def separation_radius(nodes: NodeSet) -> float:
    """Half the minimal pairwise distance; raises :class:`DuplicateNodes` on repeats."""
    if len(nodes) < 2:
        raise ValueError("separation radius needs at least two nodes")
    tree = _tree(nodes.points, nodes.metric)
    dist, _ = tree.query(_query_points(nodes.points, nodes.metric), k=2)
    dmin = float(np.min(dist[:, 1]))
    if dmin == 0.0:
        raise DuplicateNodes("node set contains duplicate points")
    return 0.5 * dmin


def min_separation_integer(eta: float) -> int:
    """Smallest integer m with 1/m <= 2*eta, i.e. every pairwise distance >= 1/m."""
    if eta <= 0:
        raise DuplicateNodes("separation radius must be positive")
    return max(1, math.ceil(1.0 / (2.0 * eta) - 1e-12))


def summarize(nodes: NodeSet, probes=None) -> GeometrySummary:
    if probes is None:
        probes, spacing = default_probe_grid(nodes)
    else:
        probes = _as_points(probes, nodes.dim)
        # largest nearest-neighbour gap among the probes
        spacing = float(np.max(cKDTree(probes).query(probes, k=2)[0][:, 1])) if len(probes) > 1 else float("inf")
    delta = mesh_norm(nodes, probes)
    eta = separation_radius(nodes) if len(nodes) > 1 else float("inf")
    m = min_separation_integer(eta) if len(nodes) > 1 else 1
    return GeometrySummary(delta, eta, m, spacing)


def cosine_lift(x) -> np.ndarray:
    """Map ``[-1, 1]^q`` to ``[0, pi]^q`` by ``theta = arccos(x)``.

    Coordinates outside ``[-1, 1]`` by at most 1e-12 are clamped; anything
    further out raises :class:`DomainError`.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + LIFT_TOL) or not np.all(np.isfinite(x)):
        raise DomainError("cosine lift needs coordinates in [-1, 1]")
    return np.arccos(np.clip(x, -1.0, 1.0))


def cosine_unlift(theta) -> np.ndarray:
    return np.cos(np.asarray(theta, dtype=float))


def equispaced_interval_nodes(n: int) -> NodeSet:
    """The ``n`` interior points ``-1 + 2j/(n+1)``, ``j = 1..n``."""
    if n < 1:
        raise ValueError("n must be positive")
    j = np.arange(1, n + 1, dtype=float)
    return NodeSet((-1.0 + 2.0 * j / (n + 1)).reshape(-1, 1))


def read_nodes(path, metric: Metric = "euclidean") -> NodeSet:
    """Read a node CSV with header ``x1,...,xq[,value]``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [[float(v) for v in row] for row in reader if row]
    has_values = header[-1] == "value"
    dim = len(header) - int(has_values)
    if dim < 1 or any(h != f"x{i + 1}" for i, h in enumerate(header[:dim])):
        raise ValueError(f"bad node header {header}")
    arr = np.asarray(rows, dtype=float).reshape(-1, len(header))
    values = arr[:, dim] if has_values else None
    return NodeSet(arr[:, :dim], values, metric)


def write_nodes(path, nodes: NodeSet) -> None:
    header = [f"x{i + 1}" for i in range(nodes.dim)]
    if nodes.values is not None:
        header.append("value")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for j in range(len(nodes)):
            row = [f"{v:.17g}" for v in nodes.points[j]]
            if nodes.values is not None:
                row.append(f"{nodes.values[j]:.17g}")
            w.writerow(row)
