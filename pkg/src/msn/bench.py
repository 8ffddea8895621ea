"""Benchmark experiments: the 1D Runge table and the 2D annulus tables.

Everything here is deterministic; ``seed`` arguments exist only for
harness uniformity.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from msn.errors import MsnError
from msn.geometry import equispaced_interval_nodes
from msn.solver import RANK_TOL, interval_fit

log = logging.getLogger(__name__)

TABLE1_N = (31, 61, 121, 241, 481, 961)
TABLE1_S = (1.5, 2.5, 3.5, 4.5, 5.5, 6.5)
ANNULUS_S = (1.0, 2.0, 3.0, 4.0, 5.0)
ANNULUS_H = (0.1, 0.05, 0.025, 0.0125)
EVAL_GRID = 400


def runge(x):
    x = np.asarray(x, dtype=float)
    return 1.0 / (1.0 + 100.0 * x * x)


def annulus_target(x, y=None):
    """``|r - 1/4|^(1/8) |1 - r|^(4/5) sin(r (2 cos t + sin t))`` in polar coordinates."""
    if y is None:
        pts = np.asarray(x, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
    r = np.hypot(x, y)
    t = np.arctan2(y, x)
    return np.abs(r - 0.25) ** 0.125 * np.abs(1.0 - r) ** 0.8 * np.sin(r * (2.0 * np.cos(t) + np.sin(t)))


TARGETS: dict[str, Callable] = {"runge": runge, "annulus": annulus_target}


def target_function(name: str, point):
    return TARGETS[name](point)


@dataclass
class ErrorRow:
    n: int
    s: Optional[float]  # None for the spline baseline
    m: int
    error: float
    elapsed: float = 0.0
    condition: float = float("nan")
    status: str = "ok"
    region: str = ""
    nodes: int = 0  # total data points used by the fit


@dataclass
class ErrorReport:
    name: str
    rows: list[ErrorRow] = field(default_factory=list)

    def sort(self) -> "ErrorReport":
        self.rows.sort(key=lambda r: (r.region, r.n, -1.0 if r.s is None else r.s))
        return self

    def column(self, s: Optional[float], region: str = "") -> list[ErrorRow]:
        return sorted((r for r in self.rows if r.s == s and r.region == region), key=lambda r: r.n)

    def error(self, n: int, s: Optional[float], region: str = "") -> float:
        for r in self.rows:
            if r.n == n and r.s == s and r.region == region:
                return r.error
        raise KeyError((n, s, region))

    def extend(self, other: "ErrorReport") -> "ErrorReport":
        self.rows.extend(other.rows)
        return self

    def to_json(self) -> dict:
        return {"name": self.name, "rows": [asdict(r) for r in self.rows]}


def _runge_cell(n: int, s: float, multiplier: float, f, rank_tol: float) -> ErrorRow:
    nodes = equispaced_interval_nodes(n)
    x = nodes.points[:, 0]
    degree = int(round(multiplier * n))
    t0 = time.perf_counter()
    try:
        fit = interval_fit(x, f(x), s, degree, rank_tol=rank_tol)
    except MsnError as exc:
        log.warning("runge n=%d s=%g failed: %s", n, s, exc)
        return ErrorRow(n, s, degree + 1, float("nan"), time.perf_counter() - t0, status=type(exc).__name__, nodes=n)
    xe = np.linspace(-1.0, 1.0, 3 * n)
    err = float(np.max(np.abs(fit(xe) - f(xe))))
    return ErrorRow(n, s, degree + 1, err, time.perf_counter() - t0, fit.solver_stats.condition, nodes=n)


def runge_experiment(
    n_list: Iterable[int] = TABLE1_N,
    s_list: Iterable[float] = TABLE1_S,
    order_multiplier: float = 2.0,
    target: Callable = runge,
    rank_tol: float = RANK_TOL,
) -> ErrorReport:
    """MSN error on ``n`` equispaced nodes, cosine degree ``order_multiplier * n``.

    The maximum error is sampled at ``3n`` equispaced points of ``[-1, 1]``.
    Failed cells are kept with ``error = nan`` and the exception name as status.
    """
    report = ErrorReport("runge")
    for n in n_list:
        if n < 4:
            raise ValueError("runge experiment needs n >= 4")
        for s in s_list:
            report.rows.append(_runge_cell(int(n), float(s), order_multiplier, target, rank_tol))
    return report.sort()


class NaturalCubicSpline:
    """Interpolating cubic spline with zero second derivative at both ends."""

    def __init__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n = x.size
        if n < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("spline needs at least two strictly increasing nodes")
        h = np.diff(x)
        M = np.zeros(n)
        if n > 2:
            # tridiagonal system for interior second derivatives
            ab = np.zeros((3, n - 2))
            ab[0, 1:] = h[1:-1]
            ab[1] = 2.0 * (h[:-1] + h[1:])
            ab[2, :-1] = h[1:-1]
            rhs = 6.0 * (np.diff(y[1:]) / h[1:] - np.diff(y[:-1]) / h[:-1])
            M[1:-1] = sla.solve_banded((1, 1), ab, rhs)
        self.x, self.y, self.h, self.M = x, y, h, M

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.x, t, side="right") - 1, 0, self.x.size - 2)
        h = self.h[i]
        a = (self.x[i + 1] - t) / h
        b = (t - self.x[i]) / h
        return (
            a * self.y[i]
            + b * self.y[i + 1]
            + ((a**3 - a) * self.M[i] + (b**3 - b) * self.M[i + 1]) * h * h / 6.0
        )


def cubic_spline_baseline(n_list: Iterable[int] = TABLE1_N, target: Callable = runge) -> ErrorReport:
    """Natural cubic spline on the same nodes and the same ``3n`` error grid."""
    report = ErrorReport("spline")
    for n in n_list:
        if n < 4:
            raise ValueError("spline baseline needs n >= 4")
        x = equispaced_interval_nodes(n).points[:, 0]
        t0 = time.perf_counter()
        spline = NaturalCubicSpline(x, target(x))
        xe = np.linspace(-1.0, 1.0, 3 * n)
        err = float(np.max(np.abs(spline(xe) - target(xe))))
        report.rows.append(ErrorRow(n, None, n, err, time.perf_counter() - t0, nodes=n))
    return report.sort()


# --- 2D experiments --------------------------------------------------------

def _annulus(lo: float, hi: float) -> Callable:
    return lambda r: (r > lo) & (r < hi)


REGIONS: dict[str, Callable] = {
    "1/2<r<3/4": _annulus(0.5, 0.75),
    "3/4<r<19/20": _annulus(0.75, 0.95),
    "1/4<r<3/10": _annulus(0.25, 0.3),
    "r<1/5": lambda r: r < 0.2,
    "1.1<r": lambda r: r > 1.1,
    "r<1/4": lambda r: r < 0.25,
}


def _union(*names: str) -> Callable:
    return lambda r: np.logical_or.reduce([REGIONS[nm](r) for nm in names])


@dataclass(frozen=True)
class ExperimentSpec:
    """One 2D table: where the data come from and where the error is measured.

    ``count_region`` names the region whose data points make up the row
    label ``n``; it is shared by all tables fitted on the same data.
    """

    name: str
    data_region: str
    data_predicate: Callable
    count_region: str
    eval_region: str
    target: str = "annulus"
    s_values: tuple = ANNULUS_S
    grid_h: tuple = ANNULUS_H
    eval_grid: int = EVAL_GRID


# Tables 2-4 share one interpolant fitted on the union of their evaluation annuli;
# Tables 5-6 share one fitted on {r < 1/4} u {r > 1} inside the square.
_DATA_234 = ("annuli", _union("1/2<r<3/4", "3/4<r<19/20", "1/4<r<3/10"), "1/2<r<3/4")
_DATA_56 = ("r<1/4 or r>1", lambda r: (r < 0.25) | (r > 1.0), "r<1/4")

TABLES: dict[int, ExperimentSpec] = {
    2: ExperimentSpec("table2", *_DATA_234, "1/2<r<3/4"),
    3: ExperimentSpec("table3", *_DATA_234, "3/4<r<19/20"),
    4: ExperimentSpec("table4", *_DATA_234, "1/4<r<3/10"),
    5: ExperimentSpec("table5", *_DATA_56, "r<1/5"),
    6: ExperimentSpec("table6", *_DATA_56, "1.1<r"),
}


def grid_nodes(h: float, predicate: Callable) -> np.ndarray:
    """Vertices ``-1 + j h`` of the square grid on ``[-1, 1]^2`` accepted by ``predicate(r)``."""
    steps = int(round(2.0 / h))
    axis = -1.0 + h * np.arange(steps + 1)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    return pts[predicate(np.hypot(pts[:, 0], pts[:, 1]))]


def grid_degree(h: float) -> int:
    """Coordinatewise cosine degree for grid step ``h``: ``floor(2/h) + 1``.

    This gives ``m = (degree + 1)^2`` coefficients, 484 for ``h = 0.1``.
    """
    return int(math.floor(2.0 / h + 1e-9)) + 1


def _eval_points(density: int) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, density)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def annulus_experiment(
    tables: Sequence[int] = (2, 3, 4),
    grid_h: Optional[Sequence[float]] = None,
    s_list: Optional[Sequence[float]] = None,
    rows: Optional[int] = None,
    rank_tol: float = RANK_TOL,
) -> ErrorReport:
    """2D MSN fits on grid data, maximum error over masked evaluation grids.

    Tables sharing a data region share each fitted interpolant.  ``rows``
    keeps the first that many grid steps.  ``n`` in the report is the number
    of data points inside the table's ``count_region``.
    """
    specs = [TABLES[t] for t in tables]
    report = ErrorReport("annulus")
    pts_eval = _eval_points(specs[0].eval_grid)
    r_eval = np.hypot(pts_eval[:, 0], pts_eval[:, 1])
    groups: dict[str, list[ExperimentSpec]] = {}
    for spec in specs:
        groups.setdefault(spec.data_region, []).append(spec)
    for members in groups.values():
        base = members[0]
        f = TARGETS[base.target]
        hs = list(grid_h or base.grid_h)[: rows or None]
        for h in hs:
            data = grid_nodes(h, base.data_predicate)
            r_data = np.hypot(data[:, 0], data[:, 1])
            degree = grid_degree(h)
            m = (degree + 1) ** 2
            fvals = f(data)
            n_in = int(np.count_nonzero(REGIONS[base.count_region](r_data)))
            for s in s_list or base.s_values:
                t0 = time.perf_counter()
                try:
                    fit = interval_fit(data, fvals, float(s), degree, rank_tol=rank_tol)
                except MsnError as exc:
                    log.warning("annulus h=%g s=%g failed: %s", h, s, exc)
                    for spec in members:
                        report.rows.append(
                            ErrorRow(n_in, float(s), m, float("nan"), status=type(exc).__name__, region=spec.name, nodes=len(data))
                        )
                    continue
                err = np.abs(fit(pts_eval) - f(pts_eval))
                elapsed = time.perf_counter() - t0
                for spec in members:
                    mask = REGIONS[spec.eval_region](r_eval)
                    report.rows.append(
                        ErrorRow(
                            n_in, float(s), m, float(np.max(err[mask])), elapsed,
                            fit.solver_stats.condition, region=spec.name, nodes=len(data),
                        )
                    )
                log.info("annulus h=%g s=%g: %d nodes, m=%d, %.2fs", h, s, len(data), m, elapsed)
    return report.sort()


# --- convergence ------------------------------------------------------------

@dataclass
class ConvergenceFit:
    s: float
    slope: float
    floor: float
    n_used: list
    flagged: bool


def convergence_fit(report: ErrorReport, q: int = 1, region: str = "") -> dict[float, ConvergenceFit]:
    """Slope of ``log(error)`` against ``log(1/n)`` per ``s``.

    Rows after the first increase of the error (conditioning-dominated) are
    excluded.  A column is flagged when its slope is below ``s - q/2 - 0.5``.
    """
    out = {}
    for s in sorted({r.s for r in report.rows if r.s is not None and r.region == region}):
        col = [r for r in report.column(s, region) if math.isfinite(r.error) and r.error > 0]
        used = col[:1]
        for r in col[1:]:
            if r.error > used[-1].error:
                break
            used.append(r)
        if len(used) < 3:
            raise ValueError(f"fewer than 3 usable rows for s={s}")
        n = np.array([r.n for r in used], dtype=float)
        e = np.array([r.error for r in used])
        slope = float(np.polyfit(np.log(1.0 / n), np.log(e), 1)[0])
        floor = s - q / 2.0
        out[s] = ConvergenceFit(s, slope, floor, [r.n for r in used], slope < floor - 0.5)
    return out


# --- output -----------------------------------------------------------------

def _fmt(v: float) -> str:
    return "nan" if not math.isfinite(v) else f"{v:.17g}"


def write_table1(path, msn: ErrorReport, spline: Optional[ErrorReport] = None) -> None:
    """CSV in the layout ``n, s=..., ..., Spline`` with 17 significant digits."""
    s_vals = sorted({r.s for r in msn.rows})
    ns = sorted({r.n for r in msn.rows} | ({r.n for r in spline.rows} if spline else set()))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n"] + [f"s={s:g}" for s in s_vals] + (["Spline"] if spline else []))
        for n in ns:
            row = [str(n)]
            for s in s_vals:
                try:
                    row.append(_fmt(msn.error(n, s)))
                except KeyError:
                    row.append("")
            if spline:
                try:
                    row.append(_fmt(spline.error(n, None)))
                except KeyError:
                    row.append("")
            w.writerow(row)


def write_annulus_tables(path, report: ErrorReport) -> None:
    """CSV with columns ``table, n, nodes, m, s=..., ...`` (one block per table).

    ``n`` counts data points inside the table's count region, ``nodes``
    all data points of the fit.
    """
    s_vals = sorted({r.s for r in report.rows})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["table", "n", "nodes", "m"] + [f"s={s:g}" for s in s_vals])
        tables = sorted({r.region for r in report.rows}, key=lambda t: int(t.removeprefix("table")))
        for t in tables:
            rows = [r for r in report.rows if r.region == t]
            for key in sorted({(r.m, r.n, r.nodes) for r in rows}):
                cells = {r.s: r.error for r in rows if (r.m, r.n, r.nodes) == key}
                w.writerow([t, key[1], key[2], key[0]] + [_fmt(cells[s]) if s in cells else "" for s in s_vals])


def write_sidecar(path, *reports: ErrorReport) -> None:
    with open(path, "w") as fh:
        json.dump({r.name: r.to_json()["rows"] for r in reports}, fh, indent=2, default=float)
