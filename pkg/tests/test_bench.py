import json
import math

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from msn.bench import (
    TABLES,
    ErrorReport,
    ErrorRow,
    NaturalCubicSpline,
    annulus_target,
    convergence_fit,
    cubic_spline_baseline,
    grid_degree,
    grid_nodes,
    runge,
    runge_experiment,
    target_function,
    write_annulus_tables,
    write_sidecar,
    write_table1,
)
from msn.geometry import equispaced_interval_nodes

# printed values of the 1D table, columns s = 1.5 and s = 6.5 and the spline column
PAPER_S15 = {31: 3.6212e-03, 61: 4.5758e-04, 121: 1.7844e-04, 241: 6.7863e-05, 481: 2.5210e-05, 961: 9.2203e-06}
PAPER_S65 = {31: 1.0127e00, 61: 2.0644e-04, 121: 2.7949e-07, 241: 2.7632e-07, 481: 7.2588e-06, 961: 7.3983e-04}
PAPER_SPLINE = {31: 3.5710e-03, 61: 6.5167e-04, 121: 4.1035e-05}


def test_targets():
    assert runge(0.0) == 1.0
    assert target_function("runge", 0.5) == pytest.approx(1 / 26)
    # points with r exactly 1 or 1/4 (the 1/8 power magnifies any rounding in r)
    for p in ([1.0, 0.0], [0.0, -1.0], [0.25, 0.0], [0.0, 0.25], [-0.25, 0.0]):
        assert annulus_target(np.array([p]))[0] == 0.0
    x, y = 0.3, -0.4
    r, t = 0.5, math.atan2(y, x)
    ref = abs(r - 0.25) ** 0.125 * abs(1 - r) ** 0.8 * math.sin(r * (2 * math.cos(t) + math.sin(t)))
    assert annulus_target(x, y) == pytest.approx(ref, rel=1e-14)


# --- spline baseline ----------------------------------------------------------

def test_spline_matches_scipy_natural(rng):
    x = np.sort(rng.uniform(-1, 1, 15))
    y = rng.standard_normal(15)
    t = np.linspace(x[0], x[-1], 500)
    np.testing.assert_allclose(NaturalCubicSpline(x, y)(t), CubicSpline(x, y, bc_type="natural")(t), atol=1e-12)


def test_spline_reproduces_linear():
    x = equispaced_interval_nodes(12).points[:, 0]
    t = np.linspace(x[0], x[-1], 300)
    assert np.max(np.abs(NaturalCubicSpline(x, x)(t) - t)) <= 1e-12


def test_spline_values():
    rep = cubic_spline_baseline([31, 121])
    assert rep.error(31, None) == pytest.approx(PAPER_SPLINE[31], rel=0.05)
    assert rep.error(121, None) == pytest.approx(PAPER_SPLINE[121], rel=0.05)
    with pytest.raises(ValueError):
        cubic_spline_baseline([3])
    with pytest.raises(ValueError):
        NaturalCubicSpline([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])


# --- Runge experiment ------------------------------------------------------------

def test_runge_cells():
    rep = runge_experiment([31, 121], [2.5, 3.5])
    assert rep.error(31, 2.5) == pytest.approx(3.1000e-03, rel=9.0)
    assert 8.4610e-9 <= rep.error(121, 3.5) <= 8.4610e-7
    assert [(r.n, r.s) for r in rep.rows] == [(31, 2.5), (31, 3.5), (121, 2.5), (121, 3.5)]
    assert all(r.m == 2 * r.n + 1 and r.status == "ok" for r in rep.rows)
    with pytest.raises(ValueError):
        runge_experiment([3], [2.5])


def test_runge_constant_defect():
    # the least-norm solution does not reproduce constants for finite degree
    rep = runge_experiment([31, 121], [2.5], target=lambda x: np.ones_like(x))
    defects = [r.error for r in rep.rows]
    assert all(np.isfinite(d) and 0 < d < 1e-3 for d in defects)
    assert defects[1] < defects[0]


def test_runge_failed_cell_is_marked():
    rep = runge_experiment([241], [9.5])
    assert rep.rows[0].status == "RankDeficient" and math.isnan(rep.rows[0].error)


def test_runge_deterministic(tmp_path):
    paths = []
    for k in range(2):
        msn = runge_experiment([31, 61], [1.5, 2.5])
        spline = cubic_spline_baseline([31, 61])
        p = tmp_path / f"t{k}.csv"
        write_table1(p, msn, spline)
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]
    lines = paths[0].decode().splitlines()
    assert lines[0] == "n,s=1.5,s=2.5,Spline"
    assert len(lines) == 3


# --- convergence -------------------------------------------------------------------

def _report(col, s):
    return ErrorReport("x", [ErrorRow(n, s, 2 * n + 1, e) for n, e in col.items()])


def test_convergence_published_column():
    fit = convergence_fit(_report(PAPER_S15, 1.5))[1.5]
    assert fit.slope >= 1.0 and not fit.flagged


def test_convergence_flat_column_flagged():
    fit = convergence_fit(_report({n: 1e-3 for n in (31, 61, 121, 241)}, 2.5))[2.5]
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert fit.flagged


def test_convergence_excludes_conditioning_rows():
    fit = convergence_fit(_report(PAPER_S65, 6.5))[6.5]
    # the printed column rises from n = 481 on
    assert fit.n_used == [31, 61, 121, 241]


def test_convergence_needs_rows():
    with pytest.raises(ValueError):
        convergence_fit(_report({31: 1e-2, 61: 1e-3}, 1.5))


# --- 2D grids ------------------------------------------------------------------------

def test_grid_construction():
    assert grid_degree(0.1) == 21 and (grid_degree(0.1) + 1) ** 2 == 484
    assert (grid_degree(0.05) + 1) ** 2 == 1764
    data = grid_nodes(0.1, TABLES[2].data_predicate)
    r = np.hypot(data[:, 0], data[:, 1])
    assert np.count_nonzero((r > 0.5) & (r < 0.75)) == 100
    data5 = grid_nodes(0.1, TABLES[5].data_predicate)
    assert np.count_nonzero(np.hypot(data5[:, 0], data5[:, 1]) < 0.25) == 21
    assert np.all(np.abs(data) <= 1 + 1e-12)
    for t in (2, 3, 4):
        assert TABLES[t].data_region == TABLES[2].data_region


def test_annulus_writers(tmp_path):
    rows = [
        ErrorRow(100, 1.0, 484, 2e-3, region="table2", nodes=222),
        ErrorRow(100, 2.0, 484, 1e-3, region="table2", nodes=222),
        ErrorRow(21, 1.0, 484, 5e-3, region="table5", nodes=145),
    ]
    rep = ErrorReport("annulus", rows)
    path = tmp_path / "a.csv"
    write_annulus_tables(path, rep)
    lines = path.read_text().splitlines()
    assert lines[0] == "table,n,nodes,m,s=1,s=2"
    assert lines[1].startswith("table2,100,222,484,0.002")
    write_sidecar(tmp_path / "a.json", rep)
    data = json.loads((tmp_path / "a.json").read_text())
    assert len(data["annulus"]) == 3
