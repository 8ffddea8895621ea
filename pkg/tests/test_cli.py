import csv
import json
import shutil
import subprocess

import numpy as np
import pytest

from msn.cli import main
from msn.geometry import NodeSet, write_nodes
from msn.rkhs import build_gram, kernel_fit
from msn.trigpoly import read_coeffs


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def node_file(tmp_path, rng):
    pts = rng.uniform(-3, 3, (12, 1))
    path = tmp_path / "nodes.csv"
    write_nodes(path, NodeSet(pts, np.sin(pts[:, 0])))
    return path


def test_fit_and_eval_roundtrip(tmp_path, node_file):
    coeffs = tmp_path / "c.csv"
    vals = tmp_path / "v.csv"
    assert main(["fit", "--nodes", str(node_file), "--s", "1.5", "--order", "auto", "--out", str(coeffs)]) == 0
    assert len(read_coeffs(coeffs).index_set) == 2 * 24 + 1
    assert main(["eval", "--coeffs", str(coeffs), "--points", str(node_file), "--out", str(vals)]) == 0
    rows = read_rows(vals)
    assert rows[0] == ["x1", "re", "im"]
    data = np.array(rows[1:], dtype=float)
    nodes = np.array(read_rows(node_file)[1:], dtype=float)
    np.testing.assert_allclose(data[:, 1], nodes[:, 1], atol=1e-10)
    assert np.max(np.abs(data[:, 2])) <= 1e-12


def test_fit_interval_mode(tmp_path):
    x = np.array([-0.8, -0.3, 0.1, 0.6, 0.9])
    nodes = tmp_path / "n.csv"
    write_nodes(nodes, NodeSet(x.reshape(-1, 1), x**2))
    coeffs = tmp_path / "c.csv"
    vals = tmp_path / "v.csv"
    assert main(["fit", "--nodes", str(nodes), "--s", "2", "--mode", "interval", "--order", "8", "--out", str(coeffs)]) == 0
    assert main(["eval", "--coeffs", str(coeffs), "--points", str(nodes), "--mode", "interval", "--out", str(vals)]) == 0
    data = np.array(read_rows(vals)[1:], dtype=float)
    np.testing.assert_allclose(data[:, 1], x**2, atol=1e-10)


def test_exit_codes(tmp_path, node_file, capsys):
    out = str(tmp_path / "c.csv")
    assert main(["fit", "--nodes", str(node_file), "--s", "1.5", "--order", "2", "--out", out]) == 3
    near = tmp_path / "near.csv"
    write_nodes(near, NodeSet([[0.1], [0.1 + 1e-13], [1.0]], [1.0, 2.0, 0.0]))
    assert main(["fit", "--nodes", str(near), "--s", "1.5", "--order", "6", "--out", out]) == 2
    assert main(["fit", "--nodes", str(tmp_path / "missing.csv"), "--s", "1.5", "--out", out]) == 1
    nov = tmp_path / "novalues.csv"
    write_nodes(nov, NodeSet([[0.1], [0.2]]))
    assert main(["fit", "--nodes", str(nov), "--s", "1.5", "--out", out]) == 1
    assert "msn:" in capsys.readouterr().err


def test_rkhs_fit(tmp_path, node_file):
    out = tmp_path / "r.csv"
    assert main(["rkhs-fit", "--nodes", str(node_file), "--s", "1.5", "--level", "5", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0] == ["x1", "c"]
    c = np.array(rows[1:], dtype=float)[:, 1]
    pts = np.array(read_rows(node_file)[1:], dtype=float)
    ref = kernel_fit(build_gram(NodeSet(pts[:, :1], pts[:, 1], "periodic"), 1.5, 5)).coeffs
    np.testing.assert_array_equal(c, ref)


def test_bench_runge(tmp_path):
    out = tmp_path / "t1.csv"
    assert main(["--seed", "7", "bench", "runge", "--n", "31,61", "--s", "2.5", "--out", str(out), "--seed", "3"]) == 0
    rows = read_rows(out)
    assert rows[0] == ["n", "s=2.5", "Spline"]
    assert [r[0] for r in rows[1:]] == ["31", "61"]
    side = json.loads(out.with_suffix(".json").read_text())
    assert set(side) == {"runge", "spline"}


def test_bench_annulus(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["bench", "annulus", "--tables", "5,6", "--rows", "1", "--s", "1", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0] == ["table", "n", "nodes", "m", "s=1"]
    assert [r[:4] for r in rows[1:]] == [["table5", "21", "145", "484"], ["table6", "21", "145", "484"]]


@pytest.mark.skipif(shutil.which("msn") is None, reason="console script not installed")
def test_console_script(tmp_path, node_file):
    out = tmp_path / "c.csv"
    res = subprocess.run(["msn", "fit", "--nodes", str(node_file), "--s", "1.5", "--order", "2", "--out", str(out)])
    assert res.returncode == 3
