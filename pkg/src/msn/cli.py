"""Command-line interface: ``msn fit | eval | rkhs-fit | bench``.

Exit codes: 0 success, 1 other library error, 2 RankDeficient,
3 InsufficientDegree.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from msn import bench
from msn.errors import InsufficientDegree, MsnError, RankDeficient
from msn.geometry import NodeSet, cosine_lift, read_nodes
from msn.rkhs import build_gram, kernel_fit
from msn.solver import MsnProblem, OrderRule, msn_fit, select_order
from msn.trigpoly import MultiIndexSet, evaluate_many, read_coeffs, write_coeffs

log = logging.getLogger("msn")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _auto_order(nodes: NodeSet) -> int:
    # 1D: twice the node count as in the Runge runs; otherwise 4 / eta
    if nodes.dim == 1:
        return select_order(nodes, OrderRule.multiplier_of_nodes(2.0))
    return select_order(nodes, OrderRule.inverse_separation(4.0))


def cmd_fit(args) -> int:
    raw = read_nodes(args.nodes)
    if raw.values is None:
        raise ValueError("node file has no value column")
    if args.mode == "interval":
        nodes = NodeSet(cosine_lift(raw.points), raw.values)
        order = _auto_order(nodes) if args.order == "auto" else int(args.order)
        fit = msn_fit(MsnProblem(nodes, args.s, mode="interval_cosine", degree=order))
    else:
        nodes = raw.with_metric("periodic")
        order = _auto_order(nodes) if args.order == "auto" else int(args.order)
        iset = MultiIndexSet(nodes.dim, order, args.shape)
        fit = msn_fit(MsnProblem(nodes, args.s, iset))
    write_coeffs(args.out, fit.as_trigpoly())
    log.info(
        "fit: M=%d order=%d residual=%.3g cond=%.3g norm=%.6g",
        len(nodes), order, fit.max_residual, fit.solver_stats.condition, fit.sobolev_norm,
    )
    return 0


def cmd_eval(args) -> int:
    T = read_coeffs(args.coeffs)
    pts = read_nodes(args.points).points
    if pts.shape[1] != T.dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, coefficients {T.dim}")
    x = cosine_lift(pts) if args.mode == "interval" else pts
    vals = evaluate_many(T, x)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(T.dim)] + ["re", "im"])
        for p, v in zip(pts, vals):
            w.writerow([f"{c:.17g}" for c in p] + [f"{v.real:.17g}", f"{v.imag:.17g}"])
    return 0


def cmd_rkhs_fit(args) -> int:
    nodes = read_nodes(args.nodes, metric="periodic")
    if nodes.values is None:
        raise ValueError("node file has no value column")
    system = build_gram(nodes, args.s, args.level)
    fit = kernel_fit(system)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(nodes.dim)] + ["c"])
        for p, c in zip(nodes.points, fit.coeffs):
            w.writerow([f"{v:.17g}" for v in p] + [f"{c:.17g}"])
    log.info("rkhs-fit: M=%d level=%d residual=%.3g", len(nodes), system.level, fit.residual(nodes.values))
    return 0


def _sidecar(out: str) -> Path:
    return Path(out).with_suffix(".json")


def cmd_bench(args) -> int:
    if args.experiment == "runge":
        msn_report = bench.runge_experiment(args.n or bench.TABLE1_N, args.s or bench.TABLE1_S, args.multiplier)
        spline = bench.cubic_spline_baseline(args.n or bench.TABLE1_N)
        bench.write_table1(args.out, msn_report, spline)
        bench.write_sidecar(_sidecar(args.out), msn_report, spline)
    else:
        report = bench.annulus_experiment(args.tables, s_list=args.s or None, rows=args.rows)
        bench.write_annulus_tables(args.out, report)
        bench.write_sidecar(_sidecar(args.out), report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="msn", description="Minimum Sobolev norm interpolation")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--seed", type=int, default=None, help="accepted and ignored; all runs are deterministic")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="MSN interpolant of a node file")
    f.add_argument("--nodes", required=True)
    f.add_argument("--s", type=float, required=True)
    f.add_argument("--order", default="auto", help="integer order/degree or 'auto'")
    f.add_argument("--mode", choices=("torus", "interval"), default="torus")
    f.add_argument("--shape", choices=("spherical", "rectangular"), default="spherical")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="evaluate a coefficient file at points")
    e.add_argument("--coeffs", required=True)
    e.add_argument("--points", required=True)
    e.add_argument("--mode", choices=("torus", "interval"), default="torus")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("rkhs-fit", help="kernel interpolation with the truncated Sobolev kernel")
    r.add_argument("--nodes", required=True)
    r.add_argument("--s", type=float, required=True)
    r.add_argument("--level", type=int, default=None)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_rkhs_fit)

    b = sub.add_parser("bench", help="benchmark experiments")
    b.add_argument("experiment", choices=("runge", "annulus"))
    b.add_argument("--n", type=_ints, default=None)
    b.add_argument("--s", type=_floats, default=None)
    b.add_argument("--multiplier", type=float, default=2.0)
    b.add_argument("--tables", type=_ints, default=[2, 3, 4])
    b.add_argument("--rows", type=int, default=2)
    b.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except RankDeficient as exc:
        print(f"msn: rank deficient: {exc}", file=sys.stderr)
        return 2
    except InsufficientDegree as exc:
        print(f"msn: insufficient degree: {exc}", file=sys.stderr)
        return 3
    except (MsnError, ValueError, OSError) as exc:
        print(f"msn: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
