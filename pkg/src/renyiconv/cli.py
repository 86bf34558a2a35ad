"""Command line front end.

Subcommands wrap the library: `iterate` runs the fixed-point update for a
fixed number of steps and emits per-iterate data, `solve` runs it to
convergence, `el-residual` scores a CSV density against the stationarity
equation, `counterexample` emits the exact non-extremality certificate for
the quadratic bump, `gengauss` prints the normalized power density, and
`compare` pits the converged fixed point against the generalized Gaussian
on the same constraint set.

Every command writes its outputs plus a manifest.json into --out.  Output
is data only (JSON and CSV); manifests carry no timestamps so identical
configurations reproduce identical bytes.  All writes go through a
temp-file-and-rename so readers never observe partial files.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__
from . import grid as _grid
from .entropy import (
    ConstraintSet,
    DegenerateDensity,
    NoBracket,
    ZeroMass,
    exact_gengauss_p2_for_lp_mass,
    gengauss,
    gengauss_for_lp_mass,
    objective_I,
    renyi_entropy,
    scale_to_feasible,
)
from .euler_lagrange import InfeasibleInput, counterexample_check, el_residual, estimate_x6_grid
from .grid import GridFunction
from .piecewise import PiecewisePoly, format_rational
from .solver import NotConverged, SolverConfig, initial_iterate, iterate_once, run_fixed_point

PLOT_NODES = 2001  # samples on [-1, 1] for plot CSVs


def _atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, obj) -> None:
    _atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_manifest(out_dir: str, command: str, config: dict, outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config": config,
        "versions": {"renyiconv": __version__},
        "outputs": sorted(outputs),
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _config_echo(args: argparse.Namespace) -> dict:
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "command"):
            continue
        cfg[k] = v
    return cfg


def _plot_csv_path(out_dir: str, name: str) -> str:
    return os.path.join(out_dir, name)


def _write_plot_csv(path: str, xs: np.ndarray, vals: np.ndarray) -> None:
    lines = ["x,value"]
    for x, v in zip(xs, vals):
        lines.append(f"{x:.17g},{v:.17g}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _sample_exact_on_unit(f: PiecewisePoly) -> tuple[np.ndarray, np.ndarray]:
    xs = np.linspace(-1.0, 1.0, PLOT_NODES)
    vals = np.array([float(f.eval(Fraction(k, (PLOT_NODES - 1) // 2) - 1)) for k in range(PLOT_NODES)])
    return xs, vals


def _sample_grid_on_unit(g: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    xs = np.linspace(-1.0, 1.0, PLOT_NODES)
    vals = np.interp(xs, g.nodes, g.values, left=0.0, right=0.0)
    return xs, vals


def _exact_iterate_json(j: int, f: PiecewisePoly) -> dict:
    doc: dict = {"step": j, "pieces": f.to_json_dict()}
    pieces = list(f.intervals())
    if len(pieces) == 1:
        lo, hi, poly = pieces[0]
        doc["support"] = [format_rational(lo), format_rational(hi)]
        doc["coefficients"] = [format_rational(c) for c in poly.coeffs]
    return doc


def cmd_iterate(args: argparse.Namespace) -> int:
    if args.steps < 0:
        print("error: --steps must be nonnegative", file=sys.stderr)
        return 2
    out = args.out
    os.makedirs(out, exist_ok=True)
    outputs: list[str] = []
    step_log: list[dict] = []

    if args.mode == "exact":
        f: PiecewisePoly = initial_iterate(SolverConfig(mode="exact"))
        prev_vals = None
        for j in range(args.steps + 1):
            if j > 0:
                f = iterate_once(f)
            jname = f"f{j}.json"
            _write_json(os.path.join(out, jname), _exact_iterate_json(j, f))
            cname = f"f{j}.csv"
            xs, vals = _sample_exact_on_unit(f)
            _write_plot_csv(_plot_csv_path(out, cname), xs, vals)
            outputs += [jname, cname]
            if j > 0:
                sup_step = float(np.max(np.abs(vals - prev_vals)))
                step_log.append({"step": j, "sup_step": f"{sup_step:.17g}"})
            prev_vals = vals
    else:
        g: GridFunction = initial_iterate(SolverConfig(mode="grid", dx=args.dx))
        grids = [g]
        for j in range(1, args.steps + 1):
            g_new = iterate_once(g)
            sup_step = float(np.max(np.abs(g_new.values - g.values)))
            step_log.append({"step": j, "sup_step": f"{sup_step:.17g}"})
            g = g_new
            grids.append(g)
        for j, gj in enumerate(grids):
            cname = f"f{j}.csv"
            xs, vals = _sample_grid_on_unit(gj)
            _write_plot_csv(_plot_csv_path(out, cname), xs, vals)
            outputs.append(cname)

    _write_json(os.path.join(out, "steps.json"), step_log)
    outputs.append("steps.json")
    _write_manifest(out, "iterate", _config_echo(args), outputs)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    out = args.out
    os.makedirs(out, exist_ok=True)
    config = SolverConfig(
        mode=args.mode,
        n=args.n,
        p=args.p,
        max_iter=args.max_iter,
        tol=args.tol,
        dx=args.dx,
        general_update=(args.n, args.p) != (2, 2.0),
    )
    exit_code = 0
    try:
        sol = run_fixed_point(config)
    except NotConverged as exc:
        sol = exc.solution
        exit_code = 3
        print(f"error: {exc}", file=sys.stderr)

    doc = {
        "mode": args.mode,
        "a": f"{float(sol.a):.17g}" if args.mode == "grid" else format_rational(sol.a),
        "b": f"{float(sol.b):.17g}" if args.mode == "grid" else format_rational(sol.b),
        "iterations": sol.iterations,
        "final_step_sup": f"{sol.final_step_sup:.17g}",
        "el_residual_sup": f"{sol.el_residual_sup:.17g}",
        "clip_was_active": sol.clip_was_active,
        "converged": exit_code == 0,
    }
    _write_json(os.path.join(out, "solution.json"), doc)
    if args.mode == "exact":
        xs, vals = _sample_exact_on_unit(sol.f)
    else:
        xs, vals = _sample_grid_on_unit(sol.f)
    _write_plot_csv(os.path.join(out, "solution.csv"), xs, vals)
    _write_json(os.path.join(out, "history.json"),
                [{"step": r.iteration, "sup_step": f"{r.sup_step:.17g}"} for r in sol.history])
    _write_manifest(out, "solve", _config_echo(args),
                    ["solution.json", "solution.csv", "history.json"])
    return exit_code


def cmd_el_residual(args: argparse.Namespace) -> int:
    out = args.out
    os.makedirs(out, exist_ok=True)
    try:
        q = _grid.read_csv(args.input)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read {args.input}: {exc}", file=sys.stderr)
        return 2
    try:
        rep = el_residual(q, args.n, args.p, args.M)
    except (InfeasibleInput, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write_json(os.path.join(out, "el_residual.json"), rep.to_json_dict())
    _write_manifest(out, "el-residual", _config_echo(args), ["el_residual.json"])
    return 0


def cmd_counterexample(args: argparse.Namespace) -> int:
    out = args.out
    os.makedirs(out, exist_ok=True)
    rep = counterexample_check()
    doc = rep.to_json_dict()
    if args.grid_check:
        est = estimate_x6_grid(dx=args.dx)
        doc["x6_grid_estimate"] = f"{est:.17g}"
        doc["x6_grid_rel_error"] = f"{abs(est - float(rep.x6_coefficient)) / abs(float(rep.x6_coefficient)):.17g}"
    _write_json(os.path.join(out, "counterexample.json"), doc)
    _write_manifest(out, "counterexample", _config_echo(args), ["counterexample.json"])
    return 0


def cmd_gengauss(args: argparse.Namespace) -> int:
    out = args.out
    os.makedirs(out, exist_ok=True)
    try:
        if args.M is not None:
            gg = gengauss_for_lp_mass(args.M, args.p)
        else:
            gg = gengauss(args.beta, args.p)
    except (ValueError, NoBracket) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    half = 1.0 / math.sqrt(gg.beta)
    doc = {
        "p": f"{gg.p:.17g}",
        "beta": f"{gg.beta:.17g}",
        "alpha": f"{gg.alpha:.17g}",
        "support": [f"{-half:.17g}", f"{half:.17g}"],
        "lp_mass": f"{gg.lp_mass(gg.p):.17g}",
        "renyi_entropy": f"{gg.renyi_entropy():.17g}",
    }
    _write_json(os.path.join(out, "gengauss.json"), doc)
    gq = gg.to_grid(args.dx)
    _write_plot_csv(os.path.join(out, "gengauss.csv"), gq.nodes, gq.values)
    _write_manifest(out, "gengauss", _config_echo(args), ["gengauss.json", "gengauss.csv"])
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    out = args.out
    os.makedirs(out, exist_ok=True)
    n, p = args.n, args.p
    config = SolverConfig(
        mode="grid", n=n, p=p, dx=args.dx, tol=args.tol,
        general_update=(n, p) != (2, 2.0),
    )
    try:
        sol = run_fixed_point(config)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    q = sol.f
    if args.M is None:
        # constraint set induced by the solution's own norms (dilation 1)
        M = _grid.lp_norm_real(q, p) / q.mass ** p
    else:
        M = args.M
    constraints = ConstraintSet(M=M, p=p, n=n)
    q_feas, _, _ = scale_to_feasible(q, constraints)
    i_fp = float(objective_I(q_feas, n, p))

    if p == 2.0:
        gg_exact = exact_gengauss_p2_for_lp_mass(Fraction(M) if isinstance(M, Fraction) else Fraction(float(M)))
        i_gg = float(objective_I(gg_exact[1], n, 2))
    else:
        gg = gengauss_for_lp_mass(M, p)
        i_gg = float(objective_I(gg.to_grid(args.dx), n, p))

    hp_fp = -math.log(i_fp) / (p - 1.0)
    hp_gg = -math.log(i_gg) / (p - 1.0)
    ordering_ok = i_fp > i_gg
    doc = {
        "M": f"{M:.17g}",
        "n": n,
        "p": f"{p:.17g}",
        "I_fixed_point": f"{i_fp:.17g}",
        "I_gengauss": f"{i_gg:.17g}",
        "margin": f"{i_fp - i_gg:.17g}",
        "hp_sum_fixed_point": f"{hp_fp:.17g}",
        "hp_sum_gengauss": f"{hp_gg:.17g}",
        "ordering_ok": ordering_ok,
    }
    _write_json(os.path.join(out, "compare.json"), doc)
    _write_manifest(out, "compare", _config_echo(args), ["compare.json"])
    if not ordering_ok:
        print("error: fixed point did not beat the generalized Gaussian", file=sys.stderr)
        return 4
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="renyiconv",
        description="Fixed-point solver and certificates for the convolution entropy problem.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_it = sub.add_parser("iterate", help="run a fixed number of fixed-point steps")
    p_it.add_argument("--mode", choices=["exact", "grid"], default="exact")
    p_it.add_argument("--steps", type=int, default=3)
    p_it.add_argument("--dx", type=float, default=1e-3)
    p_it.add_argument("--out", default="renyiconv-out")
    p_it.set_defaults(func=cmd_iterate)

    p_sv = sub.add_parser("solve", help="run the fixed-point iteration to convergence")
    p_sv.add_argument("--mode", choices=["exact", "grid"], default="grid")
    p_sv.add_argument("--n", type=int, default=2)
    p_sv.add_argument("--p", type=float, default=2.0)
    p_sv.add_argument("--dx", type=float, default=1e-3)
    p_sv.add_argument("--tol", type=float, default=1e-10)
    p_sv.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    p_sv.add_argument("--out", default="renyiconv-out")
    p_sv.set_defaults(func=cmd_solve)

    p_el = sub.add_parser("el-residual", help="score a CSV density against the stationarity equation")
    p_el.add_argument("--input", required=True)
    p_el.add_argument("--n", type=int, default=2)
    p_el.add_argument("--p", type=float, default=2.0)
    p_el.add_argument("--M", type=float, required=True)
    p_el.add_argument("--out", default="renyiconv-out")
    p_el.set_defaults(func=cmd_el_residual)

    p_cx = sub.add_parser("counterexample", help="exact non-extremality certificate for the quadratic bump")
    p_cx.add_argument("--grid-check", action="store_true", dest="grid_check",
                      help="also estimate the x^6 coefficient numerically")
    p_cx.add_argument("--dx", type=float, default=1e-4)
    p_cx.add_argument("--out", default="renyiconv-out")
    p_cx.set_defaults(func=cmd_counterexample)

    p_gg = sub.add_parser("gengauss", help="normalized generalized Gaussian density")
    p_gg.add_argument("--p", type=float, default=2.0)
    p_gg.add_argument("--beta", type=float, default=1.0)
    p_gg.add_argument("--M", type=float, default=None)
    p_gg.add_argument("--dx", type=float, default=1e-3)
    p_gg.add_argument("--out", default="renyiconv-out")
    p_gg.set_defaults(func=cmd_gengauss)

    p_cp = sub.add_parser("compare", help="fixed point vs generalized Gaussian on one constraint set")
    p_cp.add_argument("--n", type=int, default=2)
    p_cp.add_argument("--p", type=float, default=2.0)
    p_cp.add_argument("--M", type=float, default=None)
    p_cp.add_argument("--dx", type=float, default=1e-3)
    p_cp.add_argument("--tol", type=float, default=1e-10)
    p_cp.add_argument("--out", default="renyiconv-out")
    p_cp.set_defaults(func=cmd_compare)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    if os.environ.get("RENYI_SEED") is not None:
        print("warning: RENYI_SEED is ignored; commands are deterministic", file=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ZeroMass, DegenerateDensity, InfeasibleInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
