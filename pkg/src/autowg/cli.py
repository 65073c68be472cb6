"""Command line front end: mesh, solve, converge, verify.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 verification
failure. Options may also come from a `key = value` config file (--config);
flags given on the command line win.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .analysis import error_report, run_convergence, solve
from .cases import CASES, get_case
from .polybasis import ProjectionError
from .polymesh import FAMILIES, MeshError, generate_mesh, shape_report, write_mesh
from .polyquad import QuadratureError
from .solver import SolverError
from .weakgrad import GeometryError, select_r

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3
NUMERICAL_ERRORS = (SolverError, GeometryError, ProjectionError, QuadratureError, ArithmeticError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _levels(text):
    """"4,8,16" or "4..32" (doubling from the first to the last value)."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = (int(t) for t in text.split(".."))
        out = [lo]
        while out[-1] * 2 <= hi:
            out.append(out[-1] * 2)
        return out
    return [int(t) for t in text.replace(" ", "").split(",") if t]


def _r_rule(text):
    text = str(text)
    if text in ("general", "convex_if_detected"):
        return text
    try:
        r = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"r rule must be general, convex_if_detected or an int, got {text!r}")
    return r


DEFAULTS = dict(
    family="uniform_squares",
    n=4,
    levels="4,8,16,32",
    k=1,
    q=None,
    r_rule="general",
    case="sine",
    tol=1e-12,
    seed=0,
    out=None,
    plot=None,
    threads=1,
    samples=200,
    timings=True,
    fault_flip_normals=False,
)


# verify runs on a small non-convex mesh unless told otherwise
VERIFY_DEFAULTS = dict(family="nonconvex_zigzag", n=2)


def build_parser():
    p = _Parser(prog="autowg", description="Stabilizer-free weak Galerkin solver for -Laplace(u) = f on polygonal meshes.")
    p.add_argument("--config", default=None, help="key = value file; command-line flags override it")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, levels=False):
        sp.add_argument("--config", help=argparse.SUPPRESS, default=argparse.SUPPRESS)
        sp.add_argument("--family", choices=FAMILIES, default=argparse.SUPPRESS)
        if levels:
            sp.add_argument("--levels", default=argparse.SUPPRESS, help='e.g. "4,8,16,32" or "4..32"')
        else:
            sp.add_argument("--n", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--k", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--q", type=int, default=argparse.SUPPRESS, help="edge degree (default: k)")
        sp.add_argument("--r-rule", dest="r_rule", type=_r_rule, default=argparse.SUPPRESS,
                        help="general | convex_if_detected | <int>")
        sp.add_argument("--case", choices=sorted(CASES), default=argparse.SUPPRESS)
        sp.add_argument("--tol", type=float, default=argparse.SUPPRESS)
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--out", default=argparse.SUPPRESS)

    m = sub.add_parser("mesh", help="generate a mesh, print counts and a convexity census")
    m.add_argument("--config", help=argparse.SUPPRESS, default=argparse.SUPPRESS)
    m.add_argument("--family", choices=FAMILIES, default=argparse.SUPPRESS)
    m.add_argument("--n", type=int, default=argparse.SUPPRESS)
    m.add_argument("--out", default=argparse.SUPPRESS)

    s = sub.add_parser("solve", help="assemble and solve one problem, print errors")
    common(s)

    c = sub.add_parser("converge", help="convergence study, CSV on stdout or --out")
    common(c, levels=True)
    c.add_argument("--plot", default=argparse.SUPPRESS, help="write gnuplot data (h, errors) here")
    c.add_argument("--no-timings", dest="timings", action="store_false", default=argparse.SUPPRESS,
                   help="write 0 in the seconds column so output is reproducible byte for byte")

    v = sub.add_parser("verify", help="bubble, norm-equivalence, commuting and error-equation checks")
    common(v)
    v.add_argument("--samples", type=int, default=argparse.SUPPRESS)
    # test hook: flips the outward normals inside the weak gradient
    v.add_argument("--fault-flip-normals", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    return p


def read_config(path):
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, val = (t.strip() for t in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = val
    return out


def _coerce(cfg):
    conv = dict(n=int, k=int, q=lambda v: None if v in (None, "", "None") else int(v), tol=float, seed=int,
                threads=int, samples=int, r_rule=_r_rule)
    for key, fn in conv.items():
        if isinstance(cfg.get(key), str) or (key == "q" and cfg.get(key) is not None):
            try:
                cfg[key] = fn(cfg[key])
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"bad value for {key}: {exc}") from None
    for key in ("timings", "fault_flip_normals"):
        if isinstance(cfg[key], str):
            cfg[key] = cfg[key].lower() in ("1", "true", "yes", "on")
    if cfg["family"] not in FAMILIES:
        raise UsageError(f"unknown family {cfg['family']!r}")
    if cfg["case"] not in CASES:
        raise UsageError(f"unknown case {cfg['case']!r}")
    return cfg


def resolve_config(args):
    cfg = dict(DEFAULTS)
    if args.command == "verify":
        cfg.update(VERIFY_DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    cfg.update({k: v for k, v in vars(args).items() if k not in ("config", "command")})
    cfg = _coerce(cfg)
    if cfg["q"] is None:
        cfg["q"] = cfg["k"]
    if cfg["k"] < 0 or cfg["q"] < 0:
        raise UsageError("k and q must be nonnegative")
    if cfg["q"] > cfg["k"]:
        raise UsageError(f"--q {cfg['q']} exceeds --k {cfg['k']}; need k >= q")
    if cfg["n"] < 1:
        raise UsageError("--n must be >= 1")
    if cfg["tol"] <= 0 or cfg["tol"] >= 1:
        raise UsageError("--tol must lie in (0, 1)")
    if isinstance(cfg["r_rule"], int):
        try:
            select_r(4, cfg["k"], cfg["r_rule"])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        cfg["levels"] = _levels(cfg["levels"])
    except ValueError:
        raise UsageError(f"cannot parse levels {cfg['levels']!r}") from None
    if args.command == "converge" and len(cfg["levels"]) < 3:
        raise UsageError("converge needs at least 3 levels")
    return cfg


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_mesh(cfg):
    mesh = generate_mesh(cfg["family"], cfg["n"])
    rep = shape_report(mesh)
    if cfg["out"]:
        write_mesh(mesh, cfg["out"])
    print(f"family {cfg['family']} n {cfg['n']}")
    print(f"vertices {len(mesh.vertices)} cells {mesh.n_cells} edges {mesh.n_edges} "
          f"boundary_edges {len(mesh.boundary_edges)} interior_edges {len(mesh.interior_edges)}")
    print(f"convex_count {mesh.convex_count()} nonconvex_count {mesh.n_cells - mesh.convex_count()}")
    print(f"h {mesh.h:.6g} edges_per_cell {rep['min_edges_per_cell']}..{rep['max_edges_per_cell']} "
          f"min_edge_over_h {rep['min_edge_over_h']:.4g} min_area_over_h2 {rep['min_area_over_h2']:.4g} "
          f"flagged {len(rep['flagged_cells'])}")
    return EXIT_OK


def cmd_solve(cfg):
    case = get_case(cfg["case"])
    mesh = generate_mesh(cfg["family"], cfg["n"])
    t0 = time.perf_counter()
    sol = solve(mesh, case, cfg["k"], cfg["q"], cfg["r_rule"], tol=cfg["tol"], threads=cfg["threads"])
    errs = error_report(sol, case)
    rep = sol.report
    print(f"case {case.name} family {cfg['family']} n {cfg['n']} k {cfg['k']} q {cfg['q']} r_rule {cfg['r_rule']}")
    print(f"dofs {sol.system.n_dofs} nnz {sol.system.A.nnz}")
    print(f"solver {rep.method} residual {rep.residual:.3e} iterations {rep.iterations} "
          f"backward_error {rep.backward_error:.3e}" + (" (floor limited)" if rep.floor_limited else ""))
    print(f"energy_err {errs.energy:.6e} l2_proj_err {errs.l2_projected:.6e} "
          f"l2_field_err {errs.l2_field:.6e} seminorm_err {errs.seminorm:.6e}")
    print(f"seconds {time.perf_counter() - t0:.3f}")
    if cfg["out"]:
        np.savetxt(cfg["out"], sol.x, fmt="%.17g")
    return EXIT_OK


def cmd_converge(cfg):
    table = run_convergence(get_case(cfg["case"]), cfg["family"], cfg["k"], cfg["q"], cfg["r_rule"],
                            levels=cfg["levels"], tol=cfg["tol"], threads=cfg["threads"])
    _emit(table.to_csv(timings=cfg["timings"]), cfg["out"])
    if cfg["plot"]:
        with open(cfg["plot"], "w") as fh:
            fh.write(table.plot_data())
    return EXIT_OK


def cmd_verify(cfg):
    from .verify import run_suite

    checks = run_suite(cfg["family"], cfg["n"], cfg["k"], cfg["r_rule"], seed=cfg["seed"],
                       samples=cfg["samples"], case=cfg["case"],
                       normal_sign=-1.0 if cfg["fault_flip_normals"] else 1.0)
    failed = [c for c in checks if not c.passed]
    for c in failed:
        print(c.line())
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if failed:
        names = sorted({c.name for c in failed})
        print("FAILED: " + ", ".join(names))
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {"mesh": cmd_mesh, "solve": cmd_solve, "converge": cmd_converge, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
    except UsageError as exc:
        print(f"autowg: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"autowg: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg)
    except MeshError as exc:
        print(f"autowg: invalid mesh request: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERICAL_ERRORS as exc:
        print(f"autowg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
