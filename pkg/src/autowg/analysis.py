"""Norms, error measures, stability diagnostics and convergence studies."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve

from .assembly import assemble, interpolate
from .polybasis import mass_matrix, project_Q0
from .polymesh import element_geometry_from_coords, generate_mesh, point_in_polygon
from .polyquad import edge_rule, polygon_rule
from .weakgrad import local_interpolant
from .solver import solve_spd

CSV_COLUMNS = (
    "level",
    "n",
    "h",
    "dofs",
    "energy_err",
    "energy_order",
    "l2_proj_err",
    "l2_field_err",
    "l2_order",
    "solve_iters",
    "seconds",
)


@dataclass
class WgSolution:
    system: object  # SparseSpdSystem
    x: np.ndarray
    report: object = None

    @property
    def mesh(self):
        return self.system.mesh

    @property
    def dofmap(self):
        return self.system.dofmap

    def local(self, c):
        return self.system.dofmap.local_values(self.x, c)


def solve(mesh, case, k, q=None, r_rule="general", tol=1e-12, method="auto", threads=1, load_degree=None):
    """Assemble and solve the WG scheme for `case` on `mesh`."""
    system = assemble(mesh, k, q, r_rule, case.f, threads=threads, load_degree=load_degree)
    x, report = solve_spd(system, tol=tol, method=method)
    return WgSolution(system, x, report)


# norms ----------------------------------------------------------------------


def energy_norm(system, x):
    """|||v||| from the assembled matrix."""
    x = np.asarray(x, dtype=float)
    return math.sqrt(max(float(x @ (system.A @ x)), 0.0))


def energy_norm_elementwise(system, x):
    """|||v||| = (sum_T ||grad_w v||_T^2)^(1/2), from the per-cell operators."""
    total = 0.0
    for c, op in enumerate(system.operators):
        g = op.G @ system.dofmap.local_values(x, c)
        total += float(g @ op.M @ g)
    return math.sqrt(total)


def local_seminorm_matrix(op):
    """S_T with v_T^T S_T v_T = ||grad v0||_T^2 + h_T^-1 ||v0 - vb||_dT^2."""
    L = op.layout
    n0 = L.n_interior
    k, q = L.k, L.q
    S = np.zeros((L.n_local, L.n_local))
    rule = polygon_rule(op.xy, max(2 * k, 1), triangles=op.triangles)
    g = op.pbasis.grad(rule.points)
    S[:n0, :n0] = np.einsum("mic,m,mjc->ij", g, rule.weights, g)
    n = len(op.xy)
    for i in range(n):
        er = edge_rule(op.xy[i], op.xy[(i + 1) % n], 2 * k)
        J = np.zeros((len(er.weights), L.n_local))
        J[:, :n0] = op.pbasis.eval(er.points)
        J[:, L.edge_slice(i)] = -op.edge_bases[i].eval(er.points)
        S += J.T @ (er.weights[:, None] * J) / op.diameter
    return 0.5 * (S + S.T)


def _scatter(system, mats):
    dm = system.dofmap
    rows, cols, vals = [], [], []
    for c, K in enumerate(mats):
        l2g = dm.local_to_global[c]
        keep = np.flatnonzero(l2g >= 0)
        g = l2g[keep]
        rows.append(np.repeat(g, len(g)))
        cols.append(np.tile(g, len(g)))
        vals.append(K[np.ix_(keep, keep)].ravel())
    n = dm.n_dofs
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()


def _per_shape(system, fn):
    """Apply fn to each operator, reusing results for shifted copies."""
    cache = {}
    out = []
    for op in system.operators:
        key = id(op.G)
        if key not in cache:
            cache[key] = fn(op)
        out.append(cache[key])
    return out


def seminorm_matrix(system):
    return _scatter(system, _per_shape(system, local_seminorm_matrix))


def seminorm_1h(system, x):
    """Discrete H1 semi-norm ||v||_{1,h}."""
    x = np.asarray(x, dtype=float)
    S = seminorm_matrix(system)
    return math.sqrt(max(float(x @ (S @ x)), 0.0))


# stability diagnostics -----------------------------------------------------


@dataclass
class RatioReport:
    min_ratio: float
    max_ratio: float
    samples: int
    seed: int


def norm_equivalence_report(mesh, k, q=None, r_rule="general", samples=200, seed=0, system=None, threads=1):
    """Sampled |||v||| / ||v||_{1,h} over random v in V_h^0."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if system is None:
        system = assemble(mesh, k, q, r_rule, None, threads=threads)
    S = seminorm_matrix(system)
    rng = np.random.default_rng(seed)
    ratios = []
    while len(ratios) < samples:
        v = rng.standard_normal(system.n_dofs)
        s2 = float(v @ (S @ v))
        if not s2 > 0:
            continue
        ratios.append(math.sqrt(max(float(v @ (system.A @ v)), 0.0) / s2))
    return RatioReport(float(min(ratios)), float(max(ratios)), samples, seed)


def ratio_of(system, v):
    S = seminorm_matrix(system)
    return math.sqrt(float(v @ (system.A @ v)) / float(v @ (S @ v)))


def grad_v0_constant(system, samples=100, seed=0):
    """Largest sampled ||grad v0||_T / ||grad_w v||_T over cells and random v."""
    rng = np.random.default_rng(seed)
    n0 = system.dofmap.n_interior_per_cell

    def prep(op):
        rule = polygon_rule(op.xy, max(2 * op.k, 1), triangles=op.triangles)
        g = op.pbasis.grad(rule.points)
        return np.einsum("mic,m,mjc->ij", g, rule.weights, g), op.G.T @ op.M @ op.G

    mats = _per_shape(system, prep)
    worst = 0.0
    for K0, KT in mats:
        V = rng.standard_normal((KT.shape[0], samples))
        num = np.einsum("is,ij,js->s", V[:n0], K0, V[:n0])
        den = np.einsum("is,ij,js->s", V, KT, V)
        worst = max(worst, float(np.sqrt(np.max(num / den))))
    return worst


@dataclass
class BubbleReport:
    boundary_max: float  # max |Phi_B| at edge quadrature points
    value_at_center: float  # Phi_B(M), 1 by scaling
    rho0: float  # min Phi_B on a disk about M clear of all edge lines
    rho0_radius: float
    rho0_disk_h8: float  # min Phi_B over the disk of radius h_T/8 about M, inside T
    edge_off_max: float  # max |phi_e_i| on e_k, k != i
    rho1: tuple  # per edge, best min of phi_e_i over one sixth of e_i
    rho1_middle_third: tuple
    center: np.ndarray
    convex: bool

    @property
    def passed(self):
        return (
            self.boundary_max <= 1e-12
            and abs(self.value_at_center - 1.0) <= 1e-12
            and self.rho0 > 0
            and self.edge_off_max <= 1e-12
            and min(self.rho1) > 0
        )


class BubbleError(ArithmeticError):
    pass


def bubble_diagnostics(xy, samples=32):
    """Element bubble prod l_i^2 and edge bubbles prod_{k != i} l_k^2 on one cell.

    l_i(x) = (x - A_i) . n_i / h_T with A_i the first vertex of edge i.
    """
    xy = np.asarray(xy, dtype=float)
    geom = element_geometry_from_coords(xy)
    n = len(xy)
    h = geom.diameter
    A = xy
    N = geom.normals

    def lines(p):
        p = np.asarray(p, dtype=float).reshape(-1, 2)
        return np.einsum("mik,ik->mi", p[:, None, :] - A[None], N) / h

    M = geom.center
    lm = lines(M)[0]
    raw_m = float(np.prod(lm**2))
    if not raw_m > 1e-300 or np.min(np.abs(lm)) < 1e-12:
        raise BubbleError("scaling point lies on an edge line; no positive bubble value there")
    scale = 1.0 / raw_m

    def phi_B(p):
        return scale * np.prod(lines(p) ** 2, axis=1)

    def phi_e(i, p):
        L = lines(p) ** 2
        return np.prod(np.delete(L, i, axis=1), axis=1)

    bmax = 0.0
    off = 0.0
    for i in range(n):
        er = edge_rule(xy[i], xy[(i + 1) % n], 4 * n)
        bmax = max(bmax, float(np.max(np.abs(phi_B(er.points)))))
        for j in range(n):
            if j != i:
                off = max(off, float(np.max(np.abs(phi_e(j, er.points)))))

    # disks of radius rad about M, polar sample grid
    def disk(rad):
        rr = rad * np.sqrt(np.linspace(0, 1, samples)[1:])
        tt = np.linspace(0, 2 * np.pi, 2 * samples, endpoint=False)
        R, T = np.meshgrid(rr, tt)
        return np.vstack([M, np.column_stack([M[0] + (R * np.cos(T)).ravel(), M[1] + (R * np.sin(T)).ravel()])])

    clear = 0.5 * float(np.min(np.abs(lm))) * h
    rad = min(h / 8, clear)
    rho0 = float(np.min(phi_B(disk(rad))))
    pts = disk(h / 8)
    inside = np.array([point_in_polygon(p, xy) for p in pts])
    rho0_h8 = float(np.min(phi_B(pts[inside])))

    rho1, mid = [], []
    s = np.linspace(0, 1, 6 * samples + 1)
    for i in range(n):
        a, b = xy[i], xy[(i + 1) % n]
        vals = phi_e(i, a + np.outer(s, b - a))
        parts = np.array_split(vals, 6)
        rho1.append(float(max(p.min() for p in parts)))
        sel = (s >= 1 / 3) & (s <= 2 / 3)
        mid.append(float(vals[sel].min()))
    return BubbleReport(
        boundary_max=bmax,
        value_at_center=float(phi_B(M)[0]),
        rho0=rho0,
        rho0_radius=rad,
        rho0_disk_h8=rho0_h8,
        edge_off_max=off,
        rho1=tuple(rho1),
        rho1_middle_third=tuple(mid),
        center=M,
        convex=geom.convex,
    )


# error measures -------------------------------------------------------------


def _qr_grad_coeffs(op, grad):
    """Coefficients of Q_r grad(u) in the operator's vector basis."""
    rule = op.rule
    phi = op.vbasis.eval(rule.points)
    g = np.asarray(grad(rule.points[:, 0], rule.points[:, 1]), dtype=float)
    rhs = np.einsum("mjc,m,mc->j", phi, rule.weights, g)
    return cho_solve(cho_factor(op.M), rhs)


@dataclass
class ErrorReport:
    energy: float  # |||u - u_h||| = (sum ||Q_r grad u - grad_w u_h||^2)^(1/2)
    l2_projected: float  # ||Q_0 u - u_0||
    l2_field: float  # ||u - u_0||
    seminorm: float  # ||Q_h u - u_h||_{1,h}


def error_report(solution, case, degree=None):
    """All four error measures; quadrature degree defaults to 2k + 6."""
    system = solution.system
    k = system.k
    deg = 2 * k + 6 if degree is None else int(degree)
    e2 = p2 = f2 = 0.0
    for c, op in enumerate(system.operators):
        loc = solution.local(c)
        d = _qr_grad_coeffs(op, case.grad) - op.G @ loc
        e2 += float(d @ op.M @ d)
        rule = polygon_rule(op.xy, deg, triangles=op.triangles)
        P = op.pbasis.eval(rule.points)
        u0 = P @ loc[: op.layout.n_interior]
        uv = np.asarray(case.u(rule.points[:, 0], rule.points[:, 1]), dtype=float)
        f2 += float(rule.weights @ (uv - u0) ** 2)
        c0 = project_Q0(case.u, op.xy, k, basis=op.pbasis, rule=rule)
        dp = P @ (c0 - loc[: op.layout.n_interior])
        p2 += float(rule.weights @ dp**2)
    semi = seminorm_1h(system, interpolate(system, case.u) - solution.x)
    return ErrorReport(math.sqrt(e2), math.sqrt(p2), math.sqrt(f2), semi)


def error_equation_residual(solution, case, v):
    """Both sides of (grad_w e_h, grad_w v) = l(u, v) and their gap.

    l(u, v) = sum_T <(I - Q_r) grad u . n, v0 - vb>_dT; the left side uses
    grad_w u = Q_r grad u.
    """
    system = solution.system
    lhs = rhs = 0.0
    for c, op in enumerate(system.operators):
        loc = solution.local(c)
        vloc = system.dofmap.local_values(v, c)
        cg = _qr_grad_coeffs(op, case.grad)
        lhs += float((cg - op.G @ loc) @ op.M @ (op.G @ vloc))
        n0 = op.layout.n_interior
        n = len(op.xy)
        for i in range(n):
            er = edge_rule(op.xy[i], op.xy[(i + 1) % n], op.r + op.k + 8)
            g = np.asarray(case.grad(er.points[:, 0], er.points[:, 1]), dtype=float)
            flux = (g - op.vbasis.combine(cg, er.points)) @ op.normals[i]
            jump = op.pbasis.eval(er.points) @ vloc[:n0] - op.edge_bases[i].eval(er.points) @ vloc[op.layout.edge_slice(i)]
            rhs += float(er.weights @ (flux * jump))
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs)}


def commuting_residual(op, u, grad):
    """max |G (Q_h u) - coeffs(Q_r grad u)| over the vector-basis coefficients.

    Zero up to rounding whenever u is a polynomial of degree <= q (and <= k).
    """
    loc = local_interpolant(op, u)
    return float(np.max(np.abs(op.G @ loc - _qr_grad_coeffs(op, grad))))


def ibp_consistency(op, dofs):
    """Max gap between M_r G v and the defining right-hand side
    -(v0, div Phi_j) + <vb, Phi_j . n>, with normals recomputed from the
    vertex coordinates. The operator itself is built from the integrated-by-
    parts form, so the two routes are independent.

    The gap is relative to the size of the two terms, which cancel heavily
    for smooth v and high r."""
    geom = element_geometry_from_coords(op.xy)
    L = op.layout
    n0 = L.n_interior
    rule = op.rule
    v0 = op.pbasis.eval(rule.points) @ dofs[:n0]
    vol = -op.vbasis.div(rule.points).T @ (rule.weights * v0)
    bnd = np.zeros_like(vol)
    n = len(op.xy)
    for i in range(n):
        er = edge_rule(op.xy[i], op.xy[(i + 1) % n], L.q + op.r)
        vb = op.edge_bases[i].eval(er.points) @ dofs[L.edge_slice(i)]
        bnd += (op.vbasis.eval(er.points) @ geom.normals[i]).T @ (er.weights * vb)
    got = op.M @ (op.G @ dofs)
    scale = max(np.max(np.abs(vol)), np.max(np.abs(bnd)), 1e-300)
    return float(np.max(np.abs(got - vol - bnd)) / scale)


# convergence ----------------------------------------------------------------


@dataclass
class ConvergenceRow:
    level: int
    n: int
    h: float
    dofs: int
    errors: ErrorReport
    solve_iters: int
    seconds: float
    energy_order: float = float("nan")
    l2_order: float = float("nan")


@dataclass
class ConvergenceTable:
    family: str
    case: str
    k: int
    q: int
    r_rule: object
    rows: list = field(default_factory=list)

    def orders(self, attr):
        out = []
        for a, b in zip(self.rows, self.rows[1:]):
            ea, eb = getattr(a.errors, attr), getattr(b.errors, attr)
            out.append(math.log(ea / eb) / math.log(a.h / b.h))
        return out

    @property
    def final_energy_order(self):
        return self.rows[-1].energy_order

    @property
    def final_l2_order(self):
        return self.rows[-1].l2_order

    def to_csv(self, timings=True):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            e = row.errors
            w.writerow(
                [
                    row.level,
                    row.n,
                    repr(row.h),
                    row.dofs,
                    f"{e.energy:.10e}",
                    "" if math.isnan(row.energy_order) else f"{row.energy_order:.6f}",
                    f"{e.l2_projected:.10e}",
                    f"{e.l2_field:.10e}",
                    "" if math.isnan(row.l2_order) else f"{row.l2_order:.6f}",
                    row.solve_iters,
                    f"{row.seconds:.3f}" if timings else "0",
                ]
            )
        return buf.getvalue()

    def plot_data(self):
        """gnuplot-ready columns: h energy_err l2_field_err."""
        lines = ["# h energy_err l2_field_err"]
        lines += [f"{r.h!r} {r.errors.energy!r} {r.errors.l2_field!r}" for r in self.rows]
        return "\n".join(lines) + "\n"


def run_convergence(case, family, k, q=None, r_rule="general", levels=(4, 8, 16, 32), tol=1e-12,
                    method="auto", threads=1, load_degree=None):
    """Solve on each mesh level and tabulate errors and observed orders.

    Orders use log(e_i / e_{i+1}) / log(h_i / h_{i+1}); the L2 order is that
    of ||u - u_0||.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise ValueError("need at least 3 levels")
    q = k if q is None else q
    table = ConvergenceTable(family, case.name, k, q, r_rule)
    for i, n in enumerate(levels):
        t0 = time.perf_counter()
        mesh = generate_mesh(family, n)
        sol = solve(mesh, case, k, q, r_rule, tol=tol, method=method, threads=threads, load_degree=load_degree)
        errs = error_report(sol, case)
        table.rows.append(
            ConvergenceRow(i, n, mesh.h, sol.system.n_dofs, errs, sol.report.iterations, time.perf_counter() - t0)
        )
    eo = table.orders("energy")
    lo = table.orders("l2_field")
    for row, a, b in zip(table.rows[1:], eo, lo):
        row.energy_order = a
        row.l2_order = b
    return table
