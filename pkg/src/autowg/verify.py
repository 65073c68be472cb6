"""Consistency and stability diagnostics bundled as one pass/fail suite.

Every check yields a `Check` record; a failing record names the cell (or
level) and the quantity that broke, so a red run is actionable on its own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import (
    bubble_diagnostics,
    commuting_residual,
    error_equation_residual,
    grad_v0_constant,
    ibp_consistency,
    norm_equivalence_report,
    solve,
)
from .assembly import assemble, build_operators
from .cases import get_case
from .polybasis import graded_exponents
from .polymesh import generate_mesh

COMMUTING_TOL = 1e-10
IBP_TOL = 1e-10
ERROR_EQ_TOL = 1e-8
BRACKET_DRIFT = 2.0  # allowed factor between ratio brackets at n and 2n


@dataclass(frozen=True)
class Check:
    name: str
    where: str
    quantity: str
    value: float
    limit: float
    passed: bool

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name:<18} {self.where:<14} {self.quantity} = {self.value:.3e} (limit {self.limit:.1e})"


def monomial(a, b):
    def u(x, y):
        return np.asarray(x, dtype=float) ** a * np.asarray(y, dtype=float) ** b

    def grad(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gx = a * x ** max(a - 1, 0) * y**b if a else np.zeros_like(x * y)
        gy = b * x**a * y ** max(b - 1, 0) if b else np.zeros_like(x * y)
        return np.stack([gx, gy], axis=-1)

    return u, grad


def _le(name, where, quantity, value, limit):
    return Check(name, where, quantity, float(value), float(limit), bool(value <= limit))


def bubble_checks(mesh):
    out = []
    for c in range(mesh.n_cells):
        rep = bubble_diagnostics(mesh.cell_coords(c))
        w = f"cell {c}"
        out.append(_le("bubble", w, "max|Phi_B| on boundary", rep.boundary_max, 1e-12))
        out.append(_le("bubble", w, "|Phi_B(M) - 1|", abs(rep.value_at_center - 1.0), 1e-12))
        out.append(_le("bubble", w, "max|phi_e_i| on e_k", rep.edge_off_max, 1e-12))
        # positivity reported as a pass when the quantity is > 0
        out.append(Check("bubble", w, "rho0", rep.rho0, 0.0, rep.rho0 > 0))
        out.append(Check("bubble", w, "min rho1", min(rep.rho1), 0.0, min(rep.rho1) > 0))
    return out


def commuting_checks(mesh, k, r_rule="general", operators=None):
    ops = build_operators(mesh, k, k, r_rule) if operators is None else operators
    out = []
    for c, op in enumerate(ops):
        worst = max(commuting_residual(op, *monomial(a, b)) for a, b in graded_exponents(k))
        out.append(_le("commuting", f"cell {c}", "coef residual", worst, COMMUTING_TOL))
    return out


def ibp_checks(operators, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for c, op in enumerate(operators):
        worst = max(ibp_consistency(op, rng.standard_normal(op.layout.n_local)) for _ in range(3))
        out.append(_le("ibp", f"cell {c}", "rel gap", worst, IBP_TOL))
    return out


def norm_equivalence_checks(family, n, k, r_rule="general", samples=200, seed=0):
    mesh = generate_mesh(family, n)
    a = norm_equivalence_report(mesh, k, k, r_rule, samples=samples, seed=seed)
    out = [
        Check("norm-equiv", f"n={n}", "min ratio", a.min_ratio, 0.0, a.min_ratio > 0),
        Check("norm-equiv", f"n={n}", "max ratio", a.max_ratio, math.inf, math.isfinite(a.max_ratio)),
    ]
    if family != "single_polygon":
        b = norm_equivalence_report(generate_mesh(family, 2 * n), k, k, r_rule, samples=samples, seed=seed)
        drift = max(a.min_ratio / b.min_ratio, b.min_ratio / a.min_ratio,
                    a.max_ratio / b.max_ratio, b.max_ratio / a.max_ratio)
        out.append(_le("norm-equiv", f"n={n}->{2 * n}", "bracket drift", drift, BRACKET_DRIFT))
    return out


def grad_v0_checks(family, n, k, r_rule="general", samples=200, seed=0):
    """Observed C in ||grad v0||_T <= C ||grad_w v||_T, at least 100 random
    local vectors per cell, and its drift from n to 2n."""
    samples = max(samples, 100)
    ca = grad_v0_constant(assemble(generate_mesh(family, n), k, k, r_rule), samples=samples, seed=seed)
    out = [Check("grad-v0", f"n={n}", "C", ca, math.inf, math.isfinite(ca))]
    if family != "single_polygon":
        cb = grad_v0_constant(assemble(generate_mesh(family, 2 * n), k, k, r_rule), samples=samples, seed=seed)
        out.append(Check("grad-v0", f"n={2 * n}", "C", cb, math.inf, math.isfinite(cb)))
        out.append(_le("grad-v0", f"n={n}->{2 * n}", "C drift", max(ca / cb, cb / ca), BRACKET_DRIFT))
    return out


def error_equation_checks(mesh, k, case="sine", r_rule="general", probes=5, seed=0, tol=1e-12):
    """The identity holds for the exact load (f, v0); the load is integrated
    with degree 2k + 16 here so quadrature error sits well under the limit,
    even on a single large cell."""
    case = get_case(case) if isinstance(case, str) else case
    sol = solve(mesh, case, k, k, r_rule, tol=tol, load_degree=2 * k + 16)
    rng = np.random.default_rng(seed)
    worst = max(
        error_equation_residual(sol, case, rng.standard_normal(sol.system.n_dofs))["residual"]
        for _ in range(probes)
    )
    return [_le("error-equation", f"{case.name}", "|lhs - rhs|", worst, ERROR_EQ_TOL)]


def run_suite(family="nonconvex_zigzag", n=2, k=1, r_rule="general", seed=0, samples=200,
              case="sine", normal_sign=1.0):
    """All diagnostics on one mesh. `normal_sign=-1` corrupts the operator
    normals (fault injection) and must make the suite fail."""
    mesh = generate_mesh(family, n)
    ops = build_operators(mesh, k, k, r_rule, normal_sign=normal_sign)
    checks = bubble_checks(mesh)
    checks += commuting_checks(mesh, k, r_rule, operators=ops)
    checks += ibp_checks(ops, seed=seed)
    checks += norm_equivalence_checks(family, n, k, r_rule, samples=samples, seed=seed)
    checks += grad_v0_checks(family, n, k, r_rule, samples=samples, seed=seed)
    checks += error_equation_checks(mesh, k, case, r_rule, seed=seed)
    return checks
