"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v`; the lines are gathered in the
terminal summary (see conftest.py). `python tests/test_acceptance.py` prints
them directly.
"""
import time

import numpy as np
import pytest

from autowg.analysis import (
    bubble_diagnostics,
    commuting_residual,
    error_equation_residual,
    error_report,
    norm_equivalence_report,
    run_convergence,
    solve,
)
from autowg.assembly import assemble
from autowg.cases import get_case
from autowg.polybasis import graded_exponents
from autowg.polymesh import L_HEXAGON, generate_mesh
from autowg.polyquad import polygon_rule
from autowg.solver import NotPositiveDefinite, spd_factor
from autowg.verify import monomial
from autowg.weakgrad import select_r, weak_gradient_operator
from oracles import green_abs_scale, green_monomial, star_polygon

MESH_FAMILIES = ("uniform_squares", "distorted_quads", "nonconvex_zigzag")
LINES = []


def record(num, title, passed, detail, seconds):
    line = f"criterion {num:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}  [{seconds:.1f} s]"
    LINES.append(line)
    print(line)
    return passed


# 1 ----------------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    case = get_case("patchP4")
    worst_e = worst_l2 = 0.0
    for n in (2, 4):
        sol = solve(generate_mesh("uniform_squares", n), case, 4, 4, "general")
        e = error_report(sol, case)
        worst_e, worst_l2 = max(worst_e, e.energy), max(worst_l2, e.l2_field)
    dt = time.perf_counter() - t0
    ok = worst_e <= 1e-8 and worst_l2 <= 1e-8 and dt < 10
    return record(1, "patch exactness k=q=4", ok,
                  f"energy {worst_e:.2e} <= 1e-8, L2 {worst_l2:.2e} <= 1e-8, runtime < 10 s", dt)


# 2, 3 -------------------------------------------------------------------------

_SINE_K1 = {}


def sine_k1_table(family):
    if family not in _SINE_K1:
        t0 = time.perf_counter()
        table = run_convergence(get_case("sine"), family, 1, 1, levels=(4, 8, 16, 32))
        _SINE_K1[family] = (table, time.perf_counter() - t0)
    return _SINE_K1[family]


def criterion_2():
    ok, parts, total = True, [], 0.0
    for family in ("uniform_squares", "nonconvex_zigzag"):
        table, dt = sine_k1_table(family)
        order = table.final_energy_order
        ok &= abs(order - 1.0) <= 0.15 and dt < 120
        parts.append(f"{family} {order:.3f}")
        total += dt
    return record(2, "energy order k=1", ok, ", ".join(parts) + " in [0.85, 1.15], < 2 min per family", total)


def criterion_3():
    ok, parts, total = True, [], 0.0
    for family in ("uniform_squares", "nonconvex_zigzag"):
        table, dt = sine_k1_table(family)
        order = table.final_l2_order
        ok &= abs(order - 2.0) <= 0.15
        parts.append(f"{family} {order:.3f}")
        total += dt
    return record(3, "L2 order k=1", ok, ", ".join(parts) + " in [1.85, 2.15]", total)


# 4 ----------------------------------------------------------------------------


def criterion_4():
    t0 = time.perf_counter()
    table = run_convergence(get_case("sine"), "uniform_squares", 2, 2, levels=(4, 8, 16))
    eo, lo = table.final_energy_order, table.final_l2_order
    ok = abs(eo - 2.0) <= 0.2 and abs(lo - 3.0) <= 0.2
    return record(4, "higher order k=2", ok,
                  f"energy {eo:.3f} in [1.8, 2.2], L2 {lo:.3f} in [2.8, 3.2]", time.perf_counter() - t0)


# 5 ----------------------------------------------------------------------------


def criterion_5():
    t0 = time.perf_counter()
    cells = [generate_mesh("nonconvex_zigzag", 2).cell_coords(c) for c in range(8)] + [L_HEXAGON]
    worst = 0.0
    for k in (1, 2, 3):
        for xy in cells:
            op = weak_gradient_operator(xy, k, k, select_r(len(xy), k))
            worst = max(worst, max(commuting_residual(op, *monomial(a, b)) for a, b in graded_exponents(k)))
    return record(5, "weak gradient of Q_h u equals Q_r grad u", worst <= 1e-10,
                  f"max coefficient residual {worst:.2e} <= 1e-10 (k = 1..3, zigzag n=2 cells + L-hexagon)",
                  time.perf_counter() - t0)


# 6 ----------------------------------------------------------------------------


def criterion_6():
    t0 = time.perf_counter()
    ok, parts = True, []
    for family in MESH_FAMILIES:
        for k in (1, 2):
            a = norm_equivalence_report(generate_mesh(family, 4), k, samples=200, seed=0)
            b = norm_equivalence_report(generate_mesh(family, 16), k, samples=200, seed=0)
            inside = a.min_ratio / 3 <= b.min_ratio and b.max_ratio <= 3 * a.max_ratio and a.min_ratio > 0
            ok &= inside
            parts.append(f"{family} k={k} [{b.min_ratio:.3g}, {b.max_ratio:.3g}] in "
                         f"[{a.min_ratio / 3:.3g}, {3 * a.max_ratio:.3g}]")
    return record(6, "norm equivalence bracket n=16 within 3x of n=4", ok, "; ".join(parts), time.perf_counter() - t0)


# 7 ----------------------------------------------------------------------------


def criterion_7():
    t0 = time.perf_counter()
    count, worst_eig = 0, np.inf
    ok = True
    for family in MESH_FAMILIES:
        for n in range(1, 9):
            for k in (1, 2):
                s = assemble(generate_mesh(family, n), k)
                try:
                    spd_factor(s.A)
                except NotPositiveDefinite:
                    ok = False
                count += 1
                if n <= 4:
                    worst_eig = min(worst_eig, float(np.linalg.eigvalsh(s.A.toarray()).min()))
    s = assemble(generate_mesh("single_polygon", 1), 2, eliminate_boundary=True)
    ok &= s.n_dofs == 6  # one cell, all edges on the boundary: only interior dofs remain
    spd_factor(s.A)
    worst_eig = min(worst_eig, float(np.linalg.eigvalsh(s.A.toarray()).min()))
    ok &= worst_eig > 0
    return record(7, "SPD factorisation", ok,
                  f"{count + 1} systems factorised (n <= 8), dense min eigenvalue {worst_eig:.3e} > 0 (n <= 4)",
                  time.perf_counter() - t0)


# 8 ----------------------------------------------------------------------------


def criterion_8():
    # the identity needs the exact load (f, v0); integrate it with degree 2k + 16
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    patch = get_case("patchP4")
    worst_patch = 0.0
    for n in (2, 4):
        sol = solve(generate_mesh("uniform_squares", n), patch, 4, 4, load_degree=2 * 4 + 16)
        for _ in range(20):
            v = rng.standard_normal(sol.system.n_dofs)
            worst_patch = max(worst_patch, error_equation_residual(sol, patch, v)["residual"])
    sine = get_case("sine")
    sol = solve(generate_mesh("uniform_squares", 4), sine, 1, 1, load_degree=2 * 1 + 16)
    worst_sine = 0.0
    for _ in range(20):
        v = rng.standard_normal(sol.system.n_dofs)
        worst_sine = max(worst_sine, error_equation_residual(sol, sine, v)["residual"])
    ok = worst_patch <= 1e-9 and worst_sine <= 1e-8
    return record(8, "error equation residual", ok,
                  f"patchP4 {worst_patch:.2e} <= 1e-9 (20 probes), sine {worst_sine:.2e} <= 1e-8",
                  time.perf_counter() - t0)


# 9 ----------------------------------------------------------------------------


def criterion_9():
    t0 = time.perf_counter()
    m = generate_mesh("nonconvex_zigzag", 2)
    bmax = cdev = off = 0.0
    for c in range(m.n_cells):
        rep = bubble_diagnostics(m.cell_coords(c))
        bmax = max(bmax, rep.boundary_max)
        cdev = max(cdev, abs(rep.value_at_center - 1.0))
        off = max(off, rep.edge_off_max)
    ok = bmax <= 1e-12 and cdev <= 1e-12 and off <= 1e-12
    return record(9, "bubble functions", ok,
                  f"max Phi_B on boundary {bmax:.1e}, |Phi_B(M) - 1| {cdev:.1e}, max phi_e_i on e_k {off:.1e}, "
                  f"all <= 1e-12", time.perf_counter() - t0)


# 10 ---------------------------------------------------------------------------


def criterion_10():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    worst = 0.0
    for i in range(50):
        xy = star_polygon(rng, int(rng.integers(3, 11)), convex=i % 2 == 0)
        for d in (0, 3, 8, 15, 27):
            rule = polygon_rule(xy, d)
            x, y = rule.points.T
            for deg in range(rule.exact_degree + 1):
                for b in range(deg + 1):
                    a = deg - b
                    ref = green_monomial(xy, a, b)
                    got = float(rule.weights @ (x**a * y**b))
                    scale = max(abs(ref), green_abs_scale(xy, a, b, rule.points, rule.weights))
                    worst = max(worst, abs(got - ref) / scale)
    return record(10, "polygon quadrature vs Green's theorem", worst <= 1e-11,
                  f"worst relative moment error {worst:.2e} <= 1e-11 (50 polygons, 25 non-convex)",
                  time.perf_counter() - t0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_acceptance(crit):
    assert crit(), LINES[-1]


if __name__ == "__main__":
    for crit in CRITERIA:
        crit()
