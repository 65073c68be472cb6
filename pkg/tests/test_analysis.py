import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from autowg.analysis import (
    CSV_COLUMNS,
    BubbleError,
    bubble_diagnostics,
    energy_norm,
    energy_norm_elementwise,
    error_equation_residual,
    error_report,
    grad_v0_constant,
    local_seminorm_matrix,
    norm_equivalence_report,
    ratio_of,
    run_convergence,
    seminorm_1h,
    seminorm_matrix,
    solve,
)
from autowg.assembly import assemble, interpolate
from autowg.cases import get_case
from autowg.polybasis import graded_exponents
from autowg.polymesh import L_HEXAGON, element_geometry_from_coords, generate_mesh
from autowg.weakgrad import select_r, weak_gradient_operator
from oracles import square_rule

SQUARE = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)


def full_system(family, n, k=1):
    return assemble(generate_mesh(family, n), k, eliminate_boundary=False)


# energy norm ------------------------------------------------------------------


def test_energy_norm_of_zero():
    s = assemble(generate_mesh("nonconvex_zigzag", 2), 1)
    assert energy_norm(s, np.zeros(s.n_dofs)) == 0.0
    assert energy_norm_elementwise(s, np.zeros(s.n_dofs)) == 0.0


def test_energy_norm_of_constant_on_one_cell():
    s = full_system("uniform_squares", 1, k=2)
    v = interpolate(s, lambda x, y: 3.0 + 0 * x)
    # the quadratic form cancels down to rounding, eps * ||A|| * ||v||^2
    floor = 1e-13 * abs(s.A).max() * (v @ v)
    assert energy_norm(s, v) ** 2 <= floor
    assert energy_norm_elementwise(s, v) ** 2 <= floor


@pytest.mark.parametrize("family", ["uniform_squares", "distorted_quads", "nonconvex_zigzag"])
def test_energy_norm_matrix_matches_elementwise(family):
    s = assemble(generate_mesh(family, 3), 2)
    v = np.random.default_rng(0).standard_normal(s.n_dofs)
    assert energy_norm(s, v) == pytest.approx(energy_norm_elementwise(s, v), rel=1e-11)


# discrete H1 semi-norm --------------------------------------------------------


@pytest.mark.parametrize("family", ["uniform_squares", "nonconvex_zigzag"])
def test_seminorm_vanishes_on_constants(family):
    s = full_system(family, 3)
    v = interpolate(s, lambda x, y: -2.0 + 0 * x)
    assert seminorm_1h(s, v) ** 2 <= 1e-13 * abs(seminorm_matrix(s)).max() * (v @ v)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_seminorm_of_linear_interpolant_is_its_gradient_norm(n):
    # Q_h x has v0 = vb = x, so only ||grad x||^2 = |Omega| = 1 survives
    s = full_system("uniform_squares", n)
    assert seminorm_1h(s, interpolate(s, lambda x, y: x)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("k", [1, 2])
def test_local_seminorm_against_dense_oracle(k):
    op = weak_gradient_operator(SQUARE, k, k, select_r(4, k))
    S = local_seminorm_matrix(op)
    v = np.random.default_rng(k).standard_normal(op.layout.n_local)
    n0 = op.layout.n_interior
    c0 = v[:n0]
    h, cx, cy = np.sqrt(2.0), 0.5, 0.5

    def v0(p):
        xi, eta = (p[:, 0] - cx) / h, (p[:, 1] - cy) / h
        return sum(c * xi**a * eta**b for c, (a, b) in zip(c0, graded_exponents(k)))

    def grad_v0(p):
        xi, eta = (p[:, 0] - cx) / h, (p[:, 1] - cy) / h
        gx = sum(c * a * xi ** max(a - 1, 0) * eta**b for c, (a, b) in zip(c0, graded_exponents(k))) / h
        gy = sum(c * b * xi**a * eta ** max(b - 1, 0) for c, (a, b) in zip(c0, graded_exponents(k))) / h
        return gx, gy

    pts, w = square_rule(0, 1, 0, 1, 8)
    gx, gy = grad_v0(pts)
    ref = w @ (gx**2 + gy**2)
    t, wt = leggauss(8)
    t, wt = 0.5 * (t + 1), 0.5 * wt
    for i in range(4):
        a, b = SQUARE[i], SQUARE[(i + 1) % 4]
        p = a + np.outer(t, b - a)
        d = v[op.layout.edge_slice(i)]
        vb = sum(dj * t**j for j, dj in enumerate(d))
        ref += wt @ (v0(p) - vb) ** 2 / h  # each edge has length 1
    assert v @ S @ v == pytest.approx(ref, rel=1e-12)


# norm equivalence -------------------------------------------------------------


def test_norm_equivalence_report_is_bracketed_and_reproducible():
    m = generate_mesh("nonconvex_zigzag", 4)
    rep = norm_equivalence_report(m, 1, samples=50, seed=7)
    again = norm_equivalence_report(m, 1, samples=50, seed=7)
    assert 0 < rep.min_ratio <= rep.max_ratio < np.inf
    assert (rep.min_ratio, rep.max_ratio) == (again.min_ratio, again.max_ratio)
    s = assemble(m, 1)
    v = np.random.default_rng(7).standard_normal(s.n_dofs)
    assert rep.min_ratio <= ratio_of(s, v) <= rep.max_ratio
    with pytest.raises(ValueError):
        norm_equivalence_report(m, 1, samples=0)


@pytest.mark.parametrize("family", ["uniform_squares", "nonconvex_zigzag"])
def test_grad_v0_bound_is_mesh_independent(family):
    c4 = grad_v0_constant(assemble(generate_mesh(family, 4), 1), samples=50)
    c8 = grad_v0_constant(assemble(generate_mesh(family, 8), 1), samples=50)
    assert 0 < c4 < np.inf and 0 < c8 < np.inf
    assert 0.5 <= c8 / c4 <= 2.0


# bubbles ----------------------------------------------------------------------


def test_square_bubble():
    rep = bubble_diagnostics(SQUARE)
    assert rep.passed and rep.convex
    np.testing.assert_allclose(rep.center, [0.5, 0.5], atol=1e-14)
    assert rep.value_at_center == pytest.approx(1.0, abs=1e-14)
    assert rep.boundary_max <= 1e-14
    # on e_i, phi_e_i = s^2 (1 - s)^2 / h^6 (the opposite line is 1 / h there);
    # over the middle third its minimum sits at s = 1/3
    want = (1 / 3 * 2 / 3) ** 2 / np.sqrt(2.0) ** 6
    np.testing.assert_allclose(rep.rho1_middle_third, want, rtol=1e-12)
    assert min(rep.rho1) >= want * (1 - 1e-12)  # a sixth inside the middle third does at least as well


def test_nonconvex_cell_bubbles():
    rep = bubble_diagnostics(L_HEXAGON)
    assert rep.passed and not rep.convex
    assert rep.rho0 > 0 and min(rep.rho1) > 0


def test_bubbles_on_every_zigzag_cell():
    m = generate_mesh("nonconvex_zigzag", 2)
    for c in range(m.n_cells):
        assert bubble_diagnostics(m.cell_coords(c)).passed, c


def test_bubble_refused_when_center_on_an_edge_line():
    # centrally symmetric, so the centroid is the origin, which lies on the
    # line through the edge (1, 1) -> (3, 3)
    xy = np.array([(1, 1), (3, 3), (-1, 3), (-1, -1), (-3, -3), (1, -3)], dtype=float)
    np.testing.assert_allclose(element_geometry_from_coords(xy).center, [0.0, 0.0], atol=1e-14)
    with pytest.raises(BubbleError):
        bubble_diagnostics(xy)


# error measures ---------------------------------------------------------------


def test_error_equation_patch_and_sine():
    m = generate_mesh("nonconvex_zigzag", 2)
    rng = np.random.default_rng(0)
    patch = get_case("patchP4")
    sol = solve(m, patch, 1)  # f is quadratic: the default load rule is exact
    for _ in range(3):
        rep = error_equation_residual(sol, patch, rng.standard_normal(sol.system.n_dofs))
        assert rep["residual"] <= 1e-11 * max(1.0, abs(rep["lhs"]))
    sine = get_case("sine")
    sol = solve(m, sine, 1, load_degree=18)
    rep = error_equation_residual(sol, sine, rng.standard_normal(sol.system.n_dofs))
    assert rep["residual"] <= 1e-10
    zero = error_equation_residual(sol, sine, np.zeros(sol.system.n_dofs))
    assert zero == {"lhs": 0.0, "rhs": 0.0, "residual": 0.0}


def test_zero_case_has_zero_errors():
    sol = solve(generate_mesh("distorted_quads", 3), get_case("zero"), 1)
    assert np.all(sol.x == 0)
    e = error_report(sol, get_case("zero"))
    assert e.energy == e.l2_field == e.l2_projected == e.seminorm == 0.0


def test_errors_decrease_under_refinement():
    sine = get_case("sine")
    reps = [error_report(solve(generate_mesh("uniform_squares", n), sine, 1), sine) for n in (4, 8, 16)]
    for attr in ("energy", "l2_projected", "l2_field", "seminorm"):
        vals = [getattr(r, attr) for r in reps]
        assert vals[0] > vals[1] > vals[2] > 0, attr


# convergence table ------------------------------------------------------------


def test_convergence_csv_layout_and_determinism():
    sine = get_case("sine")
    t1 = run_convergence(sine, "nonconvex_zigzag", 1, levels=(2, 4, 8))
    t2 = run_convergence(sine, "nonconvex_zigzag", 1, levels=(2, 4, 8))
    csv1 = t1.to_csv(timings=False)
    assert csv1.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert csv1.splitlines()[0] == (
        "level,n,h,dofs,energy_err,energy_order,l2_proj_err,l2_field_err,l2_order,solve_iters,seconds"
    )
    assert len(csv1.splitlines()) == 4
    assert csv1 == t2.to_csv(timings=False)
    first = csv1.splitlines()[1].split(",")
    assert first[5] == "" and first[8] == ""  # no order on the coarsest level
    assert len(t1.orders("energy")) == 2
    plot = t1.plot_data().splitlines()
    assert plot[0].startswith("#") and len(plot) == 4


def test_convergence_needs_three_levels():
    with pytest.raises(ValueError):
        run_convergence(get_case("sine"), "uniform_squares", 1, levels=(2, 4))
