import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from autowg.polymesh import L_HEXAGON, generate_mesh
from autowg.polyquad import (
    MAX_DEGREE,
    QuadratureError,
    edge_rule,
    polygon_rule,
    reference_triangle_rule,
    triangulate,
)
from oracles import green_abs_scale, green_monomial, shoelace, star_polygon

SQUARE = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)
TRI = np.array([(0, 0), (1, 0), (0, 1)], dtype=float)


def _moments_ok(xy, rule, tol):
    worst = 0.0
    x, y = rule.points.T
    for d in range(rule.exact_degree + 1):
        for b in range(d + 1):
            a = d - b
            got = float(rule.weights @ (x**a * y**b))
            ref = green_monomial(xy, a, b)
            scale = max(abs(ref), green_abs_scale(xy, a, b, rule.points, rule.weights))
            worst = max(worst, abs(got - ref) / scale)
    return worst <= tol, worst


def test_square_triangulation():
    tris = triangulate(SQUARE)
    assert len(tris) == 2
    areas = sorted(shoelace(SQUARE[list(t)]) for t in tris)
    assert areas == pytest.approx([0.5, 0.5])


def test_l_hexagon_triangulation():
    tris = triangulate(L_HEXAGON)
    assert len(tris) == 4
    areas = [shoelace(L_HEXAGON[list(t)]) for t in tris]
    assert min(areas) > 0
    assert sum(areas) == pytest.approx(3.0, rel=1e-14)


def test_random_12gon_triangulation():
    xy = star_polygon(np.random.default_rng(12), 12)
    tris = triangulate(xy)
    assert len(tris) == 10
    assert sum(shoelace(xy[list(t)]) for t in tris) == pytest.approx(shoelace(xy), rel=1e-12)


def test_basic_integrals():
    r0 = polygon_rule(SQUARE, 0)
    assert r0.integrate(np.ones(len(r0.weights))) == pytest.approx(1.0, rel=1e-14)
    r = polygon_rule(TRI, 3)
    x, y = r.points.T
    assert r.integrate(x**2 * y) == pytest.approx(math.factorial(2) * math.factorial(1) / math.factorial(5), rel=1e-13)
    assert polygon_rule(L_HEXAGON, 4).weights.sum() == pytest.approx(3.0, rel=1e-13)


def test_edge_integrals():
    e = edge_rule((0, 0), (1, 0), 0)
    assert e.weights.sum() == pytest.approx(1.0)
    e = edge_rule((0, 0), (1, 0), 3)
    assert e.integrate(e.points[:, 0] ** 3) == pytest.approx(0.25, rel=1e-14)
    e = edge_rule((0, 0), (0, 2), 2)
    assert e.integrate(e.points[:, 1] ** 2) == pytest.approx(8 / 3, rel=1e-14)


def test_degree_bounds():
    with pytest.raises(QuadratureError):
        polygon_rule(SQUARE, MAX_DEGREE + 1)
    with pytest.raises(QuadratureError):
        edge_rule((0, 0), (1, 0), -1)


@pytest.mark.parametrize("degree", [0, 1, 2, 5, 9, 17, 26, 40])
def test_reference_rule_factorial_formula(degree):
    pts, w = reference_triangle_rule(degree)
    assert np.all(w > 0)
    for d in range(degree + 1):
        for b in range(d + 1):
            a = d - b
            exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
            assert w @ (pts[:, 0] ** a * pts[:, 1] ** b) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("family", ["uniform_squares", "distorted_quads", "nonconvex_zigzag", "single_polygon"])
@pytest.mark.parametrize("degree", [0, 4, 13, 27])
def test_green_oracle_on_generated_cells(family, degree):
    m = generate_mesh(family, 2)
    for c in range(m.n_cells):
        xy = m.cell_coords(c)
        r = polygon_rule(xy, degree)
        assert r.weights.sum() == pytest.approx(shoelace(xy), rel=1e-13)
        ok, worst = _moments_ok(xy, r, 1e-12)
        assert ok, (c, worst)


@given(seed=st.integers(0, 2**32 - 1), nv=st.integers(3, 12), shift=st.integers(1, 11), degree=st.integers(0, 12))
def test_rule_invariant_under_cyclic_relabel(seed, nv, shift, degree):
    xy = star_polygon(np.random.default_rng(seed), nv)
    r1 = polygon_rule(xy, degree)
    r2 = polygon_rule(np.roll(xy, shift % nv, axis=0), degree)
    x1, y1 = r1.points.T
    x2, y2 = r2.points.T
    for d in range(degree + 1):
        for b in range(d + 1):
            a = d - b
            v1 = r1.weights @ (x1**a * y1**b)
            v2 = r2.weights @ (x2**a * y2**b)
            scale = r1.weights @ np.abs(x1**a * y1**b)
            assert abs(v1 - v2) <= 1e-12 * scale


@given(seed=st.integers(0, 2**32 - 1), degree=st.integers(0, 20))
def test_edge_rule_exact_for_polynomials(seed, degree):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)
    e = edge_rule(a, b, degree)
    c = rng.standard_normal(degree + 1)
    # integral over arclength of sum c_j s^j, s in [0, 1]
    exact = np.linalg.norm(b - a) * sum(c[j] / (j + 1) for j in range(degree + 1))
    got = e.integrate(np.polynomial.polynomial.polyval(e.params, c))
    assert got == pytest.approx(exact, rel=1e-12, abs=1e-12)
