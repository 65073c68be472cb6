"""Quadrature on simple polygons (via ear clipping) and on straight edges."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

# Collapsed Gauss rules have no intrinsic ceiling; this bound only guards
# against runaway requests. r = 2N+k-1 with N = 12, k = 4 gives 2r = 54.
MAX_DEGREE = 60


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (m, 2)
    weights: np.ndarray  # (m,)
    exact_degree: int

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))

    def shifted(self, offset):
        return QuadratureRule(self.points + offset, self.weights, self.exact_degree)


@dataclass(frozen=True)
class EdgeRule(QuadratureRule):
    params: np.ndarray = None  # arclength fraction s in [0, 1] measured from `start`
    start: np.ndarray = None
    end: np.ndarray = None


def _check_degree(degree):
    degree = int(degree)
    if degree < 0:
        raise QuadratureError("quadrature degree must be >= 0")
    if degree > MAX_DEGREE:
        raise QuadratureError(f"quadrature degree {degree} exceeds ceiling {MAX_DEGREE}")
    return degree


def _area2(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _inside_or_on(p, a, b, c, tol):
    return _area2(a, b, p) >= -tol and _area2(b, c, p) >= -tol and _area2(c, a, p) >= -tol


def triangulate(xy):
    """Ear-clipping triangulation of a simple CCW polygon.

    Returns a list of N-2 local index triples, each with positive area.
    Among the available ears the one with the best minimum angle proxy is
    clipped first, which keeps slivers out of regular shapes.
    """
    xy = np.asarray(xy, dtype=float)
    n = len(xy)
    if n < 3:
        raise QuadratureError("polygon needs at least 3 vertices")
    scale = float(np.max(np.ptp(xy, axis=0))) or 1.0
    tol = 1e-13 * scale * scale
    idx = list(range(n))
    tris = []
    while len(idx) > 3:
        m = len(idx)
        best, best_q = None, -np.inf
        for t in range(m):
            i0, i1, i2 = idx[t - 1], idx[t], idx[(t + 1) % m]
            a, b, c = xy[i0], xy[i1], xy[i2]
            ar = _area2(a, b, c)
            if ar <= tol:
                continue
            ear = True
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = xy[j]
                if _inside_or_on(p, a, b, c, tol) and not (
                    np.array_equal(p, a) or np.array_equal(p, b) or np.array_equal(p, c)
                ):
                    ear = False
                    break
            if not ear:
                continue
            perim2 = np.sum((b - a) ** 2) + np.sum((c - b) ** 2) + np.sum((a - c) ** 2)
            q = ar / perim2
            if q > best_q + 1e-12:
                best, best_q = t, q
        if best is None:
            raise QuadratureError("no ear found: polygon is not simple or not CCW")
        m = len(idx)
        tris.append((idx[best - 1], idx[best], idx[(best + 1) % m]))
        del idx[best]
    a, b, c = xy[idx[0]], xy[idx[1]], xy[idx[2]]
    if _area2(a, b, c) <= tol:
        raise QuadratureError("degenerate final triangle: polygon is not simple or not CCW")
    tris.append(tuple(idx))
    return tris


@lru_cache(maxsize=None)
def reference_triangle_rule(degree):
    """Collapsed Gauss-Jacobi rule on the triangle (0,0),(1,0),(0,1).

    Exact for total degree <= `degree`; weights are positive and sum to 1/2.
    """
    degree = _check_degree(degree)
    m = max(1, (degree + 2) // 2)
    # Duffy map x = u(1-v), y = v with dx dy = (1-v) du dv
    u, wu = roots_legendre(m)
    v, wv = roots_jacobi(m, 1.0, 0.0)
    u = 0.5 * (u + 1.0)
    wu = 0.5 * wu
    v = 0.5 * (v + 1.0)
    wv = 0.25 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    x = (U * (1.0 - V)).ravel()
    y = V.ravel()
    pts = np.column_stack([x, y])
    pts.setflags(write=False)
    w = W.ravel()
    w.setflags(write=False)
    return pts, w


def triangle_rule(a, b, c, degree):
    ref, w = reference_triangle_rule(degree)
    a = np.asarray(a, dtype=float)
    J = np.column_stack([np.asarray(b, float) - a, np.asarray(c, float) - a])
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    pts = a + ref @ J.T
    return QuadratureRule(pts, w * abs(det), int(degree))


def polygon_rule(xy, degree, triangles=None):
    """Composite rule over an ear-clipping triangulation of the polygon `xy`."""
    xy = np.asarray(xy, dtype=float)
    degree = _check_degree(degree)
    if triangles is None:
        triangles = triangulate(xy)
    pts, wts = [], []
    for t in triangles:
        r = triangle_rule(xy[t[0]], xy[t[1]], xy[t[2]], degree)
        pts.append(r.points)
        wts.append(r.weights)
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), degree)


@lru_cache(maxsize=None)
def _gauss_unit(m):
    s, w = roots_legendre(m)
    return 0.5 * (s + 1.0), 0.5 * w


def edge_rule(start, end, degree):
    """Gauss-Legendre rule with ceil((degree+1)/2) points on the segment start->end."""
    degree = _check_degree(degree)
    m = max(1, -(-(degree + 1) // 2))
    s, w = _gauss_unit(m)
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    length = float(np.linalg.norm(b - a))
    pts = a + np.outer(s, b - a)
    return EdgeRule(pts, w * length, degree, params=s, start=a, end=b)
