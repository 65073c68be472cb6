"""Polynomial bases on cells and edges, mass matrices and L2 projections.

Cell bases are written in the scaled variable xi = (x - center) / scale.
`CellBasis` is the plain graded monomial basis. `OrthonormalCellBasis` spans
the same space but is built by a Gram-Schmidt (Arnoldi) recurrence in the
L2(T) inner product, which keeps high degrees (r ~ 2N + k - 1) usable.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .polyquad import edge_rule, polygon_rule

COND_WARN = 1e12


class ProjectionError(ArithmeticError):
    """Singular or indefinite mass matrix (degenerate cell or edge)."""


def graded_exponents(degree):
    """Monomial exponents (a, b) ordered by total degree, x-power descending."""
    return [(d - j, j) for d in range(degree + 1) for j in range(d + 1)]


def dim_P(degree):
    return (degree + 1) * (degree + 2) // 2


class CellBasis:
    """Scaled monomials ((x - xc)/h)^a ((y - yc)/h)^b in graded order."""

    def __init__(self, degree, center, scale):
        self.degree = int(degree)
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.exponents = graded_exponents(self.degree)
        self.dim = len(self.exponents)

    def _xi(self, pts):
        return (np.asarray(pts, dtype=float).reshape(-1, 2) - self.center) / self.scale

    def eval(self, pts):
        xi = self._xi(pts)
        px = xi[:, 0:1] ** np.arange(self.degree + 1)
        py = xi[:, 1:2] ** np.arange(self.degree + 1)
        return np.column_stack([px[:, a] * py[:, b] for a, b in self.exponents])

    def grad(self, pts):
        xi = self._xi(pts)
        m = len(xi)
        px = xi[:, 0:1] ** np.arange(self.degree + 1)
        py = xi[:, 1:2] ** np.arange(self.degree + 1)
        out = np.zeros((m, self.dim, 2))
        for j, (a, b) in enumerate(self.exponents):
            if a:
                out[:, j, 0] = a * px[:, a - 1] * py[:, b] / self.scale
            if b:
                out[:, j, 1] = b * px[:, a] * py[:, b - 1] / self.scale
        return out

    def shifted(self, offset):
        return CellBasis(self.degree, self.center + offset, self.scale)


class OrthonormalCellBasis:
    """L2(T)-orthonormal basis of P_r(T) built on a quadrature rule exact to 2r.

    New functions come from multiplying the previous degree block by xi_x
    (and the last one also by xi_y), then orthogonalising twice against all
    earlier functions. The recurrence is replayed to evaluate anywhere.
    """

    def __init__(self, degree, center, scale, rule=None, xy=None):
        self.degree = int(degree)
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.dim = dim_P(self.degree)
        if rule is None:
            rule = polygon_rule(xy, 2 * self.degree)
        if rule.exact_degree < 2 * self.degree:
            raise ProjectionError("rule must integrate degree 2r exactly")
        self._build(rule)

    def _build(self, rule):
        xi = (rule.points - self.center) / self.scale
        w = rule.weights
        self._area = float(w.sum())
        Q = np.zeros((len(w), self.dim))
        Q[:, 0] = 1.0 / np.sqrt(self._area)
        self.steps = []  # (source column, axis, h coefficients, norm)
        blocks = [[0]]
        t = 1
        for d in range(1, self.degree + 1):
            prev = blocks[-1]
            sources = [(j, 0) for j in prev] + [(prev[-1], 1)]
            block = []
            for j, axis in sources:
                v = xi[:, axis] * Q[:, j]
                h = Q[:, :t].T @ (w * v)
                v = v - Q[:, :t] @ h
                h2 = Q[:, :t].T @ (w * v)
                v = v - Q[:, :t] @ h2
                h = h + h2
                nrm = float(np.sqrt(np.dot(w, v * v)))
                if not nrm > 1e-13 * abs(Q[:, j]).max():
                    raise ProjectionError("degenerate cell: orthonormal basis construction broke down")
                Q[:, t] = v / nrm
                self.steps.append((j, axis, h, nrm))
                block.append(t)
                t += 1
            blocks.append(block)

    def eval(self, pts):
        return self._replay(pts, want_grad=False)[0]

    def grad(self, pts):
        return self._replay(pts, want_grad=True)[1]

    def eval_and_grad(self, pts):
        return self._replay(pts, want_grad=True)

    def _replay(self, pts, want_grad):
        xi = (np.asarray(pts, dtype=float).reshape(-1, 2) - self.center) / self.scale
        m = len(xi)
        V = np.zeros((m, self.dim))
        V[:, 0] = 1.0 / np.sqrt(self._area)
        G = np.zeros((m, self.dim, 2)) if want_grad else None
        for t, (j, axis, h, nrm) in enumerate(self.steps, start=1):
            V[:, t] = (xi[:, axis] * V[:, j] - V[:, :t] @ h) / nrm
            if want_grad:
                g = xi[:, axis, None] * G[:, j, :] - np.einsum("mtk,t->mk", G[:, :t, :], h)
                g[:, axis] += V[:, j] / self.scale
                G[:, t, :] = g / nrm
        return V, G

    def shifted(self, offset):
        other = object.__new__(OrthonormalCellBasis)
        other.__dict__.update(self.__dict__)
        other.center = self.center + offset
        return other


class VectorCellBasis:
    """[P_r]^2 basis: (phi_j, 0) for all j, then (0, phi_j)."""

    def __init__(self, scalar):
        self.scalar = scalar
        self.degree = scalar.degree
        self.dim = 2 * scalar.dim

    def eval(self, pts):
        s = self.scalar.eval(pts)
        m, n = s.shape
        out = np.zeros((m, 2 * n, 2))
        out[:, :n, 0] = s
        out[:, n:, 1] = s
        return out

    def div(self, pts):
        g = self.scalar.grad(pts)
        return np.concatenate([g[:, :, 0], g[:, :, 1]], axis=1)

    def combine(self, coeffs, pts):
        """Evaluate sum_j c_j Phi_j at pts -> (m, 2)."""
        s = self.scalar.eval(pts)
        n = s.shape[1]
        c = np.asarray(coeffs)
        return np.column_stack([s @ c[:n], s @ c[n:]])

    def shifted(self, offset):
        return VectorCellBasis(self.scalar.shifted(offset))


class EdgeBasis:
    """Monomials s^j, j <= q, in normalized arclength s from `start` to `end`."""

    def __init__(self, degree, start, end):
        self.degree = int(degree)
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)
        self.dim = self.degree + 1
        self.length = float(np.linalg.norm(self.end - self.start))

    def param(self, pts):
        d = self.end - self.start
        return (np.asarray(pts, dtype=float).reshape(-1, 2) - self.start) @ d / (d @ d)

    def eval_s(self, s):
        return np.asarray(s, dtype=float)[:, None] ** np.arange(self.dim)

    def eval(self, pts):
        return self.eval_s(self.param(pts))


def _gram(vals, weights):
    if vals.ndim == 3:
        return np.einsum("mik,m,mjk->ij", vals, weights, vals)
    return vals.T @ (weights[:, None] * vals)


def _spd_solve(M, rhs):
    Ms = 0.5 * (M + M.T)
    try:
        factor = cho_factor(Ms)
    except LinAlgError as exc:
        raise ProjectionError("mass matrix is not positive definite (degenerate geometry)") from exc
    d = np.sqrt(np.diag(Ms))
    cond = np.linalg.cond(Ms / np.outer(d, d))
    if cond > COND_WARN:
        warnings.warn(f"mass matrix condition number {cond:.2e} exceeds {COND_WARN:.0e}", RuntimeWarning, stacklevel=3)
    return cho_solve(factor, rhs)


def mass_matrix(rule, basis):
    """M_ij = (phi_i, phi_j) on the rule's domain; needs rule degree >= 2 * basis degree."""
    if rule.exact_degree < 2 * basis.degree:
        raise ProjectionError(
            f"rule degree {rule.exact_degree} too low for basis degree {basis.degree}"
        )
    M = _gram(basis.eval(rule.points), rule.weights)
    return 0.5 * (M + M.T)


def _field_values(f, pts):
    return np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)


def project_Q0(f, xy, k, basis=None, center=None, scale=None, degree=None, rule=None):
    """L2 projection of the scalar field f(x, y) onto P_k of the polygon xy.

    Returns coefficients in `basis` (default: scaled monomials about the
    cell's interior point M with scale h_T).
    """
    xy = np.asarray(xy, dtype=float)
    if basis is None:
        if center is None or scale is None:
            from .polymesh import element_geometry_from_coords

            g = element_geometry_from_coords(xy)
            center = g.center if center is None else center
            scale = g.diameter if scale is None else scale
        basis = CellBasis(k, center, scale)
    if rule is None:
        rule = polygon_rule(xy, max(2 * basis.degree + 6, 2 * basis.degree) if degree is None else degree)
    phi = basis.eval(rule.points)
    M = _gram(phi, rule.weights)
    b = phi.T @ (rule.weights * _field_values(f, rule.points))
    return _spd_solve(M, b)


def project_Qb(g, start, end, q, degree=None, rule=None):
    """L2 projection of g(x, y) onto P_q of the segment, monomials in arclength s."""
    basis = EdgeBasis(q, start, end)
    if rule is None:
        rule = edge_rule(start, end, 2 * q + 6 if degree is None else degree)
    phi = basis.eval(rule.points)
    M = phi.T @ (rule.weights[:, None] * phi)
    b = phi.T @ (rule.weights * _field_values(g, rule.points))
    return _spd_solve(M, b)


def project_Qr_vector(F, xy, r, basis=None, degree=None, rule=None):
    """Componentwise L2 projection of F(x, y) -> (m, 2) onto [P_r]^2.

    Default basis is the orthonormal one built on the cell.
    """
    xy = np.asarray(xy, dtype=float)
    if basis is None:
        from .polymesh import element_geometry_from_coords

        g = element_geometry_from_coords(xy)
        basis = VectorCellBasis(OrthonormalCellBasis(r, g.center, g.diameter, xy=xy))
    if rule is None:
        rule = polygon_rule(xy, 2 * basis.degree + 6 if degree is None else degree)
    phi = basis.eval(rule.points)
    M = _gram(phi, rule.weights)
    vals = _field_values(F, rule.points).reshape(-1, 2)
    b = np.einsum("mjk,m,mk->j", phi, rule.weights, vals)
    return _spd_solve(M, b)
