"""Discrete weak gradient on one polygonal cell.

For a weak function v = {v0, vb} with v0 in P_k(T) and vb in P_q(e) on every
edge, grad_w v is the element of [P_r(T)]^2 with

    (grad_w v, phi)_T = -(v0, div phi)_T + <vb, phi . n>_{dT}   for all phi.

Local dofs are ordered [v0 coefficients, edge 0 coefficients, edge 1, ...]
with edges in the cell's CCW order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .polybasis import (
    CellBasis,
    EdgeBasis,
    OrthonormalCellBasis,
    ProjectionError,
    VectorCellBasis,
    dim_P,
    mass_matrix,
)
from .polymesh import element_geometry_from_coords
from .polyquad import edge_rule, polygon_rule, triangulate

R_RULES = ("general", "convex_if_detected")


class GeometryError(ArithmeticError):
    """The P_r mass matrix of a cell is singular or numerically unusable."""


def select_r(n_edges, k, rule="general", convex=False):
    """Degree of the weak-gradient space.

    "general" -> 2N + k - 1 (squared-line bubble, any cell),
    "convex_if_detected" -> N + k - 1 on convex cells, else 2N + k - 1,
    an int -> that value (must be >= k - 1).
    """
    k = int(k)
    if k < 0:
        raise ValueError("k must be >= 0")
    if isinstance(rule, str):
        if rule == "general":
            return 2 * n_edges + k - 1
        if rule == "convex_if_detected":
            return n_edges + k - 1 if convex else 2 * n_edges + k - 1
        try:
            rule = int(rule)
        except ValueError:
            raise ValueError(f"unknown r rule {rule!r}") from None
    r = int(rule)
    if r < k - 1 or r < 0:
        raise ValueError(f"fixed r = {r} is below k - 1 = {k - 1}")
    return r


@dataclass(frozen=True)
class LocalDofLayout:
    k: int
    q: int
    n_edges: int

    @property
    def n_interior(self):
        return dim_P(self.k)

    @property
    def n_per_edge(self):
        return self.q + 1

    @property
    def n_local(self):
        return self.n_interior + self.n_edges * (self.q + 1)

    def edge_slice(self, i):
        start = self.n_interior + i * (self.q + 1)
        return slice(start, start + self.q + 1)


@dataclass
class WeakGradientOperator:
    G: np.ndarray  # (2 dim P_r, n_loc)
    B: np.ndarray
    M: np.ndarray  # mass matrix of the vector basis
    r: int
    layout: LocalDofLayout
    vbasis: VectorCellBasis
    pbasis: CellBasis  # P_k basis for v0
    edge_bases: list  # EdgeBasis per local edge
    rule: object  # cell rule used to build the operator (degree >= 2r)
    triangles: list
    xy: np.ndarray
    diameter: float
    normals: np.ndarray

    @property
    def k(self):
        return self.layout.k

    @property
    def q(self):
        return self.layout.q

    def apply(self, dofs):
        return apply_weak_gradient(self, dofs)

    def stiffness(self):
        return local_stiffness(self)

    def shifted(self, offset):
        """Same operator for a translated copy of the cell."""
        offset = np.asarray(offset, dtype=float)
        return WeakGradientOperator(
            G=self.G,
            B=self.B,
            M=self.M,
            r=self.r,
            layout=self.layout,
            vbasis=self.vbasis.shifted(offset),
            pbasis=self.pbasis.shifted(offset),
            edge_bases=[EdgeBasis(e.degree, e.start + offset, e.end + offset) for e in self.edge_bases],
            rule=self.rule.shifted(offset),
            triangles=self.triangles,
            xy=self.xy + offset,
            diameter=self.diameter,
            normals=self.normals,
        )


def weak_gradient_operator(xy, k, q, r, edge_flips=None, basis="orthonormal", normal_sign=1.0):
    """Build G with M_r G = B for the CCW polygon `xy`.

    edge_flips[i] True means the edge basis of local edge i is parametrized
    from vertex i+1 towards vertex i (the lower global id end). `basis` picks
    the P_r basis: "orthonormal" (default) or "monomial". `normal_sign` is a
    fault-injection hook for tests; leave it at 1.
    """
    xy = np.asarray(xy, dtype=float)
    n = len(xy)
    if k < q or q < 0:
        raise ValueError("need k >= q >= 0")
    if r < k - 1 or r < 0:
        raise ValueError(f"r = {r} must be >= k - 1")
    geom = element_geometry_from_coords(xy)
    if edge_flips is None:
        edge_flips = [False] * n
    layout = LocalDofLayout(int(k), int(q), n)
    tris = triangulate(xy)
    rule = polygon_rule(xy, max(2 * r, r + k - 1, 2 * k), triangles=tris)
    if basis == "orthonormal":
        try:
            scalar = OrthonormalCellBasis(r, geom.center, geom.diameter, rule=rule)
        except ProjectionError as exc:
            raise GeometryError(str(exc)) from exc
    elif basis == "monomial":
        scalar = CellBasis(r, geom.center, geom.diameter)
    else:
        raise ValueError(f"unknown basis {basis!r}")
    vbasis = VectorCellBasis(scalar)
    pbasis = CellBasis(k, geom.center, geom.diameter)

    M = mass_matrix(rule, vbasis)
    B = np.zeros((vbasis.dim, layout.n_local))
    ni = layout.n_interior
    # interior columns use the integrated-by-parts form
    #   -(v0, div Phi) = (grad v0, Phi) - <v0, Phi . n>
    # which avoids differentiating the high-degree Phi and cancels far less
    phi = vbasis.eval(rule.points)
    B[:, :ni] = np.einsum("mjc,m,mic->ji", phi, rule.weights, pbasis.grad(rule.points))
    edge_bases = []
    normals = normal_sign * geom.normals
    for i in range(n):
        a, b = xy[i], xy[(i + 1) % n]
        start, end = (b, a) if edge_flips[i] else (a, b)
        eb = EdgeBasis(q, start, end)
        edge_bases.append(eb)
        er = edge_rule(a, b, k + r)
        phin = (vbasis.eval(er.points) @ normals[i]).T * er.weights
        B[:, :ni] -= phin @ pbasis.eval(er.points)
        B[:, layout.edge_slice(i)] = phin @ eb.eval(er.points)

    try:
        factor = cho_factor(M)
    except LinAlgError as exc:
        raise GeometryError(f"P_{r} mass matrix not positive definite (degenerate cell)") from exc
    d = np.sqrt(np.diag(M))
    cond = np.linalg.cond(M / np.outer(d, d))
    if cond > 1e12:
        raise GeometryError(
            f"P_{r} mass matrix condition {cond:.2e} > 1e12 on a cell of diameter {geom.diameter:.3g}"
        )
    G = cho_solve(factor, B)
    return WeakGradientOperator(
        G=G,
        B=B,
        M=M,
        r=int(r),
        layout=layout,
        vbasis=vbasis,
        pbasis=pbasis,
        edge_bases=edge_bases,
        rule=rule,
        triangles=tris,
        xy=xy,
        diameter=geom.diameter,
        normals=normals,
    )


def apply_weak_gradient(op, local_dofs):
    dofs = np.asarray(local_dofs, dtype=float)
    if dofs.shape[0] != op.layout.n_local:
        raise ValueError(f"expected {op.layout.n_local} local dofs, got {dofs.shape[0]}")
    return op.G @ dofs


def local_stiffness(op):
    """K_T = G^T M_r G, the element matrix of (grad_w u, grad_w v)_T."""
    K = op.G.T @ op.M @ op.G
    return 0.5 * (K + K.T)


def local_interpolant(op, u, degree=None):
    """Local dofs of Q_h u = {Q_0 u, Q_b u} on this cell."""
    from .polybasis import project_Q0, project_Qb

    layout = op.layout
    out = np.zeros(layout.n_local)
    deg = 2 * layout.k + 6 if degree is None else degree
    out[: layout.n_interior] = project_Q0(u, op.xy, layout.k, basis=op.pbasis, degree=deg)
    for i, eb in enumerate(op.edge_bases):
        out[layout.edge_slice(i)] = project_Qb(u, eb.start, eb.end, layout.q, degree=deg)
    return out
