"""Global dofs and assembly of the stabilizer-free WG system

    sum_T (grad_w u_h, grad_w v)_T = sum_T (f, v0)_T    for all v in V_h^0.

Boundary edges carry no unknowns (homogeneous Dirichlet by elimination).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .polybasis import dim_P
from .polyquad import polygon_rule
from .weakgrad import local_interpolant, local_stiffness, select_r, weak_gradient_operator


@dataclass(frozen=True)
class GlobalDofMap:
    k: int
    q: int
    cell_offset: np.ndarray  # first interior dof of each cell
    edge_offset: np.ndarray  # first dof of each edge, -1 if eliminated
    n_dofs: int
    local_to_global: tuple  # per cell: int array, -1 for eliminated entries

    @property
    def n_interior_per_cell(self):
        return dim_P(self.k)

    def cell_dofs(self, c):
        return self.local_to_global[c]

    def local_values(self, x, c):
        """Local dof vector of cell c; eliminated entries are zero."""
        l2g = self.local_to_global[c]
        out = np.zeros(len(l2g))
        mask = l2g >= 0
        out[mask] = np.asarray(x)[l2g[mask]]
        return out


def build_dof_map(mesh, k, q, eliminate_boundary=True):
    """Cell interiors first (cell order), then edges (edge order)."""
    k, q = int(k), int(q)
    if not k >= q >= 0:
        raise ValueError("need k >= q >= 0")
    n0 = dim_P(k)
    cell_offset = np.arange(mesh.n_cells) * n0
    nxt = mesh.n_cells * n0
    edge_offset = np.full(mesh.n_edges, -1, dtype=np.int64)
    for e, edge in enumerate(mesh.edges):
        if edge.boundary and eliminate_boundary:
            continue
        edge_offset[e] = nxt
        nxt += q + 1
    l2g = []
    for c in range(mesh.n_cells):
        idx = list(range(cell_offset[c], cell_offset[c] + n0))
        for e in mesh.cell_edges[c]:
            off = edge_offset[e]
            idx += [-1] * (q + 1) if off < 0 else list(range(off, off + q + 1))
        l2g.append(np.array(idx, dtype=np.int64))
    return GlobalDofMap(k, q, cell_offset, edge_offset, int(nxt), tuple(l2g))


def _shape_key(mesh, c, k, q, r, basis):
    xy = mesh.cell_coords(c)
    h = mesh.geometry(c).diameter
    rel = np.round((xy - xy[0]) / h, 11) + 0.0
    flips = tuple(mesh.edge_flip(c, i) for i in range(len(xy)))
    return (len(xy), rel.tobytes(), round(h, 14), flips, k, q, r, basis)


def build_operators(mesh, k, q, r_rule="general", threads=1, basis="orthonormal", cache=True, normal_sign=1.0):
    """Weak gradient operator per cell.

    Translated copies of a cell (same shape, size and edge orientations)
    reuse one operator, shifted.
    """
    rs = [select_r(len(mesh.cells[c]), k, r_rule, mesh.geometry(c).convex) for c in range(mesh.n_cells)]

    def build(c):
        flips = [mesh.edge_flip(c, i) for i in range(len(mesh.cells[c]))]
        return weak_gradient_operator(mesh.cell_coords(c), k, q, rs[c], flips, basis=basis, normal_sign=normal_sign)

    if not cache:
        return _map(build, range(mesh.n_cells), threads)

    keys = [_shape_key(mesh, c, k, q, rs[c], basis) for c in range(mesh.n_cells)]
    first = {}
    for c, key in enumerate(keys):
        first.setdefault(key, c)
    reps = sorted(first.values())
    built = dict(zip(reps, _map(build, reps, threads)))
    ops = []
    for c, key in enumerate(keys):
        rep = first[key]
        if rep == c:
            ops.append(built[c])
        else:
            offset = mesh.cell_coords(c)[0] - mesh.cell_coords(rep)[0]
            ops.append(built[rep].shifted(offset))
    return ops


def _map(fn, items, threads):
    items = list(items)
    if threads is None or threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, items))


@dataclass
class SparseSpdSystem:
    A: sp.csr_matrix
    b: np.ndarray
    mesh: object
    dofmap: GlobalDofMap
    operators: list
    r_rule: object = "general"

    @property
    def k(self):
        return self.dofmap.k

    @property
    def q(self):
        return self.dofmap.q

    @property
    def n_dofs(self):
        return self.dofmap.n_dofs


def load_vector(mesh, dofmap, operators, f, degree=None):
    """b_i = (f, phi_i^0)_T for interior dofs, zero for edge dofs."""
    b = np.zeros(dofmap.n_dofs)
    if f is None:
        return b
    deg = 2 * dofmap.k + 2 if degree is None else int(degree)
    n0 = dofmap.n_interior_per_cell
    for c, op in enumerate(operators):
        rule = polygon_rule(op.xy, deg, triangles=op.triangles)
        fv = np.asarray(f(rule.points[:, 0], rule.points[:, 1]), dtype=float)
        off = dofmap.cell_offset[c]
        b[off : off + n0] += op.pbasis.eval(rule.points).T @ (rule.weights * fv)
    return b


def assemble_matrix(dofmap, operators, threads=1):
    stiff = _map(local_stiffness, operators, threads)
    rows, cols, vals = [], [], []
    for c, K in enumerate(stiff):
        l2g = dofmap.local_to_global[c]
        keep = np.flatnonzero(l2g >= 0)
        g = l2g[keep]
        rows.append(np.repeat(g, len(g)))
        cols.append(np.tile(g, len(g)))
        vals.append(K[np.ix_(keep, keep)].ravel())
    n = dofmap.n_dofs
    if not rows:
        return sp.csr_matrix((n, n))
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    A.sum_duplicates()
    return A


def assemble(mesh, k, q=None, r_rule="general", f=None, threads=1, load_degree=None,
             eliminate_boundary=True, operators=None, basis="orthonormal"):
    """Assemble A and b of the WG scheme on `mesh`.

    `load_degree` is the quadrature degree for (f, v0)_T, default 2k + 2.
    """
    q = k if q is None else q
    dofmap = build_dof_map(mesh, k, q, eliminate_boundary=eliminate_boundary)
    if operators is None:
        operators = build_operators(mesh, k, q, r_rule, threads=threads, basis=basis)
    A = assemble_matrix(dofmap, operators, threads=threads)
    b = load_vector(mesh, dofmap, operators, f, degree=load_degree)
    return SparseSpdSystem(A, b, mesh, dofmap, operators, r_rule)


def interpolate(system, u, degree=None):
    """Global dof vector of Q_h u (boundary edge values dropped when eliminated)."""
    x = np.zeros(system.n_dofs)
    dm = system.dofmap
    for c, op in enumerate(system.operators):
        loc = local_interpolant(op, u, degree)
        l2g = dm.local_to_global[c]
        mask = l2g >= 0
        # shared edge values agree up to rounding; last writer wins
        x[l2g[mask]] = loc[mask]
    return x
