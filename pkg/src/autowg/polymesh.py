"""Polygonal meshes: construction, generators, element geometry, text I/O.

Cells are simple polygons (convex or not) stored counter-clockwise. Edges are
keyed by their sorted global vertex pair, so an interior edge is shared by
exactly two cells traversing it in opposite directions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

COLLINEAR_TOL = 1e-12

FAMILIES = ("uniform_squares", "distorted_quads", "nonconvex_zigzag", "single_polygon")


class MeshError(ValueError):
    """Invalid mesh input (bad indices, self-intersection, inconsistent edges)."""


def signed_area(xy):
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_intersect(p1, p2, p3, p4, tol=1e-14):
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True

    def on_segment(p, q, r):
        return (
            min(p[0], q[0]) - tol <= r[0] <= max(p[0], q[0]) + tol
            and min(p[1], q[1]) - tol <= r[1] <= max(p[1], q[1]) + tol
        )

    if abs(d1) <= tol and on_segment(p3, p4, p1):
        return True
    if abs(d2) <= tol and on_segment(p3, p4, p2):
        return True
    if abs(d3) <= tol and on_segment(p1, p2, p3):
        return True
    if abs(d4) <= tol and on_segment(p1, p2, p4):
        return True
    return False


def is_simple(xy):
    """True if the closed polygon has no self-intersections.

    Adjacent edges may only touch at their shared vertex; collinear
    back-tracking counts as an intersection.
    """
    n = len(xy)
    if n < 3:
        return False
    for i in range(n):
        a, b = xy[i], xy[(i + 1) % n]
        if np.allclose(a, b, atol=0.0, rtol=0.0):
            return False
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                # neighbours share a vertex: only fold-back overlap is illegal
                c = xy[(j + 1) % n] if j == i + 1 else xy[j]
                shared = b if j == i + 1 else a
                other = a if j == i + 1 else b
                u = other - shared
                v = c - shared
                if abs(u[0] * v[1] - u[1] * v[0]) <= 1e-14 * (np.dot(u, u) + np.dot(v, v)) and np.dot(u, v) > 0:
                    return False
                continue
            c, d = xy[j], xy[(j + 1) % n]
            if _segments_intersect(a, b, c, d):
                return False
    return True


def turn_signs(xy, tol=COLLINEAR_TOL):
    """Sign (+1, 0, -1) of the turn at every vertex of a CCW polygon."""
    prev = np.roll(xy, 1, axis=0)
    nxt = np.roll(xy, -1, axis=0)
    a = xy - prev
    b = nxt - xy
    cr = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    scale = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    rel = cr / scale
    return np.where(rel > tol, 1, np.where(rel < -tol, -1, 0))


def point_in_polygon(pt, xy):
    """Even-odd ray casting; boundary points are not classified reliably."""
    x, y = pt
    inside = False
    n = len(xy)
    for i in range(n):
        x1, y1 = xy[i]
        x2, y2 = xy[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xint > x:
                inside = not inside
    return inside


def distance_to_boundary(pt, xy):
    pt = np.asarray(pt, dtype=float)
    a = xy
    b = np.roll(xy, -1, axis=0)
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", pt - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return float(np.min(np.linalg.norm(proj - pt, axis=1)))


@dataclass(frozen=True)
class MeshEdge:
    vertices: tuple  # (lo, hi) global ids, lo < hi
    cells: tuple  # one or two adjacent cell ids
    local_index: tuple  # local edge position inside each adjacent cell
    length: float
    normals: np.ndarray  # (len(cells), 2) outward unit normal per adjacent cell

    @property
    def boundary(self):
        return len(self.cells) == 1

    def normal_for(self, cell_id):
        return self.normals[self.cells.index(cell_id)]


@dataclass(frozen=True)
class ElementGeometry:
    diameter: float
    area: float
    barycenter: np.ndarray
    center: np.ndarray  # interior scaling point M
    normals: np.ndarray  # (N, 2) outward unit normals, edge i = (v_i, v_{i+1})
    edge_lengths: np.ndarray
    convex: bool
    collinear_vertices: tuple


@dataclass(frozen=True, eq=False)
class PolyMesh:
    vertices: np.ndarray  # (nv, 2)
    cells: tuple  # tuple of tuples of vertex ids, CCW
    edges: tuple  # tuple of MeshEdge
    cell_edges: tuple  # per cell: global edge id of local edge i
    _geometry: list = field(default_factory=list, repr=False)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edges)

    def cell_coords(self, c):
        return self.vertices[list(self.cells[c])]

    def geometry(self, c):
        return self._geometry[c]

    def edge_flip(self, c, i):
        """True if local edge i of cell c runs from the higher to the lower global id."""
        ids = self.cells[c]
        return ids[i] > ids[(i + 1) % len(ids)]

    @cached_property
    def h(self):
        return max(g.diameter for g in self._geometry)

    @property
    def boundary_edges(self):
        return [e for e, edge in enumerate(self.edges) if edge.boundary]

    @property
    def interior_edges(self):
        return [e for e, edge in enumerate(self.edges) if not edge.boundary]

    def total_area(self):
        return float(sum(g.area for g in self._geometry))

    def convex_count(self):
        return sum(1 for g in self._geometry if g.convex)


def _largest_ear_centroid(xy):
    from .polyquad import triangulate

    tris = triangulate(xy)
    best, best_area = None, -1.0
    for t in tris:
        area = signed_area(xy[list(t)])
        if area > best_area:
            best, best_area = t, area
    return xy[list(best)].mean(axis=0)


def element_geometry_from_coords(xy):
    """Geometric quantities of one CCW simple polygon."""
    xy = np.asarray(xy, dtype=float)
    area = signed_area(xy)
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    bary = np.array([np.sum((x + xn) * cr), np.sum((y + yn) * cr)]) / (6.0 * area)
    diff = xy[:, None, :] - xy[None, :, :]
    diam = float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff))))
    t = np.roll(xy, -1, axis=0) - xy
    lengths = np.linalg.norm(t, axis=1)
    normals = np.column_stack([t[:, 1], -t[:, 0]]) / lengths[:, None]
    signs = turn_signs(xy)
    convex = bool(np.all(signs >= 0))
    collinear = tuple(int(i) for i in np.flatnonzero(signs == 0))

    center = bary
    if not (point_in_polygon(bary, xy) and distance_to_boundary(bary, xy) > 1e-10 * diam):
        center = _largest_ear_centroid(xy)
    return ElementGeometry(
        diameter=diam,
        area=area,
        barycenter=bary,
        center=np.asarray(center, dtype=float),
        normals=normals,
        edge_lengths=lengths,
        convex=convex,
        collinear_vertices=collinear,
    )


def build_mesh(vertices, cells):
    """Validate cells and build the edge table, adjacency and geometry caches.

    Clockwise cells are reversed to CCW. Raises MeshError for out-of-range
    vertex ids, non-simple cells and inconsistent edge sharing.
    """
    verts = np.array(vertices, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(verts)):
        raise MeshError("non-finite vertex coordinates")
    nv = len(verts)
    fixed = []
    for c, ids in enumerate(cells):
        ids = [int(i) for i in ids]
        if len(ids) < 3:
            raise MeshError(f"cell {c}: fewer than 3 vertices")
        if any(i < 0 or i >= nv for i in ids):
            raise MeshError(f"cell {c}: vertex id out of range")
        if len(set(ids)) != len(ids):
            raise MeshError(f"cell {c}: repeated vertex id")
        xy = verts[ids]
        if not is_simple(xy):
            raise MeshError(f"cell {c}: polygon is not simple")
        a = signed_area(xy)
        if a == 0.0:
            raise MeshError(f"cell {c}: zero area")
        if a < 0:
            ids = ids[::-1]
        fixed.append(tuple(ids))

    edge_index = {}
    edge_cells = []
    edge_local = []
    edge_dir = []
    cell_edges = []
    for c, ids in enumerate(fixed):
        n = len(ids)
        ce = []
        for i in range(n):
            a, b = ids[i], ids[(i + 1) % n]
            key = (min(a, b), max(a, b))
            forward = a < b
            if key not in edge_index:
                edge_index[key] = len(edge_cells)
                edge_cells.append([c])
                edge_local.append([i])
                edge_dir.append([forward])
            else:
                e = edge_index[key]
                if len(edge_cells[e]) >= 2:
                    raise MeshError(f"edge {key} shared by more than two cells")
                if edge_dir[e][0] == forward:
                    raise MeshError(f"edge {key}: duplicate orientation (overlapping cells)")
                edge_cells[e].append(c)
                edge_local[e].append(i)
                edge_dir[e].append(forward)
            ce.append(edge_index[key])
        cell_edges.append(tuple(ce))

    geometry = [element_geometry_from_coords(verts[list(ids)]) for ids in fixed]
    edges = []
    for key, e in sorted(edge_index.items(), key=lambda kv: kv[1]):
        p, q = verts[key[0]], verts[key[1]]
        normals = np.array([geometry[c].normals[i] for c, i in zip(edge_cells[e], edge_local[e])])
        edges.append(
            MeshEdge(
                vertices=key,
                cells=tuple(edge_cells[e]),
                local_index=tuple(edge_local[e]),
                length=float(np.linalg.norm(q - p)),
                normals=normals,
            )
        )
    return PolyMesh(
        vertices=verts,
        cells=tuple(fixed),
        edges=tuple(edges),
        cell_edges=tuple(cell_edges),
        _geometry=geometry,
    )


def element_geometry(mesh, cell_id):
    return mesh.geometry(cell_id)


# generators ---------------------------------------------------------------


def _grid(n):
    s = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(s, s, indexing="xy")
    return np.column_stack([X.ravel(), Y.ravel()])


def _quad_cells(n):
    cells = []
    for j in range(n):
        for i in range(n):
            v = j * (n + 1) + i
            cells.append((v, v + 1, v + n + 2, v + n + 1))
    return cells


def uniform_squares(n):
    return build_mesh(_grid(n), _quad_cells(n))


def distorted_quads(n, amplitude=0.1):
    """Uniform grid pushed through x -> x + a*sin(2 pi x)sin(2 pi y) (both coordinates).

    The map fixes the boundary of the unit square and has positive Jacobian
    for a < 1/(2 pi).
    """
    xy = _grid(n)
    bump = amplitude * np.sin(2 * np.pi * xy[:, 0]) * np.sin(2 * np.pi * xy[:, 1])
    xy = xy + bump[:, None]
    try:
        mesh = build_mesh(xy, _quad_cells(n))
    except MeshError as exc:
        raise MeshError(f"distorted_quads(n={n}): degenerate perturbation: {exc}") from exc
    for c in range(mesh.n_cells):
        if signed_area(mesh.cell_coords(c)) <= 0:
            raise MeshError(f"distorted_quads(n={n}): inverted cell {c}")
    return mesh


def nonconvex_zigzag(n):
    """n x n squares, each cut into two congruent non-convex hexagons.

    The cut runs from the left-side midpoint through (x0 + w/4, ym + h/4) and
    (x0 + 3w/4, ym - h/4) to the right-side midpoint.
    """
    verts = {}
    coords = []

    def vid(x, y):
        key = (round(x * 4 * n), round(y * 4 * n))
        if key not in verts:
            verts[key] = len(coords)
            coords.append((x, y))
        return verts[key]

    w = 1.0 / n
    cells = []
    for j in range(n):
        for i in range(n):
            x0, y0 = i * w, j * w
            x1, y1 = x0 + w, y0 + w
            ym = y0 + 0.5 * w
            p1 = vid(x0 + 0.25 * w, ym + 0.25 * w)
            p2 = vid(x0 + 0.75 * w, ym - 0.25 * w)
            lm, rm = vid(x0, ym), vid(x1, ym)
            cells.append((vid(x0, y0), vid(x1, y0), rm, p2, p1, lm))
            cells.append((lm, p1, p2, rm, vid(x1, y1), vid(x0, y1)))
    return build_mesh(np.array(coords), cells)


def single_polygon(xy):
    xy = np.asarray(xy, dtype=float)
    return build_mesh(xy, [list(range(len(xy)))])


L_HEXAGON = np.array([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)], dtype=float)


def generate_mesh(family, n=1, polygon=None):
    if family == "uniform_squares":
        gen = uniform_squares
    elif family == "distorted_quads":
        gen = distorted_quads
    elif family == "nonconvex_zigzag":
        gen = nonconvex_zigzag
    elif family == "single_polygon":
        return single_polygon(L_HEXAGON if polygon is None else polygon)
    else:
        raise ValueError(f"unknown mesh family {family!r}; expected one of {FAMILIES}")
    if int(n) < 1:
        raise ValueError("mesh level n must be >= 1")
    return gen(int(n))


# diagnostics ----------------------------------------------------------------


def shape_report(mesh, sliver_threshold=0.05):
    """Shape-regularity proxies: edge/h_T, area/h_T^2 and edge counts."""
    edge_ratio = []
    area_ratio = []
    counts = []
    for c in range(mesh.n_cells):
        g = mesh.geometry(c)
        edge_ratio.append(g.edge_lengths.min() / g.diameter)
        area_ratio.append(g.area / g.diameter**2)
        counts.append(len(mesh.cells[c]))
    edge_ratio = np.array(edge_ratio)
    area_ratio = np.array(area_ratio)
    flagged = [int(c) for c in np.flatnonzero(np.minimum(edge_ratio, area_ratio) < sliver_threshold)]
    return {
        "n_cells": mesh.n_cells,
        "n_edges": mesh.n_edges,
        "n_boundary_edges": len(mesh.boundary_edges),
        "convex_count": mesh.convex_count(),
        "min_edge_over_h": float(edge_ratio.min()),
        "max_edge_over_h": float(edge_ratio.max()),
        "min_area_over_h2": float(area_ratio.min()),
        "max_area_over_h2": float(area_ratio.max()),
        "min_edges_per_cell": int(min(counts)),
        "max_edges_per_cell": int(max(counts)),
        "flagged_cells": flagged,
    }


# wgmesh text format ---------------------------------------------------------


def write_mesh(mesh, path):
    lines = ["wgmesh 1", f"vertices {len(mesh.vertices)}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"cells {mesh.n_cells}")
    lines += [" ".join(str(i) for i in ids) for ids in mesh.cells]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path):
    tokens = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not tokens or tokens[0] != ["wgmesh", "1"]:
        raise MeshError("missing 'wgmesh 1' header")
    if tokens[1][0] != "vertices":
        raise MeshError("expected 'vertices <count>'")
    nv = int(tokens[1][1])
    verts = [(float(t[0]), float(t[1])) for t in tokens[2 : 2 + nv]]
    head = tokens[2 + nv]
    if head[0] != "cells":
        raise MeshError("expected 'cells <count>'")
    nc = int(head[1])
    cells = [[int(i) for i in t] for t in tokens[3 + nv : 3 + nv + nc]]
    if len(verts) != nv or len(cells) != nc:
        raise MeshError("truncated mesh file")
    return build_mesh(np.array(verts), cells)
