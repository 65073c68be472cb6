"""Stabilizer-free weak Galerkin finite elements for the Poisson problem on
polygonal meshes, including non-convex cells.

    >>> from autowg import generate_mesh, get_case, solve, error_report
    >>> mesh = generate_mesh("nonconvex_zigzag", 8)
    >>> sol = solve(mesh, get_case("sine"), k=1)
    >>> error_report(sol, get_case("sine")).energy  # doctest: +SKIP
"""
from .analysis import (
    CSV_COLUMNS,
    BubbleError,
    BubbleReport,
    ConvergenceTable,
    ErrorReport,
    RatioReport,
    WgSolution,
    bubble_diagnostics,
    commuting_residual,
    energy_norm,
    energy_norm_elementwise,
    error_equation_residual,
    error_report,
    grad_v0_constant,
    ibp_consistency,
    norm_equivalence_report,
    run_convergence,
    seminorm_1h,
    solve,
)
from .assembly import GlobalDofMap, SparseSpdSystem, assemble, build_dof_map, build_operators, interpolate
from .cases import CASES, ManufacturedCase, get_case
from .polybasis import (
    CellBasis,
    EdgeBasis,
    OrthonormalCellBasis,
    ProjectionError,
    VectorCellBasis,
    dim_P,
    project_Q0,
    project_Qb,
    project_Qr_vector,
)
from .polymesh import (
    FAMILIES,
    L_HEXAGON,
    ElementGeometry,
    MeshError,
    PolyMesh,
    build_mesh,
    element_geometry,
    generate_mesh,
    read_mesh,
    shape_report,
    write_mesh,
)
from .polyquad import QuadratureError, QuadratureRule, edge_rule, polygon_rule, triangulate
from .solver import NotPositiveDefinite, SolveReport, SolverError, solve_spd
from .weakgrad import GeometryError, WeakGradientOperator, select_r, weak_gradient_operator

__version__ = "0.1.0"
