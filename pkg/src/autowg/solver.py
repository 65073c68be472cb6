"""Solvers for the symmetric positive definite WG system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

DIRECT_LIMIT = 20_000
# normwise backward error treated as "solved to working precision"
FLOOR_EPS = 8 * np.finfo(float).eps


class SolverError(ArithmeticError):
    pass


class NotPositiveDefinite(SolverError):
    """Non-positive pivot or curvature: the matrix is not SPD."""


@dataclass(frozen=True)
class SolveReport:
    method: str
    residual: float  # ||b - A x|| / ||b||
    iterations: int = 0
    backward_error: float = 0.0  # normwise, after symmetric diagonal scaling
    floor_limited: bool = False  # residual > tol but x is exact to working precision


def spd_factor(A):
    """Sparse LDL^T-type factorization (symmetric ordering, no pivoting).

    Raises NotPositiveDefinite when a pivot is not strictly positive, so
    success doubles as an SPD certificate.
    """
    A = sp.csc_matrix(A)
    if A.shape[0] == 0:
        return None
    try:
        lu = splu(
            A,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as exc:
        raise NotPositiveDefinite(f"factorization failed: {exc}") from exc
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise NotPositiveDefinite("factorization pivoted off the diagonal")
    piv = lu.U.diagonal()
    if not np.all(piv > 0):
        raise NotPositiveDefinite(f"non-positive pivot {piv.min():.3e}")
    return lu


def _relres(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(b - A @ x)
    return float(r / nb) if nb > 0 else float(r)


def backward_error(A, x, b):
    """Normwise backward error of x for the diagonally scaled system.

    With S = diag(A)^(-1/2) this is ||S(b - Ax)|| / (||SAS|| ||x/S|| + ||Sb||)
    in the infinity norm, so it does not depend on how the unknowns are
    scaled. Falls back to the unscaled form when the diagonal is not positive.
    """
    A = sp.csr_matrix(A)
    d = A.diagonal()
    s = 1.0 / np.sqrt(d) if d.size and np.all(d > 0) else np.ones_like(d)
    S = sp.diags(s)
    r = np.abs(s * (b - A @ x)).max(initial=0.0)
    den = sp.linalg.norm(S @ A @ S, np.inf) * np.abs(x / s).max(initial=0.0) + np.abs(s * b).max(initial=0.0)
    if den == 0:
        return 0.0 if r == 0 else float("inf")
    return float(r / den)


def _converged(A, x, b, tol):
    return _relres(A, x, b) <= tol or backward_error(A, x, b) <= FLOOR_EPS


def pcg_jacobi(A, b, tol=1e-12, maxiter=None, x0=None):
    """Conjugate gradients with diagonal preconditioning.

    Stops when ||b - Ax|| <= tol ||b|| or the backward error reaches the
    working-precision floor. When the recursively updated residual drops
    below tol but the true one does not, the residual is recomputed and CG
    restarted (at most twice). Gives up after 10 * n iterations.
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    maxiter = 10 * max(n, 1) if maxiter is None else maxiter
    d = A.diagonal()
    if np.any(d <= 0):
        raise NotPositiveDefinite("non-positive diagonal entry")
    dinv = 1.0 / d
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return np.zeros(n), 0
    z = dinv * r
    p = z.copy()
    rz = r @ z
    restarts = 0
    it = 0
    while it < maxiter:
        if np.linalg.norm(r) <= tol * nb:
            if _converged(A, x, b, tol):
                return x, it
            if restarts == 2:
                break
            r = b - A @ x
            z = dinv * r
            p = z.copy()
            rz = r @ z
            restarts += 1
        it += 1
        Ap = A @ p
        curv = p @ Ap
        if not curv > 0:
            if not np.any(p):
                break  # stagnated: nothing left to minimise over
            raise NotPositiveDefinite(f"non-positive curvature {curv:.3e} at iteration {it}")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    if _converged(A, x, b, tol):
        return x, it
    raise SolverError(
        f"CG stopped at relative residual {_relres(A, x, b):.2e} (tol {tol:g}) after {it} iterations"
    )


def solve_spd(system, tol=1e-12, method="auto"):
    """Solve A x = b. Accepts a SparseSpdSystem or an (A, b) pair.

    auto: direct below 20,000 unknowns, else Jacobi-preconditioned CG.
    Success means ||b - Ax|| <= tol ||b||, or, when tol lies below what double
    precision can deliver for this matrix, a normwise backward error of at
    most 8 eps (reported as floor_limited).
    """
    if isinstance(system, tuple):
        A, b = system
    else:
        A, b = system.A, system.b
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if method == "auto":
        method = "direct" if n < DIRECT_LIMIT else "cg_jacobi"
    if n == 0:
        return np.zeros(0), SolveReport(method, 0.0, 0)
    if method == "direct":
        lu = spd_factor(A)
        x = lu.solve(b)
        its = 0
        while its < 3 and not _converged(A, x, b, tol):
            x = x + lu.solve(b - A @ x)
            its += 1
    elif method == "cg_jacobi":
        x, its = pcg_jacobi(A, b, tol=tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = _relres(A, x, b)
    be = backward_error(A, x, b)
    if res > tol and be > FLOOR_EPS:
        raise SolverError(f"{method}: relative residual {res:.2e} above tol {tol:.0e}")
    return x, SolveReport(method, res, its, be, res > tol)
