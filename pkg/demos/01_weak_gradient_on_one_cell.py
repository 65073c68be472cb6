"""
Weak gradient on a single non-convex cell (the L-shaped hexagon).

We build the local operator G for k = q = 2 with r = 2N + k - 1 = 13, check
that it reproduces the L2 projection of the true gradient for polynomials of
degree <= k, and look at the spectrum of the local stiffness matrix: exactly
one zero eigenvalue (the constants), all others positive.
"""
import numpy as np

from autowg.analysis import commuting_residual
from autowg.polybasis import graded_exponents
from autowg.polymesh import L_HEXAGON
from autowg.verify import monomial
from autowg.weakgrad import local_interpolant, local_stiffness, select_r, weak_gradient_operator

k = 2
r = select_r(len(L_HEXAGON), k)
op = weak_gradient_operator(L_HEXAGON, k, k, r)
print(f"cell with {len(L_HEXAGON)} vertices, k = q = {k}, r = {r}")
print(f"G is {op.G.shape[0]} x {op.G.shape[1]}")

print("\nmonomial   max |G Q_h u - Q_r grad u|")
for a, b in graded_exponents(k):
    res = commuting_residual(op, *monomial(a, b))
    print(f"x^{a} y^{b}      {res:.2e}")

# u = x^2: the weak gradient evaluated at the quadrature points is (2x, 0)
v = local_interpolant(op, lambda x, y: x**2)
p = op.rule.points
g = op.vbasis.combine(op.G @ v, p)
print(f"\nmax deviation of grad_w(x^2) from (2x, 0): {np.abs(g - np.column_stack([2 * p[:, 0], 0 * p[:, 0]])).max():.2e}")

K = local_stiffness(op)
ev = np.linalg.eigvalsh(K)
print(f"\nlocal stiffness: {len(ev)} eigenvalues, smallest three {ev[:3]}")
print(f"zero eigenvalues (|lambda| < 1e-10 max): {np.sum(np.abs(ev) < 1e-10 * ev.max())}")
