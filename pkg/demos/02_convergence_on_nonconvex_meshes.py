"""
Convergence study for -Laplace(u) = f, u = sin(pi x) sin(pi y), on the three
mesh families. Energy errors should decay like h^k and L2 errors like
h^(k+1); the zigzag meshes consist entirely of non-convex hexagons.
"""
from autowg.analysis import run_convergence
from autowg.cases import get_case

case = get_case("sine")
for k in (1, 2):
    for family in ("uniform_squares", "distorted_quads", "nonconvex_zigzag"):
        levels = (4, 8, 16, 32) if k == 1 else (4, 8, 16)
        table = run_convergence(case, family, k, levels=levels)
        print(f"\n{family}, k = q = {k}")
        print(f"{'n':>4} {'dofs':>7} {'energy':>12} {'order':>6} {'L2':>12} {'order':>6}")
        for row in table.rows:
            eo = "" if row.level == 0 else f"{row.energy_order:6.3f}"
            lo = "" if row.level == 0 else f"{row.l2_order:6.3f}"
            print(f"{row.n:4d} {row.dofs:7d} {row.errors.energy:12.4e} {eo:>6} {row.errors.l2_field:12.4e} {lo:>6}")

# the csv written by `autowg converge` is the same table
print()
print(table.to_csv(timings=False))
