"""Audit the characteristic constraint equations on 3D gridded field data.

Characteristic initial data (E, B, rho, j) must satisfy two vector
constraints W1 = W2 = 0; these are algebraically equivalent to a pair of
scalar constraints plus the vanishing of either tangential projection
k x W1 or k x W2.  The auditor evaluates everything with shared
second-order stencils, so the recombination identities between the
formulations hold at machine precision no matter what data it is fed.

The script embeds a recorded solver slice into 3D (a consistent data set),
audits it over grid refinements to expose the O(h^2) truncation error, and
then manufactures a violation to show all three formulations fail together.
"""

import numpy as np

from vmcone import (RunConfig, run, embed_symmetric_solution, audit,
                    check_equivalence, GriddedFieldSet)

config = RunConfig(
    datum_name="shell_polynomial",
    datum_params={"amplitude": 10.0, "r_support": [0.3, 0.6],
                  "w_max": 0.06, "q_support": [0.0004, 0.0008]},
    resolution=(12, 12, 12), n_shells=256, dv=0.01, v_final=2.0,
)
history = run(config)

print("consistent data (embedded solver slice at v = 1):")
print("  nodes    h        max|W1|    max|W2|    scalar2    identity(rel)")
for n in (17, 33, 65):
    grid = embed_symmetric_solution(history, 1.0, n, 0.7, r_cut=0.2)
    res = audit(grid)
    print(f"  {n:5d}  {res['h']:.4f}   {res['W1_max']:.2e}   "
          f"{res['W2_max']:.2e}   {res['scalar2_max']:.2e}   "
          f"{res['identity1_rel']:.1e}")

grid = embed_symmetric_solution(history, 1.0, 49, 0.7, r_cut=0.2)
verdict = check_equivalence(grid, tol=10.0 * grid.h**2)
print(f"\nequivalence verdict on consistent data: "
      f"full={verdict['set_full']} kxW1={verdict['set_kxW1']} "
      f"kxW2={verdict['set_kxW2']} coherent={verdict['coherent']}")

# manufacture a violation: shift the charge density uniformly so that
# div E = rho + j.k fails everywhere
broken = GriddedFieldSet(n=grid.n, extent=grid.extent, r_cut=grid.r_cut,
                         E=grid.E, B=grid.B, rho=grid.rho + 0.05, j=grid.j)
verdict = check_equivalence(broken, tol=10.0 * grid.h**2)
print(f"after adding 0.05 to rho:               "
      f"full={verdict['set_full']} kxW1={verdict['set_kxW1']} "
      f"kxW2={verdict['set_kxW2']} coherent={verdict['coherent']}")
worst = verdict.get("counterexample")
if worst is not None:
    print(f"worst node (should not exist when coherent): {worst}")
