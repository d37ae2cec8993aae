"""One channel drop, taken apart.

Draws a reproducible 2x2x2 drop, shows how the MBS interference splits into
a component along the desired direction and one orthogonal to it, then
compares every scheme on that drop.
"""
import numpy as np

from steersim import budget_normalized, optimal_rho, seeded_drop
from steersim.schemes import geometry, in_scheme, is_fixed, mf, ois, zf_rx, zfbf
from steersim.steering import dis

budget = budget_normalized(gamma_bar_db=10.0, xi=1.0)
drop = seeded_drop(budget, master_seed=1, point_index=0, drop_index=0)

geo = geometry(drop)
print(f"desired gain lambda^2      = {geo.lam ** 2:.3f}")
print(f"interference power         = {np.linalg.norm(geo.i_vec) ** 2:.3f}")
print(f"  in-phase part            = {np.linalg.norm(geo.i_in) ** 2:.3f}")
print(f"  quadrature part          = {np.linalg.norm(geo.i_quad) ** 2:.3f}")

sol = optimal_rho(drop)
print(f"\nrho_max = {sol.rho_max:.4f}, rho* = {sol.rho_star:.4f} "
      f"(rejected root {sol.rho_plus:.3f}, clamped={sol.clamped})")

results = {
    "MF": mf(drop),
    "ZF": zf_rx(drop),
    "ZFBF": zfbf(drop),
    "IN": in_scheme(drop),
    "OIS": ois(drop),
    "IS rho=0.5": is_fixed(drop, 0.5),
    "DIS": dis(drop),
}
print(f"\n{'scheme':<12}{'SE [b/s/Hz]':>12}{'overhead':>10}{'feasible':>10}")
for name, res in results.items():
    print(f"{name:<12}{res.se_bits:>12.3f}{res.power_overhead_e / budget.p0e:>10.2f}{str(res.feasible):>10}")
print("\noverhead is the steering/neutralization power as a fraction of the PBS power")
