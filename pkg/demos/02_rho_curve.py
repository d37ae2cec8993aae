"""Spectral efficiency against the steering factor on two drops.

With weak interference the PBS can afford full orthogonal steering
(rho_max = 1) but a partial factor still does better; with strong
interference the affordable range ends at rho_max < 1. Beyond it the PBS
falls back to plain matched filtering.
"""
import numpy as np

from steersim import budget_normalized, optimal_rho, seeded_drop
from steersim.schemes import Fallback, is_fixed, mf


def find_drop(strong: bool):
    budget = budget_normalized(0.0, 1.0)
    for k in range(1000):
        d = seeded_drop(budget, 3, 0, k)
        if (optimal_rho(d).rho_max < 1.0) == strong:
            return d
    raise RuntimeError("no suitable drop")


for label, strong in (("weak interference", False), ("strong interference", True)):
    drop = find_drop(strong)
    sol = optimal_rho(drop)
    print(f"\n{label}: rho_max = {sol.rho_max:.3f}, rho* = {sol.rho_star:.3f}, "
          f"MF SE = {mf(drop).se_bits:.3f}")
    for rho in np.linspace(0.1, 1.0, 10):
        res = is_fixed(drop, float(rho), Fallback.MF)
        bar = "#" * int(round(20 * res.se_bits))
        note = "" if res.feasible else "  (unaffordable: MF)"
        print(f"  rho={rho:.1f}  SE={res.se_bits:6.3f}  {bar}{note}")
