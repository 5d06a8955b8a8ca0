"""Spin lifts of the figure-eight holonomy and which Dehn fillings they extend to."""

import math

from artifact import manifold as MF

M = MF.load_shipped("fig8")
print(M.name, "| relators:", [M.format(r) for r in M.relators])
for lift in MF.enumerate_spin_lifts(M):
    eps = MF.peripheral_signs(M, lift, 0)
    slopes = [(p, q) for p in range(-3, 4) for q in range(0, 4)
              if math.gcd(p, q) == 1 and MF.extends_to_filling(M, lift, [p], [q])]
    print(f"lift {lift.signs}: peripheral signs {eps}, acyclic {MF.is_acyclic(M, lift)}")
    print("   extends to slopes", slopes[:8], "...")
print("cusp shape (longitude / meridian):", MF.cusp_shape(M, 0, (0, 1), (1, 0)))
