"""Truncated Ruelle zeta functions: two evaluation routes and the tail bound."""

from artifact import manifold as MF
from artifact import spectrum as SP
from artifact import zeta as ZE

M = MF.load_shipped("fig8")
lift = MF.enumerate_spin_lifts(M)[0]
mu3 = SP.enumerate_geodesics(M, 3.0, lift=lift)
mu4 = SP.enumerate_geodesics(M, 4.0, lift=lift)
for k in (5, 6, 7, 8):
    prod = ZE.ruelle_sigma(mu4, k, k / 2)
    integ = ZE.log_ruelle_at_half(mu4, k)
    coarse = ZE.ruelle_sigma(mu3, k, k / 2)
    print(f"k = {k}: product {prod.log_abs:+.12f}, integral {integ:+.12f}, "
          f"L=3 value {coarse.log_abs:+.6f} (tail bound {coarse.tail_bound:.1e})")
print("R_rho3(5) =", ZE.ruelle_rho_n(mu4, 3, 5.0).as_dict())
