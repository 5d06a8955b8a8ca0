"""Twisted Reidemeister torsion of the figure-eight knot complement."""

from fractions import Fraction

from artifact import manifold as MF
from artifact import torsion as TO

M = MF.load_shipped("fig8")
lifts = MF.enumerate_spin_lifts(M)
for n in (4, 5, 6, 7, 8):
    for lift in (lifts if n % 2 == 0 else [None]):
        t = TO.normalized_torsion(M, lift, n)
        frac = Fraction(abs(t.value)).limit_denominator(100000)
        tag = "" if lift is None else f" lift {lift.signs}"
        print(f"T_{n}{tag} = {abs(t.value):.12g}  (~ {frac})")
cov = TO.basis_change_covariance(M, None, 5, [(1, 0)], [(0, 1)])
print("meridian -> longitude basis change: ratio", cov["ratio"], "= cusp shape ^", cov["exponent"])
