"""Symmetric-power representations of SL(2, C).

rho_n sends a 2x2 matrix to its action on homogeneous polynomials of degree
n - 1.  This script checks the homomorphism property, the invariant pairing
and a Clebsch-Gordan character identity on a random matrix.
"""

import numpy as np

from artifact import repn as R

rng = np.random.default_rng(0)
A, B = R.random_sl2(rng), R.random_sl2(rng)

for n in (2, 3, 5):
    S = R.sym_power(A, n)
    hom = np.abs(R.sym_power(A @ B, n) - S @ R.sym_power(B, n)).max()
    Phi = R.pairing_matrix(n)
    inv = np.abs(S.T @ Phi @ S - Phi).max()
    kind = "symmetric" if n % 2 else "antisymmetric"
    print(f"n = {n}: det = {np.linalg.det(S):.6f}, homomorphism residual {hom:.1e}, "
          f"{kind} pairing residual {inv:.1e}")

# chi_2 * chi_3 = chi_4 + chi_2
lhs = R.character(A, 2) * R.character(A, 3)
rhs = R.character(A, 4) + R.character(A, 2)
print(f"Clebsch-Gordan chi_2 chi_3 - (chi_4 + chi_2) = {abs(lhs - rhs):.1e}")
