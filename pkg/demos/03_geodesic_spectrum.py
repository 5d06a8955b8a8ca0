"""Closed geodesics of the figure-eight knot complement up to length 3."""

from collections import Counter

from artifact import manifold as MF
from artifact import spectrum as SP

M = MF.load_shipped("fig8")
mu = SP.enumerate_geodesics(M, 3.0)
print(f"{len(mu.primes)} prime oriented geodesics with length <= 3 (complete: {mu.complete})")
counts = Counter(round(c.length, 6) for c in mu.primes)
for length, k in sorted(counts.items())[:6]:
    print(f"  length {length:.6f}: {k} classes")
print("growth check:", {k: v for k, v in SP.growth_check(mu, 1.0).items() if k in ("ok", "fitted_C", "fitted_exponent")})
print(mu.to_csv(M.generators).splitlines()[:3])
