"""Torsion growth and the hyperbolic volume.

The zeta route extends log|T_5| to high odd n; log|T_n| / n^2 tends to
-vol / (4 pi).  Uses the length-5 spectrum (about 5 s).
"""

import math

from artifact import analysis as AN
from artifact import manifold as MF
from artifact import spectrum as SP
from artifact import torsion as TO

M = MF.load_shipped("fig8")
vol = AN.figure_eight_volume()
mu = SP.enumerate_geodesics(M, 5.0)
res = AN.mueller_identity(mu, vol, 3, "odd")
alg = TO.normalized_torsion(M, None, 7).log_abs - TO.normalized_torsion(M, None, 5).log_abs
print(f"log|T7/T5|: zeta route {res.value:.8f} +- {res.uncertainty:.1e}, algebraic {alg:.8f}")

seq = AN.zeta_route_sequence(mu, vol, {5: TO.normalized_torsion(M, None, 5).log_abs}, 81)
asym = AN.asymptotic_ratio(seq, "odd")
print(f"log|T_81| / 81^2 = {asym['ratio'][-1]:.6f}, Richardson limit {asym['limit']:.6f}, "
      f"-vol/(4 pi) = {-vol / (4 * math.pi):.6f}")
