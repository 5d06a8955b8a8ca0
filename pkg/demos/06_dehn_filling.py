"""Dehn fillings of the figure-eight: fixture checks, surgery factors, short geodesics."""

from artifact import filling as FL
from artifact import manifold as MF
from artifact import spectrum as SP

for name in ("fig8_5_1", "fig8_12_1", "fig8_20_1"):
    F = FL.load_filled(name)
    rep = FL.verify_filling(F)
    core = FL.core_lengths(F)[0]
    rel = FL.filled_torsion_relation(F, 4)
    print(f"{F.name}: verified {rep['ok']}, core length {core:.6f}, "
          f"surgery relation residual (n = 4) {rel['residual']:.1e}")

lim = SP.enumerate_geodesics(MF.load_shipped("fig8"), 1.3)
mus = [SP.enumerate_geodesics(FL.load_filled(n).filled_manifold(), 1.3, 12, method="words")
       for n in ("fig8_12_1", "fig8_20_1")]
demo = SP.filling_convergence_demo(mus, lim, (1.0, 1.2))
print("window (1.0, 1.2) agrees with the cusped limit:", demo["ok"])
for row in demo["filled"]:
    print("  count", row["count"], "short atoms", row["short"], "displacement", row["displacement"])
