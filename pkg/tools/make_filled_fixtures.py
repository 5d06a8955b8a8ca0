"""Generate filled figure-eight fixtures by continuation from the complete structure.

Usage::

    python tools/make_filled_fixtures.py            # writes the shipped fixtures
    python tools/make_filled_fixtures.py 7 1 out.json

The deformed holonomy is obtained with :func:`artifact.filling.refine_point`
while the right-hand side of the Dehn filling equation is ramped from 0 to
``2 pi i``; the result is checked with :func:`artifact.filling.verify_filling`
before it is written.
"""

from __future__ import annotations

import cmath
import json
import sys
from pathlib import Path

import numpy as np

from artifact import manifold as MF
from artifact.filling import FilledFixture, DeformedFamilyPoint, filled_to_json, refine_point, verify_filling

SHIPPED = [(5, 1), (12, 1), (20, 1)]
OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "artifact" / "fixtures"


def make(p: int, q: int, steps: int = 60) -> FilledFixture:
    base = MF.load_shipped("fig8")
    mats = [m.copy() for m in base.holonomy]
    u = v = None
    for t in np.linspace(0.0, 1.0, steps + 1)[1:]:
        mats, u, v = refine_point(base, [p], [q], mats, target=float(t), u_ref=u, v_ref=v)
    tau = [cmath.sinh(vi / 2) / cmath.sinh(ui / 2) for ui, vi in zip(u, v)]
    deformed = base.with_holonomy(mats)
    point = DeformedFamilyPoint(tuple(u), tuple(v), tuple(tau), deformed)
    # for q = +-1 the meridian meets the slope once, so it is isotopic to the core
    if abs(q) != 1:
        raise SystemExit("only slopes with q = +-1 are supported by this generator")
    core = (base.cusps[0].a_word,)
    name = f"figure-eight ({p},{q}) Dehn filling"
    meta = {"description": (f"Figure-eight knot complement filled along {p} a + {q} b (b = longitude). "
                            "deformed_holonomy solves the relator and Dehn filling equations "
                            "(Newton continuation from the complete structure); the core geodesic "
                            "is the meridian a.")}
    F = FilledFixture(base, (p,), (q,), point, core, name, meta)
    rep = verify_filling(F)
    if not rep["ok"]:
        raise SystemExit("generated fixture fails verification: " + "; ".join(rep["problems"]))
    return F


def write(F: FilledFixture, path: Path) -> None:
    path.write_text(json.dumps(filled_to_json(F), indent=1) + "\n")


def main(argv: list[str]) -> int:
    if len(argv) == 3:
        p, q, out = int(argv[0]), int(argv[1]), Path(argv[2])
        write(make(p, q), out)
        return 0
    for p, q in SHIPPED:
        F = make(p, q)
        out = OUT_DIR / f"fig8_{p}_{q}.json"
        write(F, out)
        print(f"{out.name}: u = {F.point.u[0]:.12g}, v = {F.point.v[0]:.12g}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
