"""Command-line entry point: ``artifact <subcommand> [options]``.

Every subcommand prints one report.  JSON reports are sorted and carry a
``schema`` version plus the tolerance or tail metadata behind each number;
repeated runs with equal arguments give byte-identical output.

Exit codes: 0 on success, 1 on fixture errors (itemized on stderr) or a
failed acceptance criterion, 2 on usage errors or unknown subcommands.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import warnings
from typing import Any, Sequence

import numpy as np

from . import acceptance as AC
from . import analysis as AN
from . import filling as FL
from . import manifold as MF
from . import spectrum as SP
from . import torsion as TO
from . import zeta as ZE

SCHEMA_VERSION = "1"


# ---------------------------------------------------------------------------
# output helpers


def _plain(x: Any) -> Any:
    """Convert numpy scalars, complex numbers and tuples into JSON values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _num(x.real), "im": _num(x.imag)}
    if isinstance(x, (float, np.floating)):
        return _num(float(x))
    if dataclasses.is_dataclass(x):
        return _plain({f.name: getattr(x, f.name) for f in dataclasses.fields(x)})
    if x is None or isinstance(x, str):
        return x
    return repr(x)


def _num(v: float) -> float | str | None:
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(f"{v:.15g}")


def _flatten(d: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(d, dict):
        out = []
        for k in sorted(d):
            out += _flatten(d[k], f"{prefix}.{k}" if prefix else str(k))
        return out
    if isinstance(d, list):
        out = []
        for i, v in enumerate(d):
            out += _flatten(v, f"{prefix}[{i}]")
        return out
    return [(prefix, d)]


def _render(report: dict, fmt: str) -> str:
    doc = _plain(report)
    if fmt == "json":
        return json.dumps(doc, indent=1, sort_keys=True)
    rows = _flatten(doc)
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["key", "value"])
        wr.writerows(rows)
        return buf.getvalue().rstrip("\n")
    return "\n".join(f"{k}: {v}" for k, v in rows)


def _pair(text: str, kind=float) -> tuple:
    try:
        a, b = text.split(",")
        return kind(a), kind(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")


def _complex(text: str) -> complex:
    re_, im_ = _pair(text)
    return complex(re_, im_)


def _load(source: str) -> MF.ManifoldData:
    try:
        return MF.load_shipped(source)
    except MF.FixtureError:
        if "/" not in source and not source.endswith(".json"):
            raise
    return MF.load_fixture(source)


def _load_any(source: str):
    """Cusped ManifoldData or FilledFixture, depending on the document."""
    try:
        path = MF.fixture_path(source)
    except MF.FixtureError:
        path = source
    with open(path) as fh:
        doc = json.load(fh)
    if "deformed_holonomy" in doc:
        return FL.build_filled(doc)
    M = MF.build_manifold(doc)
    MF.validate(M)
    return M


def _lift(M: MF.ManifoldData, index: int | None):
    if index is None:
        return None
    lifts = MF.enumerate_spin_lifts(M)
    if not 0 <= index < len(lifts):
        raise SystemExit(f"lift index {index} out of range (found {len(lifts)} lifts)")
    return lifts[index]


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> dict:
    obj = _load_any(args.fixture)
    if isinstance(obj, FL.FilledFixture):
        rep = FL.verify_filling(obj)
        if not rep["ok"]:
            raise MF.FixtureError("; ".join(rep["problems"]))
        return {"fixture": obj.name, "kind": "filled", "report": rep, "tolerance": FL.TOL_FILLING}
    res = obj.relator_residuals()
    return {"fixture": obj.name, "kind": "cusped", "generators": list(obj.generators),
            "relators": [obj.format(r) for r in obj.relators],
            "relator_residuals": [r for _, r in res], "cusps": len(obj.cusps),
            "tolerance": MF.TOL_REL}


def cmd_spin(args) -> dict:
    M = _load(args.fixture)
    lifts = MF.enumerate_spin_lifts(M)
    rows = []
    for l in lifts:
        rows.append({"signs": list(l.signs),
                     "peripheral_signs": [list(MF.peripheral_signs(M, l, c)) for c in M.cusps],
                     "acyclic": MF.is_acyclic(M, l)})
    return {"fixture": M.name, "count": len(lifts), "lifts": rows, "tolerance": MF.TOL_REL}


def cmd_spectrum(args):
    M = _load(args.fixture)
    lift = _lift(M, args.lift if args.lift is not None else (0 if args.spin else None))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mu = SP.enumerate_geodesics(M, args.cutoff, args.word_bound, lift=lift, method=args.method)
    if args.format == "csv":
        return mu.to_csv(M.generators).rstrip("\n")
    doc = json.loads(mu.to_json(M.generators))
    doc["warnings"] = sorted({str(w.message) for w in caught})
    return doc


def _fixture_spectrum(args, spin: bool) -> SP.SpectrumMeasure:
    M = _load(args.fixture)
    lift = _lift(M, args.lift if args.lift is not None else 0) if spin else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return SP.enumerate_geodesics(M, args.cutoff, args.word_bound, lift=lift)


def cmd_zeta(args) -> dict:
    s = args.s
    spin = args.rho is not None and args.rho % 2 == 0 or args.k is not None and args.k % 2 == 1 or args.spin
    mu = _fixture_spectrum(args, spin)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.rho is not None:
            z = ZE.ruelle_rho_n(mu, args.rho, s, C=args.C)
            what = {"rho": args.rho}
        else:
            if args.k is None:
                raise SystemExit("zeta: give --k or --rho")
            z = ZE.ruelle_sigma(mu, args.k, s, C=args.C)
            what = {"k": args.k}
    out = z.as_dict()
    out.update(what)
    out.update({"s": s, "kind": mu.kind, "classes": len(mu.classes),
                "growth_constant": SP.default_growth_constant(mu) if args.C is None else args.C,
                "warnings": sorted({str(w.message) for w in caught})})
    return out


def cmd_torsion(args) -> dict:
    M = _load(args.fixture)
    lift = _lift(M, args.lift)
    theta = None if args.theta is None else [args.theta] * len(M.cusps)
    if args.raw:
        spec = None if theta is None else TO.HomologyBasisSpec(tuple(theta))
        t = TO.torsion_with_bases(M, lift, args.n, spec)
        mode = "unnormalized"
    else:
        t = TO.normalized_torsion(M, lift, args.n, theta, tol=args.tol)
        mode = "normalized"
    return {"fixture": M.name, "n": args.n, "lift": None if lift is None else list(lift.signs),
            "mode": mode, "log_abs": t.log_abs, "phase": t.phase, "value": t.value,
            "diagnostics": {k: v for k, v in t.diagnostics.items() if not isinstance(v, np.ndarray)},
            "tolerance": args.tol}


def cmd_filling(args) -> dict:
    if args.action == "factors":
        if args.n is None or args.lam is None:
            raise SystemExit("filling factors: give --n and --lambda")
        f = FL.surgery_factor(args.lam, args.n)
        return {"n": args.n, "lambda": args.lam, "factor": f, "log_abs": math.log(abs(f)) if f else None}
    F = FL.load_filled(args.fixture)
    if args.action == "verify":
        rep = FL.verify_filling(F)
        if not rep["ok"]:
            raise MF.FixtureError("; ".join(rep["problems"]))
        return {"fixture": F.name, "report": rep, "tolerance": FL.TOL_FILLING}
    ns = [args.n] if args.n is not None else [2, 3, 4, 5]
    rows = [FL.filled_torsion_relation(F, n) for n in ns]
    return {"fixture": F.name, "relations": rows}


def cmd_analysis(args) -> dict:
    vol = AN.figure_eight_volume() if args.volume is None else args.volume
    if args.action == "bergman":
        rep = AN.bergman_truncation(AN.psi_log_coefficients(args.N), args.R, args.N)
        return {"R": args.R, "N": args.N, "unit_lower_triangular": rep["unit_lower_triangular"],
                "sigma_min": rep["sigma_min"], "hs_total": float(rep["hs_partial"][-1]),
                "hs_bound": rep["hs_bound"]}
    if args.action == "recover":
        if args.sequence is None:
            raise SystemExit("analysis recover: give --sequence FILE (JSON mapping n -> log|T_n|)")
        with open(args.sequence) as fh:
            entries = {int(k): float(v) for k, v in json.load(fh).items()}
        est = AN.recover_measure(AN.moments_from_torsion(AN.TorsionSequence(entries), vol), args.atoms)
        return {"volume": vol, "atoms": [{"location": z, "weight": w} for z, w in est.atoms],
                "residual": est.residual, "singular_values": list(est.singular_values)}
    M = _load(args.fixture)
    mu = _fixture_spectrum(args, spin=False)
    if args.action == "mueller":
        parity = "odd" if args.m % 2 else "even"
        res = AN.mueller_identity(mu, vol, args.m, parity, C=args.C)
        out = {"m": args.m, "parity": parity, "value": res.value, "uncertainty": res.uncertainty,
               "volume_term": res.volume_term, "cutoff": mu.cutoff, "volume": vol}
        if args.m % 2 and args.m >= 3:
            t_hi = TO.normalized_torsion(M, None, 2 * args.m + 1)
            t_lo = TO.normalized_torsion(M, None, 2 * args.m - 1)
            out["algebraic"] = t_hi.log_abs - t_lo.log_abs
        return out
    # asymptotic
    t5 = TO.normalized_torsion(M, None, 5).log_abs
    seq = AN.zeta_route_sequence(mu, vol, {5: t5}, 2 * args.m_max + 1, C=args.C)
    asym = AN.asymptotic_ratio(seq, "odd")
    return {"cutoff": mu.cutoff, "volume": vol, "target": -vol / (4 * math.pi), "anchor": {"5": t5},
            "n": asym["n"], "ratio": asym["ratio"], "limit": asym["limit"],
            "uncertainty": [seq.uncertainty[n] for n in asym["n"]]}


def cmd_verify_all(args) -> dict:
    AC.set_fixture(args.fixture)
    AC.fig8()  # surface fixture errors before running anything
    results = AC.run_all(seed=args.seed)
    out = {"criteria": [{"index": r.index, "title": r.title, "ok": r.ok, "details": r.details}
                        for r in results],
           "ok": all(r.ok for r in results)}
    if args.timings:
        for row, r in zip(out["criteria"], results):
            row["seconds"] = r.seconds
    return out


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--precision", choices=("double", "extended"), default="double",
                        help="precision profile recorded in the report")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized suites")

    fx = argparse.ArgumentParser(add_help=False)
    fx.add_argument("--fixture", default="fig8", help="fixture path or shipped name (default fig8)")

    cut = argparse.ArgumentParser(add_help=False)
    cut.add_argument("--cutoff", type=_positive, default=4.0, help="length cutoff L")
    cut.add_argument("--word-bound", type=_positive_int, default=10)
    cut.add_argument("--lift", type=int, default=None, help="index of the spin lift")
    cut.add_argument("--C", type=float, default=None, help="growth constant for tail bounds")

    p = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True

    s = sub.add_parser("validate", parents=[common, fx], help="validate a fixture")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("spin", parents=[common, fx], help="enumerate spin lifts")
    s.set_defaults(func=cmd_spin)

    s = sub.add_parser("spectrum", parents=[common, fx], help="enumerate closed geodesics")
    s.add_argument("--cutoff", type=_positive, required=True)
    s.add_argument("--word-bound", type=_positive_int, default=10)
    s.add_argument("--spin", action="store_true", help="attach a spin lift (default lift 0)")
    s.add_argument("--lift", type=int, default=None)
    s.add_argument("--method", choices=("auto", "words", "ford"), default="auto")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("zeta", parents=[common, fx, cut], help="truncated Ruelle zeta values")
    s.add_argument("--k", type=int, default=None, help="character index k of R_k")
    s.add_argument("--rho", type=int, default=None, help="dimension n of R_{rho_n}")
    s.add_argument("--s", type=_complex, required=True, help="evaluation point RE,IM")
    s.add_argument("--spin", action="store_true", help="force the spin measure")
    s.set_defaults(func=cmd_zeta)

    s = sub.add_parser("torsion", parents=[common, fx], help="twisted torsion")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--theta", type=lambda t: _pair(t, int), default=None, help="peripheral class P,Q")
    s.add_argument("--lift", type=int, default=None)
    s.add_argument("--raw", action="store_true", help="unnormalized torsion")
    s.add_argument("--tol", type=float, default=1e-6, help="theta-independence tolerance")
    s.set_defaults(func=cmd_torsion)

    s = sub.add_parser("filling", parents=[common], help="Dehn filling tools")
    s.add_argument("action", choices=("verify", "factors", "relation"))
    s.add_argument("--fixture", default="fig8_5_1")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--lambda", dest="lam", type=_complex, default=None, help="complex length RE,IM")
    s.set_defaults(func=cmd_filling)

    s = sub.add_parser("analysis", parents=[common, fx, cut], help="torsion asymptotics and inversion")
    s.add_argument("action", choices=("mueller", "asymptotic", "recover", "bergman"))
    s.add_argument("--m", type=int, default=3)
    s.add_argument("--m-max", type=int, default=40)
    s.add_argument("--volume", type=float, default=None, help="default: figure-eight volume")
    s.add_argument("--sequence", default=None)
    s.add_argument("--atoms", type=int, default=6)
    s.add_argument("--R", type=float, default=0.5)
    s.add_argument("--N", type=int, default=64)
    s.set_defaults(func=cmd_analysis)

    s = sub.add_parser("verify-all", parents=[common, fx], help="run the acceptance suite")
    s.add_argument("--timings", action="store_true", help="include wall-clock times (not deterministic)")
    s.set_defaults(func=cmd_verify_all)
    return p


def _positive(t: str) -> float:
    v = float(t)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(t: str) -> int:
    v = int(t)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        report = args.func(args)
    except (MF.FixtureError, FileNotFoundError, json.JSONDecodeError) as exc:
        print("fixture error:", file=sys.stderr)
        for item in str(exc).split("; "):
            print(f"  - {item}", file=sys.stderr)
        return 1
    if isinstance(report, str):
        print(report)
        return 0
    if isinstance(report, dict) and args.command != "spectrum":
        report = {"schema": SCHEMA_VERSION, "command": args.command, "precision": args.precision, **report}
    print(_render(report, args.format))
    if args.command == "verify-all":
        for row in report["criteria"]:
            print(f"[{'PASS' if row['ok'] else 'FAIL'}] {row['index']:2d}. {row['title']}", file=sys.stderr)
        return 0 if report["ok"] else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
