"""Dehn fillings: deformed holonomy, surgery factors and filled torsion.

A filled fixture extends a cusped fixture with the slope ``(p_i, q_i)`` of
every cusp and a deformed holonomy at a point ``u`` of the deformation slice.
At that point each meridian ``a_i`` and longitude ``b_i`` share an eigenvector
on which they act by ``eps_a exp(u_i / 2)`` and ``eps_b exp(v_i / 2)``, where
``(eps_a, eps_b)`` are the peripheral signs of the shipped lift at the
complete structure.  The Dehn filling equations are

    p_i u_i + q_i v_i = 2 pi i.

The filled group is the cusped group with the extra relators
``a_i^{p_i} b_i^{q_i}``; the closed manifold has one extra 3-cell per filled
cusp.  For ``q_i = +-1`` the cellular boundary of that 3-cell is the
boundary-torus 2-chain plus ``-(a - 1) a^{-p}`` (``q = 1``) or ``-(a - 1)``
(``q = -1``) times the meridian disk, which makes the closed complex and its
torsion computable directly.

Surgery factors are the torsions of the core circles:

* even ``n = 2k`` (spin length ``lam``):
  ``prod_{j=0}^{k-1} (e^{(1/2 + j) lam} - 1)(e^{-(1/2 + j) lam} - 1)``;
* odd ``n = 2k + 1``:
  ``prod_{h=1}^{k} (e^{h lam} - 1)(e^{-h lam} - 1)`` (the unit eigenvalue of
  ``rho_n`` is excluded).
"""

from __future__ import annotations

import cmath
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import words as W
from .manifold import (
    FixtureError,
    ManifoldData,
    SpinLift,
    build_manifold,
    enumerate_spin_lifts,
    extends_to_filling,
    matrix_to_json,
    peripheral_signs,
    validate,
)
from .repn import sym_power, sym_power_mp
from .spectrum import NotLoxodromicError, complex_length, is_loxodromic
from .torsion import (
    HomologyBasisSpec,
    RhoWords,
    TorsionError,
    TorsionValue,
    TwistedChainComplex,
    _canon_phase,
    analyse_complex,
    complex_torsion,
    torsion_with_bases,
)

TOL_FILLING = 1e-6
TOL_COMMUTE = 1e-8
TOL_SINH = 1e-8


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class DeformedFamilyPoint:
    """A point ``u`` of the deformation slice with its holonomy.

    Attributes
    ----------
    u, v, tau : tuple of complex
        Per cusp: meridian and longitude logarithmic eigenvalues and the ratio
        ``tau = sinh(v / 2) / sinh(u / 2)``.
    holonomy : ManifoldData
        The cusped fixture with the generator matrices at ``u``.
    """

    u: tuple[complex, ...]
    v: tuple[complex, ...]
    tau: tuple[complex, ...]
    holonomy: ManifoldData


@dataclass(frozen=True)
class FilledFixture:
    """A Dehn filling of a cusped fixture at a deformed point.

    Attributes
    ----------
    base : ManifoldData
        Cusped fixture at the complete structure.
    p, q : tuple of int
        Filling slope ``p_i a_i + q_i b_i`` per cusp.
    point : DeformedFamilyPoint
    core_words : tuple of words
        One word per filled cusp representing the added core geodesic.
    name : str
    """

    base: ManifoldData
    p: tuple[int, ...]
    q: tuple[int, ...]
    point: DeformedFamilyPoint
    core_words: tuple[W.Word, ...]
    name: str = "filled"
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @property
    def deformed(self) -> ManifoldData:
        """Cusped fixture carrying the deformed holonomy."""
        return self.point.holonomy

    def filling_words(self) -> list[W.Word]:
        """Relators ``a_i^{p_i} b_i^{q_i}`` added by the filling."""
        return [W.reduce_word(W.multiply(W.power(c.a_word, int(p)), W.power(c.b_word, int(q))))
                for c, p, q in zip(self.base.cusps, self.p, self.q)]

    def filled_manifold(self) -> ManifoldData:
        """Closed manifold: deformed holonomy, extra relators, no cusps."""
        M = self.deformed
        return ManifoldData(
            name=self.name,
            generators=M.generators,
            relators=M.relators + tuple(tuple(w) for w in self.filling_words()),
            holonomy=M.holonomy,
            cusps=(),
            reference_volume=self.metadata.get("filled_volume"),
            metadata={"filled_from": self.base.name, "p": list(self.p), "q": list(self.q)},
        )


# ---------------------------------------------------------------------------
# peripheral eigenvalues and the filling equations


def _shipped_signs(M: ManifoldData) -> list[tuple[int, int]]:
    lift = SpinLift(tuple(1 for _ in M.generators))
    return [peripheral_signs(M, lift, c) for c in M.cusps]


def _log_branch(z: complex, ref: complex) -> complex:
    """``2 log z`` on the branch (mod ``4 pi i``) closest to ``ref``."""
    w = 2 * cmath.log(z)
    k = round((ref - w).imag / (4 * math.pi))
    return w + 4j * math.pi * k


def peripheral_logs(deformed: ManifoldData, signs: Sequence[tuple[int, int]],
                    u_ref: Sequence[complex] | None = None,
                    v_ref: Sequence[complex] | None = None) -> tuple[list[complex], list[complex]]:
    """Logarithmic eigenvalues ``(u_i, v_i)`` on a common peripheral eigenvector.

    The eigenvalue of the meridian closest to ``eps_a exp(u_ref / 2)`` is
    selected (default ``u_ref = 0`` picks ``|eigenvalue| >= 1``); branches of
    the logarithms are taken closest to the references.
    """
    us, vs = [], []
    for i, (c, (ea, eb)) in enumerate(zip(deformed.cusps, signs)):
        A = deformed.evaluate(c.a_word)
        B = deformed.evaluate(c.b_word)
        vals, vecs = np.linalg.eig(A)
        ur = 0j if u_ref is None else complex(u_ref[i])
        vr = 0j if v_ref is None else complex(v_ref[i])
        if u_ref is None:
            j = int(np.argmax(np.abs(vals)))
        else:
            j = int(np.argmin(np.abs(vals - ea * cmath.exp(ur / 2))))
        x = vecs[:, j]
        mb = complex((np.conj(x) @ B @ x) / (np.conj(x) @ x))
        u = _log_branch(ea * complex(vals[j]), ur)
        v = _log_branch(eb * mb, vr)
        us.append(u)
        vs.append(v)
    return us, vs


def filling_residuals(u: Sequence[complex], v: Sequence[complex], p: Sequence[int], q: Sequence[int]) -> list[float]:
    """``|p_i u_i + q_i v_i - 2 pi i|`` per cusp."""
    return [abs(pi * complex(ui) + qi * complex(vi) - 2j * math.pi) for ui, vi, pi, qi in zip(u, v, p, q)]


def refine_point(base: ManifoldData, p: Sequence[int], q: Sequence[int], holonomy: Sequence[np.ndarray],
                 *, target: float = 1.0, u_ref: Sequence[complex] | None = None,
                 v_ref: Sequence[complex] | None = None, max_iter: int = 60,
                 tol: float = 1e-14) -> tuple[list[np.ndarray], list[complex], list[complex]]:
    """Newton corrector for the deformed holonomy.

    Solves, in the least-squares sense with minimal-norm steps, the relator
    equations ``r(X) = I``, ``det X = 1``, the filling equations
    ``p_i u_i + q_i v_i = 2 pi i * target`` and the gauge condition that the
    initial peripheral eigenvectors stay eigenvectors of the meridians.

    Parameters
    ----------
    base : ManifoldData
        Cusped fixture (for the presentation and peripheral signs).
    holonomy : sequence of (2, 2) arrays
        Initial generator matrices.
    target : float
        Scales the right-hand side; continuation from the complete structure
        runs it from 0 to 1.

    Returns
    -------
    (matrices, u, v)
    """
    signs = _shipped_signs(base)
    g = base.ngens
    x = np.concatenate([np.asarray(m, dtype=complex).ravel() for m in holonomy])
    rhs = 2j * math.pi * target

    def unpack(vec):
        return [vec[4 * i:4 * i + 4].reshape(2, 2) for i in range(g)]

    # Peripheral eigenvectors are frozen at their initial values; requiring
    # them to stay eigenvectors fixes part of the conjugation gauge and keeps
    # the eigenvalues smooth functions of the entries (even at parabolics).
    M0 = base.with_holonomy(unpack(x))
    frames = []
    for i, c in enumerate(M0.cusps):
        vals, vecs = np.linalg.eig(M0.evaluate(c.a_word))
        if u_ref is None:
            j = int(np.argmax(np.abs(vals)))
        else:
            j = int(np.argmin(np.abs(vals - signs[i][0] * cmath.exp(complex(u_ref[i]) / 2))))
        e = vecs[:, j] / np.linalg.norm(vecs[:, j])
        frames.append((e, np.array([-e[1], e[0]])))

    gauge = []
    if frames:
        P = np.column_stack(frames[0])
        Pi = np.linalg.inv(P)
        gauge = [P @ np.diag([1.0, -1.0]) @ Pi, P @ np.array([[0, 1], [0, 0]]) @ Pi]

    def residual(vec, uref, vref):
        mats = unpack(vec)
        M = base.with_holonomy(mats)
        out = []
        for r in base.relators:
            out.extend((M.evaluate(r) - np.eye(2)).ravel())
        for m in mats:
            out.append(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] - 1)
        us, vs = [], []
        for i, (c, (e, f)) in enumerate(zip(M.cusps, frames)):
            A = M.evaluate(c.a_word)
            B = M.evaluate(c.b_word)
            Ae, Be = A @ e, B @ e
            out.append(f @ Ae)
            ur = 0j if uref is None else uref[i]
            vr = 0j if vref is None else vref[i]
            us.append(_log_branch(signs[i][0] * complex(np.conj(e) @ Ae), ur))
            vs.append(_log_branch(signs[i][1] * complex(np.conj(e) @ Be), vr))
            out.append(p[i] * us[-1] + q[i] * vs[-1] - rhs)
        return np.array(out), us, vs

    uref, vref = u_ref, v_ref
    for _ in range(max_iter):
        r, us, vs = residual(x, uref, vref)
        uref, vref = us, vs
        h = 1e-7
        J = np.empty((r.size, x.size), dtype=complex)
        for j in range(x.size):
            e = np.zeros_like(x)
            e[j] = h
            J[:, j] = (residual(x + e, uref, vref)[0] - r) / h
        # remaining gauge: conjugations fixing the first cusp's eigenvector;
        # steps are kept orthogonal to their orbit directions
        mats = unpack(x)
        G = np.array([np.concatenate([(xi @ m - m @ xi).ravel() for m in mats]) for xi in gauge])
        Jg = np.vstack([J, G.conj()])
        dx = np.linalg.lstsq(Jg, np.concatenate([-r, np.zeros(len(gauge))]), rcond=None)[0]
        x = x + dx
        if np.abs(dx).max() < tol:
            break
    r, us, vs = residual(x, uref, vref)
    return unpack(x), us, vs


# ---------------------------------------------------------------------------
# fixtures


def _cplx(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _cvec(v) -> tuple[complex, ...]:
    if isinstance(v, (list, tuple)) and v and isinstance(v[0], (list, tuple)):
        return tuple(_cplx(x) for x in v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return (_cplx(v),)
    return tuple(_cplx(x) for x in (v if isinstance(v, (list, tuple)) else [v]))


def _ivec(v) -> tuple[int, ...]:
    return tuple(int(x) for x in (v if isinstance(v, (list, tuple)) else [v]))


def build_filled(doc: Mapping[str, Any]) -> FilledFixture:
    """Construct a FilledFixture from a parsed document (base fields validated)."""
    try:
        base = build_manifold(doc, "holonomy")
        deformed = build_manifold(doc, "deformed_holonomy")
        p, q = _ivec(doc["p"]), _ivec(doc["q"])
        u, v = _cvec(doc["u"]), _cvec(doc["v"])
        tau = _cvec(doc["tau"]) if "tau" in doc else tuple(
            cmath.sinh(vi / 2) / cmath.sinh(ui / 2) for ui, vi in zip(u, v))
        cores = tuple(W.parse_word(w, base.generators) for w in doc["core_words"])
    except KeyError as exc:
        raise FixtureError(f"parse error: missing field {exc}") from exc
    except ValueError as exc:
        raise FixtureError(f"parse error: {exc}") from exc
    validate(base)
    ncusp = len(base.cusps)
    for nm, val in (("p", p), ("q", q), ("u", u), ("v", v), ("tau", tau), ("core_words", cores)):
        if len(val) != ncusp:
            raise FixtureError(f"{nm} must have one entry per cusp ({ncusp})")
    point = DeformedFamilyPoint(u, v, tau, deformed)
    meta = {k: doc[k] for k in ("filled_volume", "description") if k in doc}
    return FilledFixture(base, p, q, point, cores, str(doc.get("name", "filled")), meta)


def load_filled(source) -> FilledFixture:
    """Load a filled fixture from a path, JSON text, mapping or shipped name."""
    if isinstance(source, Mapping):
        return build_filled(source)
    text = str(source)
    if text.lstrip().startswith("{"):
        try:
            return build_filled(json.loads(text))
        except json.JSONDecodeError as exc:
            raise FixtureError(f"parse error: {exc}") from exc
    path = Path(text)
    if not path.exists():
        shipped = Path(__file__).resolve().parent / "fixtures" / (text if text.endswith(".json") else text + ".json")
        if not shipped.exists():
            raise FixtureError(f"fixture not found: {text}")
        path = shipped
    try:
        return build_filled(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise FixtureError(f"parse error in {text}: {exc}") from exc


def filled_to_json(F: FilledFixture) -> dict:
    """Serialise a filled fixture (inverse of :func:`build_filled`)."""
    B = F.base
    doc = {
        "name": F.name,
        "generators": list(B.generators),
        "relators": [B.format(r) for r in B.relators],
        "holonomy": {g: matrix_to_json(m) for g, m in zip(B.generators, B.holonomy)},
        "cusps": [],
        "volume": B.reference_volume,
        "p": list(F.p),
        "q": list(F.q),
        "u": [[z.real, z.imag] for z in F.point.u],
        "v": [[z.real, z.imag] for z in F.point.v],
        "tau": [[z.real, z.imag] for z in F.point.tau],
        "core_words": [B.format(w) for w in F.core_words],
        "deformed_holonomy": {g: matrix_to_json(m) for g, m in zip(B.generators, F.deformed.holonomy)},
    }
    for c in B.cusps:
        cd = {"a": B.format(c.a_word), "b": B.format(c.b_word)}
        if c.torus_identity is not None:
            cd["torus_identity"] = [{"conjugator": B.format(t.conjugator), "relator": t.relator,
                                     "exponent": t.exponent} for t in c.torus_identity]
        doc["cusps"].append(cd)
    doc.update({k: v for k, v in F.metadata.items()})
    return doc


# ---------------------------------------------------------------------------
# verification


def core_lengths(F: FilledFixture, lift: SpinLift | None = None) -> list[complex]:
    """Complex lengths of the core words at the deformed point.

    With ``lift`` the spin length (modulo ``4 pi i``) of the signed holonomy
    is returned, otherwise the PSL length.

    Raises
    ------
    NotLoxodromicError
        If a core word is not loxodromic.
    """
    M = F.deformed
    return [complex_length(M.evaluate(w, lift), spin=lift is not None) for w in F.core_words]


def verify_filling(F: FilledFixture, *, tol: float = TOL_FILLING) -> dict:
    """Check a filled fixture.

    Checks (a) the Dehn filling equations, the recorded ``u, v`` against the
    holonomy, commuting peripherals and ``sinh(v/2) = tau sinh(u/2)``;
    (b) for every spin lift of the base, ``a^p b^q`` maps to
    ``-(eps_a^p eps_b^q) I`` and the lift descends exactly when
    :func:`artifact.manifold.extends_to_filling` says so; (c) core words are
    loxodromic.

    Returns
    -------
    dict
        ``ok`` plus itemized ``problems`` and the measured residuals.
    """
    problems: list[str] = []
    M = F.deformed
    res_rel = [r for _, r in M.relator_residuals()]
    for i, r in enumerate(res_rel):
        if r > tol:
            problems.append(f"relator {i} residual {r:.3e} at the deformed point")
    signs = _shipped_signs(F.base)
    u_meas, v_meas = peripheral_logs(M, signs, F.point.u, F.point.v)
    cusp_reports = []
    for i, c in enumerate(M.cusps):
        A = M.evaluate(c.a_word)
        B = M.evaluate(c.b_word)
        comm = float(np.abs(A @ B - B @ A).max())
        u, v, tau = F.point.u[i], F.point.v[i], F.point.tau[i]
        fres = filling_residuals([u], [v], [F.p[i]], [F.q[i]])[0]
        hol_res = max(abs(u - u_meas[i]), abs(v - v_meas[i]))
        sinh_res = abs(cmath.sinh(v / 2) - tau * cmath.sinh(u / 2))
        if comm > TOL_COMMUTE:
            problems.append(f"cusp {i}: peripherals do not commute (residual {comm:.3e})")
        if fres > tol:
            problems.append(f"cusp {i}: filling equation residual {fres:.3e}")
        if hol_res > tol:
            problems.append(f"cusp {i}: recorded (u, v) disagree with the holonomy by {hol_res:.3e}")
        if sinh_res > TOL_SINH:
            problems.append(f"cusp {i}: sinh(v/2) = tau sinh(u/2) residual {sinh_res:.3e}")
        cusp_reports.append({"cusp": i, "p": F.p[i], "q": F.q[i], "u": u, "v": v, "tau": tau,
                             "filling_residual": fres, "holonomy_residual": hol_res,
                             "commutator_residual": comm, "sinh_residual": sinh_res})
    words = F.filling_words()
    lifts = []
    for lift in enumerate_spin_lifts(F.base):
        eps = [peripheral_signs(F.base, lift, c) for c in F.base.cusps]
        flag = extends_to_filling(F.base, lift, list(F.p), list(F.q))
        observed = []
        for w, (ea, eb), p, q in zip(words, eps, F.p, F.q):
            X = M.evaluate(w, lift)
            expected = -(ea ** (p % 2)) * (eb ** (q % 2))
            sgn = 1 if X[0, 0].real + X[1, 1].real >= 0 else -1
            r = float(np.abs(X - sgn * np.eye(2)).max())
            if r > tol:
                problems.append(f"filling word does not map to +-I (residual {r:.3e})")
            if sgn != expected:
                problems.append(f"lift {lift.signs}: filling word maps to {sgn:+d}I, expected {expected:+d}I")
            observed.append(sgn)
        descends = all(s == 1 for s in observed)
        if descends != flag:
            problems.append(f"lift {lift.signs}: descent {descends} disagrees with the parity rule")
        lifts.append({"signs": list(lift.signs), "peripheral_signs": [list(e) for e in eps],
                      "filling_word_sign": observed, "descends": descends, "extends_to_filling": flag})
    cores = []
    for w in F.core_words:
        X = M.evaluate(w)
        lox = is_loxodromic(X)
        if not lox:
            problems.append(f"core word {M.format(w)} is not loxodromic")
        cores.append({"word": M.format(w), "loxodromic": lox,
                      "lambda": complex_length(X) if lox else None})
    return {"ok": not problems, "problems": problems, "relator_residuals": res_rel,
            "cusps": cusp_reports, "lifts": lifts, "cores": cores}


# ---------------------------------------------------------------------------
# surgery factors


def _flag_imaginary(lam: complex) -> None:
    if abs(lam.real) <= 1e-12:
        warnings.warn("purely imaginary length: surgery factor evaluated on the cluster set",
                      RuntimeWarning, stacklevel=3)


def surgery_factor_even(lam: complex, k: int) -> complex:
    """``prod_{j=0}^{k-1} (e^{(1/2+j) lam} - 1)(e^{-(1/2+j) lam} - 1)``.

    Equals ``det(rho_{2k}(g) - I)`` for ``g`` with spin length ``lam``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    lam = complex(lam)
    _flag_imaginary(lam)
    out = 1 + 0j
    for j in range(k):
        x = (0.5 + j) * lam
        out *= (cmath.exp(x) - 1) * (cmath.exp(-x) - 1)
    return out


def surgery_factor_odd(lam: complex, k: int) -> complex:
    """``prod_{h=1}^{k} (e^{h lam} - 1)(e^{-h lam} - 1)``.

    Equals ``det(rho_{2k+1}(g) - I)`` restricted to the complement of the unit
    eigenvalue of ``g`` with complex length ``lam``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    lam = complex(lam)
    _flag_imaginary(lam)
    out = 1 + 0j
    for h in range(1, k + 1):
        out *= (cmath.exp(h * lam) - 1) * (cmath.exp(-h * lam) - 1)
    return out


def surgery_factor(lam: complex, n: int) -> complex:
    """Surgery factor of ``rho_n``: even or odd formula by parity of ``n``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return surgery_factor_even(lam, n // 2) if n % 2 == 0 else surgery_factor_odd(lam, n // 2)


def determinant_oracle(A: np.ndarray, n: int, *, dps: int | None = 40) -> complex:
    """``det(rho_n(A) - I)``, with the unit eigenvalue removed for odd ``n``.

    For odd ``n``, ``det(S - x I) = (1 - x) prod_{mu != 1} (mu - x)``, so the
    product over the non-unit eigenvalues equals ``tr adj(S - I)``, the sum of
    the principal ``(n - 1)``-minors of ``S - I``, i.e. ``-d/dx det(S - x I)``
    at ``x = 1`` (dense determinants, no eigenvalues).

    Parameters
    ----------
    dps : int or None
        Decimal digits for an mpmath evaluation; ``None`` uses double
        precision.  Symmetric powers of non-normal matrices lose roughly
        ``(n - 1) log10 cond(A)`` digits, so the default works in extended
        precision.
    """
    if dps is None:
        S = sym_power(A, n, check=False) - np.eye(n)
        if n % 2 == 0:
            return complex(np.linalg.det(S))
        idx = np.arange(n)
        return complex(sum(np.linalg.det(S[np.ix_(idx != i, idx != i)]) for i in range(n)))
    import mpmath as mp

    A = np.asarray(A, dtype=complex)
    with mp.workdps(dps):
        S = sym_power_mp(A, n, dps) - mp.eye(n)
        if n % 2 == 0:
            return complex(mp.det(S))
        # -d/dx det(rho_n(A) - x I) = d/dy det(S + y I) at y = 0 by a central
        # difference; the step is far below double precision and the O(h^2)
        # error is negligible at this working precision
        h = mp.mpf(10) ** (-(dps // 2))
        I = mp.eye(n)
        d = (mp.det(S + h * I) - mp.det(S - h * I)) / (2 * h)
        return complex(d)


def cluster_map(t: float, theta: float, k: int) -> complex:
    """``F(t, theta) = prod_{j=0}^{k-1} (1 - cosh((1/2 + j)(t + i theta))) / 2``.

    On ``t = 0`` it takes values in ``[0, 1]``; ``F(0, 0) = 0`` and
    ``F(0, 2 pi) = 1``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if k < 1:
        raise ValueError("k must be >= 1")
    z = complex(t, theta)
    out = 1 + 0j
    for j in range(k):
        out *= (1 - cmath.cosh((0.5 + j) * z)) / 2
    return out


# ---------------------------------------------------------------------------
# torsion of the filled manifold


def _three_cell_row(F: FilledFixture, rho: RhoWords, i: int) -> np.ndarray:
    c = F.deformed.cusps[i]
    if c.torus_identity is None:
        raise TorsionError(f"cusp {i} has no torus identity; cannot build the filled 3-cell")
    p, q = int(F.p[i]), int(F.q[i])
    if abs(q) != 1:
        raise TorsionError("filled 3-cell boundary implemented for slopes with q = +-1 only")
    n = rho.n
    nrel = len(F.deformed.relators)
    ncusp = len(F.deformed.cusps)
    row = np.zeros((n, n * (nrel + ncusp)), dtype=complex)
    for term in c.torus_identity:
        j = term.relator
        row[:, j * n:(j + 1) * n] += term.exponent * rho(term.conjugator)
    A = rho(c.a_word)
    disk = -(A - np.eye(n))
    if q == 1:
        disk = disk @ rho(W.power(c.a_word, -p))
    j = nrel + i
    row[:, j * n:(j + 1) * n] = disk
    return row


def filled_complex(F: FilledFixture, n: int, lift: SpinLift | None = None,
                   *, dd_tol: float = 1e-8) -> TwistedChainComplex:
    """Twisted cellular complex ``C_3 -> C_2 -> C_1 -> C_0`` of the filled manifold.

    Raises
    ------
    TorsionError
        If the lift does not descend (``rho_n`` of a filling word is not the
        identity), the slope has ``|q| != 1`` or the boundaries do not compose
        to zero.
    """
    Mf = F.filled_manifold()
    mats = Mf.generator_matrices(lift)
    rho = RhoWords(mats, n)
    for w in F.filling_words():
        X = Mf.evaluate(w, lift)
        # rho_n(-I) = (-1)^(n-1) I, so odd n only needs X = +-I
        target = np.eye(2) if n % 2 == 0 or X[0, 0].real + X[1, 1].real >= 0 else -np.eye(2)
        if np.abs(X - target).max() > 1e-6:
            raise TorsionError(f"rho_{n} does not descend to the filled manifold for this lift")
    g = Mf.ngens
    D1 = np.vstack([rho.gen[j] - np.eye(n) for j in range(g)])
    D2 = np.zeros((n * len(Mf.relators), n * g), dtype=complex)
    for i, r in enumerate(Mf.relators):
        for j in range(g):
            D2[i * n:(i + 1) * n, j * n:(j + 1) * n] = rho.fox(r, j + 1)
    D3 = np.vstack([_three_cell_row(F, rho, i) for i in range(len(F.deformed.cusps))])
    C = TwistedChainComplex(n=n, boundaries={1: D1, 2: D2, 3: D3}, rho=rho)
    analyse_complex(C)
    if C.diagnostics["dd_residual"] > dd_tol:
        raise TorsionError(f"filled boundaries do not compose to zero (residual {C.diagnostics['dd_residual']:.3e})")
    return C


def filled_torsion(F: FilledFixture, n: int, lift: SpinLift | None = None) -> TorsionValue:
    """Torsion of the closed filled manifold with coefficients in ``rho_n``."""
    C = filled_complex(F, n, lift)
    if any(C.betti):
        raise TorsionError(f"filled complex is not acyclic (Betti numbers {C.betti})")
    la, ph, diag = complex_torsion(C)
    diag = dict(diag)
    diag["dd_residual"] = C.diagnostics["dd_residual"]
    return TorsionValue(la, ph, n, "acyclic", diag)


def cusped_torsion(F: FilledFixture, n: int, lift: SpinLift | None = None,
                   theta: Sequence[tuple[int, int]] | None = None) -> TorsionValue:
    """Torsion of the cusped manifold at the deformed point.

    Even ``n``: the acyclic torsion.  Odd ``n``: bases built from the deformed
    invariant vectors and the peripheral classes ``theta`` (default: the
    filling slopes ``p a + q b``).
    """
    M = F.deformed
    if n % 2 == 0:
        return torsion_with_bases(M, lift, n)
    if theta is None:
        theta = tuple((int(p), int(q)) for p, q in zip(F.p, F.q))
    spec = HomologyBasisSpec(tuple(tuple(t) for t in theta), u=tuple(F.point.u))
    return torsion_with_bases(M, lift, n, spec)


def _descending_lift(F: FilledFixture) -> SpinLift | None:
    for lift in enumerate_spin_lifts(F.base):
        if extends_to_filling(F.base, lift, list(F.p), list(F.q)):
            return lift
    return None


def _mod_sign_distance(a: TorsionValue, log_abs: float, phase: float) -> float:
    return abs(a.log_abs - log_abs) + abs(math.remainder(a.phase - phase, math.pi))


def filled_torsion_relation(F: FilledFixture, n: int, torsions: Mapping[str, TorsionValue] | None = None,
                            *, lift: SpinLift | None = None, tol: float = 1e-6) -> dict:
    """Compare the filled torsion with the cusped torsion times surgery factors.

    Even ``n = 2k``: ``tau(M_{p/q}) = +-tau(M; rho_n(u)) prod_i S_even(lam_i, k)``
    with ``lam_i`` the spin lengths of the cores.

    Odd ``n = 2k + 1``: the same with bases ``{p a + q b}`` and ``S_odd``; in
    addition the normalized relation is reported with the ratio
    ``det A_{2k+1} / det A_3`` where
    ``det A_m = tau(M; rho_m(u), {a}) / tau(M; rho_m(u), {p a + q b})``.

    Parameters
    ----------
    torsions : mapping, optional
        Precomputed ``"filled"`` and ``"cusped"`` TorsionValues; missing ones
        are computed.
    lift : SpinLift, optional
        Lift used for even ``n``; default the first lift that descends.
    tol : float
        Budget on ``|log|lhs| - log|rhs||`` plus the phase mismatch modulo pi.

    Returns
    -------
    dict with ``residual``, ``ok``, per-side log values, the factor product and
    (odd ``n``) the normalized comparison.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if n % 2 == 0 and lift is None:
        lift = _descending_lift(F)
        if lift is None:
            raise TorsionError("no spin lift descends to the filling")
    use_lift = lift if n % 2 == 0 else None
    torsions = dict(torsions or {})
    tf = torsions.get("filled") or filled_torsion(F, n, use_lift)
    tc = torsions.get("cusped") or cusped_torsion(F, n, use_lift)
    lams = core_lengths(F, use_lift)
    k = n // 2
    fac = complex(np.prod([surgery_factor(l, n) for l in lams]))
    rhs_log = tc.log_abs + math.log(abs(fac))
    rhs_phase = tc.phase + cmath.phase(fac)
    residual = _mod_sign_distance(tf, rhs_log, rhs_phase)
    report = {"n": n, "lift": None if use_lift is None else list(use_lift.signs),
              "core_lengths": lams, "factor": fac,
              "filled_log_abs": tf.log_abs, "cusped_log_abs": tc.log_abs,
              "residual": residual, "tolerance": tol,
              "condition": tf.diagnostics.get("condition")}
    ok = residual <= tol
    if n % 2 == 1 and n >= 5:
        t3f = filled_torsion(F, 3)
        ta_n = cusped_torsion(F, n, None, tuple((1, 0) for _ in F.p))
        ta_3 = cusped_torsion(F, 3, None, tuple((1, 0) for _ in F.p))
        tpq_3 = cusped_torsion(F, 3, None)
        logdet_n = ta_n.log_abs - tc.log_abs
        logdet_3 = ta_3.log_abs - tpq_3.log_abs
        phdet_n = ta_n.phase - tc.phase
        phdet_3 = ta_3.phase - tpq_3.phase
        extra = complex(np.prod([surgery_factor_odd(l, k) / surgery_factor_odd(l, 1) for l in lams]))
        norm_lhs = TorsionValue(tf.log_abs - t3f.log_abs, _canon_phase(tf.phase - t3f.phase), n)
        norm_rhs_log = (logdet_3 - logdet_n) + (ta_n.log_abs - ta_3.log_abs) + math.log(abs(extra))
        norm_rhs_ph = (phdet_3 - phdet_n) + (ta_n.phase - ta_3.phase) + cmath.phase(extra)
        nres = _mod_sign_distance(norm_lhs, norm_rhs_log, norm_rhs_ph)
        ratio = cmath.exp(complex(logdet_n - logdet_3, phdet_n - phdet_3))
        report["normalized"] = {"log_abs": norm_lhs.log_abs, "residual": nres,
                                "det_ratio": ratio, "det_ratio_distance_to_one": min(abs(ratio - 1), abs(ratio + 1))}
        ok = ok and nres <= tol
    report["ok"] = ok
    return report


def det_ratio_sequence(fixtures: Sequence[FilledFixture], k: int) -> list[dict]:
    """``det A_{2k+1}(p, q) / det A_3(p, q)`` (mod sign) along a fixture sequence."""
    n = 2 * k + 1
    out = []
    for F in fixtures:
        a = tuple((1, 0) for _ in F.p)
        ln = cusped_torsion(F, n, None, a).log_abs - cusped_torsion(F, n).log_abs
        l3 = cusped_torsion(F, 3, None, a).log_abs - cusped_torsion(F, 3).log_abs
        out.append({"name": F.name, "p": list(F.p), "q": list(F.q), "log_abs_ratio": ln - l3})
    return out
