"""Manifold fixtures, spin lifts and peripheral data.

A fixture describes a cusped hyperbolic 3-manifold by a group presentation,
an SL(2, C) lift of its holonomy on the generators and, per cusp, the
peripheral words ``a`` and ``b``.  Spin structures are modelled as sign
vectors on the generators: the signed holonomy must send every relator to
``+I``.

Fixture conventions
-------------------
The holonomy matrices are whatever conjugacy representative the fixture
author shipped; nothing downstream depends on the choice.  Optional per-cusp
``torus_identity`` entries record an identity in the free group::

    [a, b] = prod_k u_k r_{i_k}^{e_k} u_k^{-1}

which the torsion module uses to build the boundary-torus 2-cycle.  It is
verified by free reduction at load time.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import words as W

TOL_REL = 1e-8
TOL_PARABOLIC = 1e-6
TOL_DET = 1e-10


class FixtureError(ValueError):
    """Raised when a fixture violates a ManifoldData invariant."""


@dataclass(frozen=True)
class TorusTerm:
    """One factor ``u r_i^e u^-1`` of a boundary-torus identity."""

    conjugator: W.Word
    relator: int
    exponent: int


@dataclass(frozen=True)
class Cusp:
    """Peripheral basis ``a, b`` of one boundary torus."""

    a_word: W.Word
    b_word: W.Word
    index: int
    torus_identity: tuple[TorusTerm, ...] | None = None


@dataclass(frozen=True)
class SpinLift:
    """Sign assignment on generators that makes the holonomy a homomorphism."""

    signs: tuple[int, ...]

    def sign_of(self, word: Sequence[int]) -> int:
        """Product of the signs along ``word`` (a character of the group)."""
        s = 1
        for x in word:
            s *= self.signs[abs(x) - 1]
        return s


@dataclass(frozen=True)
class ManifoldData:
    """Validated fixture: presentation, holonomy lift and cusps."""

    name: str
    generators: tuple[str, ...]
    relators: tuple[W.Word, ...]
    holonomy: tuple[np.ndarray, ...]
    cusps: tuple[Cusp, ...]
    reference_volume: float | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @property
    def ngens(self) -> int:
        return len(self.generators)

    def parse(self, text: str) -> W.Word:
        """Parse a word over this fixture's generators."""
        return W.parse_word(text, self.generators)

    def format(self, word: Sequence[int]) -> str:
        """Render a word over this fixture's generators."""
        return W.format_word(word, self.generators)

    def generator_matrices(self, lift: SpinLift | None = None) -> list[np.ndarray]:
        """Signed holonomy of each generator."""
        if lift is None:
            return [g.copy() for g in self.holonomy]
        return [s * g for s, g in zip(lift.signs, self.holonomy)]

    def evaluate(self, word: Sequence[int], lift: SpinLift | None = None) -> np.ndarray:
        """Holonomy of a word (optionally under a spin lift)."""
        mats = self.generator_matrices(lift)
        inv = [_inv2(m) for m in mats]
        out = np.eye(2, dtype=complex)
        for x in word:
            out = out @ (mats[x - 1] if x > 0 else inv[-x - 1])
        return out

    def relator_residuals(self, lift: SpinLift | None = None) -> list[tuple[int, float]]:
        """For each relator: (sign s with R ~ s I, entrywise residual)."""
        out = []
        for r in self.relators:
            R = self.evaluate(r, lift)
            sgn = 1 if np.real(np.trace(R)) >= 0 else -1
            out.append((sgn, float(np.abs(R - sgn * np.eye(2)).max())))
        return out

    def with_holonomy(self, mats: Sequence[np.ndarray], name: str | None = None) -> "ManifoldData":
        """Copy with replaced generator matrices (no validation)."""
        return ManifoldData(
            name=name or self.name,
            generators=self.generators,
            relators=self.relators,
            holonomy=tuple(np.asarray(m, dtype=complex) for m in mats),
            cusps=self.cusps,
            reference_volume=self.reference_volume,
            metadata=dict(self.metadata),
        )

    def conjugated(self, P) -> "ManifoldData":
        """Copy with holonomy replaced by ``P^-1 g P``."""
        P = np.asarray(P, dtype=complex)
        Pi = np.linalg.inv(P)
        return self.with_holonomy([Pi @ g @ P for g in self.holonomy])


def _inv2(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex)


def _matrix_from_json(entries) -> np.ndarray:
    arr = np.asarray(entries, dtype=float)
    if arr.shape == (4, 2):
        vals = arr[:, 0] + 1j * arr[:, 1]
    elif arr.shape == (2, 2, 2):
        vals = (arr[..., 0] + 1j * arr[..., 1]).ravel()
    else:
        raise FixtureError(f"holonomy entries must be 4 [re, im] pairs, got shape {arr.shape}")
    return vals.reshape(2, 2).astype(complex)


def matrix_to_json(m: np.ndarray) -> list[list[float]]:
    """Row-major ``[[re, im] x 4]`` encoding used by fixtures."""
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]


def _read_document(source) -> dict:
    if isinstance(source, Mapping):
        return dict(source)
    if isinstance(source, Path):
        return json.loads(source.read_text())
    text = str(source)
    if text.lstrip().startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise FixtureError(f"parse error: {exc}") from exc
    path = Path(text)
    if not path.exists():
        raise FixtureError(f"fixture not found: {text}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FixtureError(f"parse error in {text}: {exc}") from exc


def build_manifold(doc: Mapping[str, Any], holonomy_key: str = "holonomy") -> ManifoldData:
    """Construct ManifoldData from a parsed fixture document (unvalidated)."""
    try:
        gens = tuple(doc["generators"])
        rel_text = list(doc.get("relators", []))
        hol = doc[holonomy_key]
        cusp_docs = list(doc.get("cusps", []))
    except KeyError as exc:
        raise FixtureError(f"parse error: missing field {exc}") from exc
    try:
        relators = tuple(W.parse_word(r, gens) for r in rel_text)
        mats = tuple(_matrix_from_json(hol[g]) for g in gens)
    except (ValueError, KeyError) as exc:
        raise FixtureError(f"parse error: {exc}") from exc
    cusps = []
    for i, c in enumerate(cusp_docs):
        ident = None
        if c.get("torus_identity") is not None:
            ident = tuple(
                TorusTerm(W.parse_word(t["conjugator"], gens), int(t["relator"]), int(t["exponent"]))
                for t in c["torus_identity"]
            )
        cusps.append(Cusp(W.parse_word(c["a"], gens), W.parse_word(c["b"], gens), i, ident))
    vol = doc.get("volume")
    meta = {k: v for k, v in doc.items() if k not in ("generators", "relators", "holonomy", "cusps", "volume", "name")}
    return ManifoldData(
        name=str(doc.get("name", "unnamed")),
        generators=gens,
        relators=relators,
        holonomy=mats,
        cusps=tuple(cusps),
        reference_volume=None if vol is None else float(vol),
        metadata=meta,
    )


def validate(M: ManifoldData, *, tol_rel: float = TOL_REL, tol_parabolic: float = TOL_PARABOLIC,
             require_parabolic: bool = True) -> None:
    """Check every ManifoldData invariant, raising FixtureError with details."""
    problems = []
    for g, m in zip(M.generators, M.holonomy):
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det - 1) > TOL_DET:
            problems.append(f"non-unimodular generator {g}: |det - 1| = {abs(det - 1):.3e}")
    if problems:
        raise FixtureError("; ".join(problems))
    for i, (r, (sgn, res)) in enumerate(zip(M.relators, M.relator_residuals())):
        if res > tol_rel:
            problems.append(f"relator {i} ({M.format(r)}) residual {res:.3e} exceeds {tol_rel:g}")
    for c in M.cusps:
        if not c.a_word or not c.b_word:
            problems.append(f"cusp {c.index}: empty peripheral word")
            continue
        ra, _ = W.primitive_root(c.a_word)
        rb, _ = W.primitive_root(c.b_word)
        if W.canonical_cyclic(ra) in (W.canonical_cyclic(rb), W.canonical_cyclic(W.invert(rb))):
            problems.append(f"cusp {c.index}: peripheral words are powers of a common word")
        A = M.evaluate(c.a_word)
        B = M.evaluate(c.b_word)
        if require_parabolic:
            for nm, X in (("a", A), ("b", B)):
                t = np.trace(X)
                if abs(abs(t) - 2) > tol_parabolic or abs(t.imag) > tol_parabolic:
                    problems.append(f"cusp {c.index}: peripheral not parabolic ({nm} trace {t:.6g})")
        comm = np.abs(A @ B - B @ A).max()
        if comm > tol_rel:
            problems.append(f"cusp {c.index}: non-commuting peripheral pair (residual {comm:.3e})")
        if c.torus_identity is not None:
            prod = []
            for term in c.torus_identity:
                if not 0 <= term.relator < len(M.relators):
                    problems.append(f"cusp {c.index}: torus identity refers to relator {term.relator}")
                    break
                prod += list(term.conjugator) + list(W.power(M.relators[term.relator], term.exponent))
                prod += list(W.invert(term.conjugator))
            else:
                comm_word = W.multiply(c.a_word, c.b_word, W.invert(c.a_word), W.invert(c.b_word))
                if W.reduce_word(prod) != comm_word:
                    problems.append(f"cusp {c.index}: torus identity does not reduce to [a, b]")
    if problems:
        raise FixtureError("; ".join(problems))


def load_fixture(source, **kwargs) -> ManifoldData:
    """Load and validate a fixture from a path, JSON text or mapping.

    Raises
    ------
    FixtureError
        Parse errors or invariant violations, itemized.
    """
    M = build_manifold(_read_document(source))
    validate(M, **kwargs)
    return M


def fixture_path(name: str) -> Path:
    """Path of a fixture shipped with the package (``"fig8"`` -> fig8.json)."""
    here = Path(__file__).resolve().parent / "fixtures"
    p = here / (name if name.endswith(".json") else name + ".json")
    if not p.exists():
        raise FixtureError(f"no shipped fixture named {name!r}")
    return p


def load_shipped(name: str) -> ManifoldData:
    """Load a fixture shipped with the package."""
    return load_fixture(fixture_path(name))


# ---------------------------------------------------------------------------
# spin lifts


def _gf2_rank(rows: np.ndarray) -> int:
    A = (np.asarray(rows, dtype=np.int64) % 2).astype(np.uint8)
    if A.size == 0:
        return 0
    A = A.copy()
    r = 0
    nrows, ncols = A.shape
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if A[i, c]), None)
        if piv is None:
            continue
        A[[r, piv]] = A[[piv, r]]
        for i in range(nrows):
            if i != r and A[i, c]:
                A[i] ^= A[r]
        r += 1
        if r == nrows:
            break
    return r


def h1_mod2_order(M: ManifoldData) -> int:
    """|H^1(M; Z/2)| from the abelianized presentation reduced mod 2."""
    rows = np.array([W.exponent_sums(r, M.ngens) for r in M.relators], dtype=np.int64).reshape(-1, M.ngens)
    return 2 ** (M.ngens - _gf2_rank(rows))


def sign_characters(M: ManifoldData) -> list[tuple[int, ...]]:
    """Sign vectors on generators that are trivial on every relator."""
    out = []
    for signs in itertools.product((1, -1), repeat=M.ngens):
        if all(math.prod(signs[abs(x) - 1] for x in r) == 1 for r in M.relators):
            out.append(signs)
    return out


def enumerate_spin_lifts(M: ManifoldData, tol_rel: float = TOL_REL) -> list[SpinLift]:
    """All sign vectors making the signed holonomy a homomorphism to SL(2, C).

    Brute force over the ``2^{#generators}`` sign vectors.
    """
    out = []
    for signs in itertools.product((1, -1), repeat=M.ngens):
        lift = SpinLift(tuple(signs))
        if all(sgn == 1 and res <= tol_rel for sgn, res in M.relator_residuals(lift)):
            out.append(lift)
    return out


def twist(lift: SpinLift, character: Sequence[int]) -> SpinLift:
    """Multiply a lift by a sign character."""
    return SpinLift(tuple(s * c for s, c in zip(lift.signs, character)))


def peripheral_signs(M: ManifoldData, lift: SpinLift, cusp: Cusp | int,
                     tol: float = TOL_PARABOLIC) -> tuple[int, int]:
    """Signs of the traces of the signed peripheral holonomies ``(eps_a, eps_b)``.

    Raises
    ------
    ValueError
        If a peripheral trace is not ``+-2`` within ``tol`` ("not at complete
        structure").
    """
    c = M.cusps[cusp] if isinstance(cusp, int) else cusp
    out = []
    for w in (c.a_word, c.b_word):
        t = np.trace(M.evaluate(w, lift))
        if abs(abs(t) - 2) > tol or abs(t.imag) > tol:
            raise ValueError(f"not at complete structure: peripheral trace {t:.6g}")
        out.append(1 if t.real > 0 else -1)
    return out[0], out[1]


def is_acyclic(M: ManifoldData, lift: SpinLift) -> bool:
    """True iff no cusp has both peripheral signs ``+1``."""
    return all(peripheral_signs(M, lift, c) != (1, 1) for c in M.cusps)


def extends_to_filling_signs(eps: Sequence[tuple[int, int]], p: Sequence[int], q: Sequence[int]) -> bool:
    """Parity rule on explicit peripheral signs: ``eps_a^p eps_b^q == -1`` per cusp."""
    if len(eps) != len(p) or len(p) != len(q):
        raise ValueError("one (p, q) pair per cusp required")
    for (ea, eb), pi, qi in zip(eps, p, q):
        if math.gcd(int(pi), int(qi)) != 1:
            raise ValueError(f"non-coprime filling slope ({pi}, {qi})")
    return all(ea ** (int(pi) % 2) * eb ** (int(qi) % 2) == -1 for (ea, eb), pi, qi in zip(eps, p, q))


def extends_to_filling(M: ManifoldData, lift: SpinLift, p, q) -> bool:
    """Whether the spin lift extends over the Dehn filling with slopes ``p a + q b``."""
    p = [p] if np.isscalar(p) else list(p)
    q = [q] if np.isscalar(q) else list(q)
    eps = [peripheral_signs(M, lift, c) for c in M.cusps]
    return extends_to_filling_signs(eps, p, q)


# ---------------------------------------------------------------------------
# cusp geometry


def cusp_frame(M: ManifoldData, cusp: Cusp | int) -> np.ndarray:
    """Matrix ``P`` with ``P^-1 g P`` upper triangular for the cusp's peripherals.

    The first column is the common fixed vector of the peripheral parabolics,
    scaled so that the meridian ``a`` becomes ``+-[[1, 1], [0, 1]]``.
    """
    c = M.cusps[cusp] if isinstance(cusp, int) else cusp
    A = M.evaluate(c.a_word)
    B = M.evaluate(c.b_word)
    s = 1 if np.trace(A).real > 0 else -1
    N = A - s * np.eye(2)
    if np.abs(N).max() < 1e-12:
        N = B - (1 if np.trace(B).real > 0 else -1) * np.eye(2)
    # fixed vector spans the kernel (= image) of the nilpotent part
    col = N[:, 0] if np.abs(N[:, 0]).max() >= np.abs(N[:, 1]).max() else N[:, 1]
    v = col / np.linalg.norm(col)
    w = np.array([-np.conj(v[1]), np.conj(v[0])])
    P = np.column_stack([v, w])
    P /= np.sqrt(np.linalg.det(P))
    U = np.linalg.inv(P) @ A @ P
    ta = U[0, 1] / U[0, 0]
    if abs(ta) > 1e-12:
        D = np.diag([np.sqrt(ta), 1 / np.sqrt(ta)])
        P = P @ D
    return P


def translation_parameters(M: ManifoldData, cusp: Cusp | int) -> tuple[complex, complex]:
    """Translation parts ``(t_a, t_b)`` of the peripherals in a cusp frame."""
    c = M.cusps[cusp] if isinstance(cusp, int) else cusp
    P = cusp_frame(M, c)
    Pi = np.linalg.inv(P)
    out = []
    for w in (c.a_word, c.b_word):
        U = Pi @ M.evaluate(w) @ P
        out.append(complex(U[0, 1] / U[0, 0]))
    return out[0], out[1]


def cusp_shape(M: ManifoldData, cusp: Cusp | int, theta: Sequence[int], theta_prime: Sequence[int]) -> complex:
    """Ratio ``a(theta) / a(theta')`` of translation parameters.

    ``theta = (p, q)`` denotes the class ``p a + q b``.  The ratio does not
    depend on the conjugating frame.
    """
    ta, tb = translation_parameters(M, cusp)
    num = theta[0] * ta + theta[1] * tb
    den = theta_prime[0] * ta + theta_prime[1] * tb
    if tuple(theta_prime) == (0, 0) or abs(den) < 1e-14:
        raise ValueError("cusp shape undefined for a trivial class theta'")
    if tuple(theta) == (0, 0):
        raise ValueError("cusp shape undefined for a trivial class theta")
    return complex(num / den)


def peripheral_word(cusp: Cusp, theta: Sequence[int]) -> W.Word:
    """Word ``a^p b^q`` for ``theta = (p, q)``."""
    return W.multiply(W.power(cusp.a_word, int(theta[0])), W.power(cusp.b_word, int(theta[1])))
