"""Closed geodesics, complex lengths and complex-length spectrum measures.

Two enumeration back ends are provided:

``"words"``
    Breadth-first search over reduced words up to a length bound, keeping
    cyclically reduced loxodromic words, canonicalised by least rotation.
    Distinct canonical words with equal complex length are merged when
    :class:`ConjugacyOracle` certifies a conjugator; coincidences it cannot
    resolve are kept distinct and counted in the metadata.  Completeness is
    a stabilisation heuristic (no new class below the cutoff at the last two
    word lengths).
``"ford"``
    For one-cusped fixtures: enumeration via a Ford domain (see
    :mod:`artifact._ford`), complete for the requested cutoff by
    construction.

Conventions
-----------
* ``lam`` is the PSL complex length: ``Re > 0``, ``Im`` in ``(-pi, pi]``.
* ``lam_spin`` is defined modulo ``4 pi i`` with ``2 cosh(lam_spin / 2)``
  equal to the trace under the chosen spin lift; ``Im`` in ``(-2 pi, 2 pi]``.
* A *psl* measure has atoms ``exp(lam)``; a *spin* measure has atoms
  ``exp(lam_spin / 2)``.  Both orientations of a geodesic are distinct atoms.
"""

from __future__ import annotations

import cmath
import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import words as W
from .manifold import ManifoldData, SpinLift, enumerate_spin_lifts

LOX_TOL = 1e-9
MERGE_TOL = 1e-7
BRANCH_TOL = 1e-9  # torsion within this of -period/2 is mapped to +period/2


class NotLoxodromicError(ValueError):
    """Raised for parabolic or elliptic input to :func:`complex_length`."""


# ---------------------------------------------------------------------------
# complex length


def _reduce_im(lam: complex, period: float) -> complex:
    """Reduce ``Im lam`` into ``(-period / 2, period / 2]``."""
    im = math.remainder(lam.imag, period)
    if im <= -period / 2 + BRANCH_TOL:
        im += period
    return complex(lam.real, im)


def is_loxodromic(A, tol: float = LOX_TOL) -> bool:
    """True unless the trace is real and lies in ``[-2, 2]``."""
    A = np.asarray(A, dtype=complex)
    tr = A[0, 0] + A[1, 1]
    return not (abs(tr.imag) <= tol and abs(tr.real) <= 2 + tol)


def complex_length(A, spin: bool = False) -> complex:
    """Complex length of a loxodromic element.

    Parameters
    ----------
    A : array_like, shape (2, 2)
        Unit-determinant matrix.
    spin : bool
        If false, return ``lam`` with ``Im`` in ``(-pi, pi]`` and
        ``2 cosh(lam / 2) = +-trace(A)``.  If true, return ``lam`` modulo
        ``4 pi i`` (``Im`` in ``(-2 pi, 2 pi]``) with ``2 cosh(lam / 2)``
        equal to ``trace(A)`` including its sign.

    Raises
    ------
    NotLoxodromicError
        For parabolic or elliptic ``A``: "not loxodromic".
    """
    A = np.asarray(A, dtype=complex)
    if not is_loxodromic(A):
        raise NotLoxodromicError("not loxodromic")
    tr = complex(A[0, 0] + A[1, 1])
    lam = 2 * cmath.acosh(tr / 2)
    if lam.real < 0:
        lam = -lam
    if not spin:
        return _reduce_im(lam, 2 * math.pi)
    return _reduce_im(lam, 4 * math.pi)


def spin_length_from_psl(lam: complex, trace: complex) -> complex:
    """Spin complex length compatible with ``trace`` from a PSL length."""
    lam = complex(lam)
    if abs(2 * cmath.cosh(lam / 2) - trace) > abs(2 * cmath.cosh(lam / 2) + trace):
        lam = lam + 2j * math.pi
    return _reduce_im(lam, 4 * math.pi)


def _lengths_vectorized(tr: np.ndarray) -> np.ndarray:
    lam = 2 * np.arccosh(tr.astype(complex) / 2)
    lam = np.where(lam.real < 0, -lam, lam)
    im = np.remainder(lam.imag + math.pi, 2 * math.pi) - math.pi
    im = np.where(im <= -math.pi + BRANCH_TOL, im + 2 * math.pi, im)
    return lam.real + 1j * im


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class GeodesicClass:
    """Conjugacy class of a loxodromic element (an oriented closed geodesic).

    Attributes
    ----------
    word : tuple of int
        Canonical cyclic word (empty for synthetic atoms).
    lam : complex
        PSL complex length, ``Im`` in ``(-pi, pi]``.
    prime : bool
        Whether the class is primitive.
    lam_spin : complex or None
        Spin complex length under the attached lift, ``Im`` in ``(-2 pi, 2 pi]``.
    matrix : ndarray or None
        A representative in SL(2, C) under the attached lift.
    """

    word: W.Word
    lam: complex
    prime: bool = True
    lam_spin: complex | None = None
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def length(self) -> float:
        return self.lam.real

    @property
    def spin_sign(self) -> int:
        """Sign ``s`` with ``trace = s * 2 cosh(lam / 2)`` (0 if no lift attached)."""
        if self.lam_spin is None:
            return 0
        d = _reduce_im(self.lam_spin - self.lam, 4 * math.pi)
        return 1 if abs(d) < 1e-6 else -1

    @property
    def spin_half_exp(self) -> complex | None:
        """``exp(lam_spin / 2)`` (sign fixed by the lift), or None."""
        return None if self.lam_spin is None else cmath.exp(self.lam_spin / 2)


@dataclass(frozen=True)
class SpectrumMeasure:
    """Counting measure of prime closed geodesics up to a cutoff.

    Attributes
    ----------
    classes : tuple of GeodesicClass
        All enumerated classes with ``Re lam <= cutoff`` (prime and not),
        sorted deterministically.
    kind : {"psl", "spin"}
        Atom locations ``exp(lam)`` or ``exp(lam_spin / 2)``.
    cutoff : float
        Length bound up to which the enumeration claims completeness.
    complete : bool
        Whether every class below ``cutoff`` is known to be present.
    lift : SpinLift or None
    metadata : dict
        Enumeration details (method, word bound, warnings, ...).
    """

    classes: tuple[GeodesicClass, ...]
    kind: str
    cutoff: float
    complete: bool = True
    lift: SpinLift | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("psl", "spin"):
            raise ValueError("kind must be 'psl' or 'spin'")
        if self.kind == "spin" and any(c.lam_spin is None for c in self.classes):
            raise ValueError("spin measure requires spin lengths on every class")

    # -- views -----------------------------------------------------------
    @property
    def primes(self) -> tuple[GeodesicClass, ...]:
        return tuple(c for c in self.classes if c.prime)

    def lambdas(self, prime_only: bool = True) -> np.ndarray:
        """Lengths (``lam_spin`` for spin kind) of the atoms."""
        cs = self.primes if prime_only else self.classes
        if self.kind == "spin":
            return np.array([c.lam_spin for c in cs], dtype=complex)
        return np.array([c.lam for c in cs], dtype=complex)

    def locations(self) -> np.ndarray:
        """Atom locations with repetition (one per prime class)."""
        lam = self.lambdas()
        return np.exp(lam / 2) if self.kind == "spin" else np.exp(lam)

    def atoms(self, tol: float = 1e-9) -> list[tuple[complex, int]]:
        """Distinct atom locations with multiplicities."""
        out: list[list] = []
        for z in sorted(self.locations(), key=lambda z: (round(abs(z), 9), round(cmath.phase(z), 9))):
            if out and abs(out[-1][0] - z) <= tol * max(1.0, abs(z)):
                out[-1][1] += 1
            else:
                out.append([complex(z), 1])
        return [(z, m) for z, m in out]

    def restrict(self, L: float) -> "SpectrumMeasure":
        """Measure truncated to ``Re lam <= L`` (``L`` at most the cutoff)."""
        if L > self.cutoff + 1e-12:
            raise ValueError("cannot restrict beyond the enumeration cutoff")
        cs = tuple(c for c in self.classes if c.lam.real <= L)
        return replace(self, classes=cs, cutoff=float(L))

    def conjugate(self) -> "SpectrumMeasure":
        """Image under complex conjugation of every length."""
        cs = tuple(
            replace(c, lam=_reduce_im(c.lam.conjugate(), 2 * math.pi),
                    lam_spin=None if c.lam_spin is None else _reduce_im(c.lam_spin.conjugate(), 4 * math.pi),
                    matrix=None if c.matrix is None else np.conj(c.matrix))
            for c in self.classes
        )
        return replace(self, classes=_sorted_classes(cs))

    def as_psl(self) -> "SpectrumMeasure":
        """Same classes viewed as a PSL measure (atoms ``exp(lam)``)."""
        return replace(self, kind="psl")

    @classmethod
    def from_lengths(cls, lams: Iterable[complex], kind: str = "spin", cutoff: float | None = None,
                     complete: bool = True) -> "SpectrumMeasure":
        """Synthetic measure with one prime atom per length.

        For ``kind="spin"`` the lengths are spin lengths (``Im`` reduced
        mod ``4 pi``); for ``kind="psl"`` they are PSL lengths.
        """
        cs = []
        for lam in lams:
            lam = complex(lam)
            if lam.real <= 0:
                raise ValueError("atom lengths need Re > 0")
            if kind == "spin":
                ls = _reduce_im(lam, 4 * math.pi)
                cs.append(GeodesicClass((), _reduce_im(lam, 2 * math.pi), True, ls))
            else:
                cs.append(GeodesicClass((), _reduce_im(lam, 2 * math.pi), True, None))
        L = cutoff if cutoff is not None else max((c.lam.real for c in cs), default=0.0)
        return cls(_sorted_classes(cs), kind, float(L), complete, None, {"method": "synthetic"})

    # -- export ------------------------------------------------------------
    def rows(self, generators: Sequence[str] | None = None) -> list[dict]:
        """Export rows: canonical word, Re/Im of the length, spin sign, prime, multiplicity.

        ``multiplicity`` counts the classes sharing the row's length.
        """
        key = (lambda c: c.lam_spin) if self.kind == "spin" else (lambda c: c.lam)
        counts: dict = {}
        for c in self.classes:
            k = _lam_key(key(c))
            counts[k] = counts.get(k, 0) + 1
        out = []
        for c in self.classes:
            lam = key(c)
            out.append({
                "word": W.format_word(c.word, generators) if generators and c.word else
                        (" ".join(map(str, c.word)) if c.word else ""),
                "re_lambda": _fmt(lam.real),
                "im_lambda": _fmt(lam.imag),
                "spin_sign": c.spin_sign,
                "prime": bool(c.prime),
                "multiplicity": counts[_lam_key(lam)],
            })
        return out

    def to_json(self, generators: Sequence[str] | None = None) -> str:
        doc = {
            "kind": self.kind,
            "cutoff": self.cutoff,
            "complete": self.complete,
            "lift": None if self.lift is None else list(self.lift.signs),
            "metadata": {k: v for k, v in sorted(self.metadata.items()) if _jsonable(v)},
            "classes": self.rows(generators),
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    def to_csv(self, generators: Sequence[str] | None = None) -> str:
        buf = io.StringIO()
        cols = ["word", "re_lambda", "im_lambda", "spin_sign", "prime", "multiplicity"]
        wr = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        wr.writeheader()
        for r in self.rows(generators):
            wr.writerow(r)
        return buf.getvalue()


def _fmt(x: float) -> float:
    return float(f"{x:.12g}")


def _lam_key(lam: complex) -> tuple:
    return (round(lam.real, 9), round(lam.imag, 9))


def _jsonable(v) -> bool:
    try:
        json.dumps(v)
        return True
    except TypeError:
        return False


def _sorted_classes(cs: Iterable[GeodesicClass]) -> tuple[GeodesicClass, ...]:
    return tuple(sorted(cs, key=lambda c: (round(c.lam.real, 9), round(c.lam.imag, 9),
                                           len(c.word), W._sort_key(c.word))))


# ---------------------------------------------------------------------------
# conjugacy search


class ConjugacyOracle:
    """Certify conjugacy of loxodromics by reducing their axes to a domain.

    Points of hyperbolic space are positive Hermitian matrices ``X`` with
    ``det X = 1`` (basepoint ``I``, ``g . X = g X g^*``, ``cosh d(X, I) =
    tr X / 2``).  Points sampled along one period of the axis of ``A`` are
    pushed towards the basepoint by greedy descent with the elements of a
    word ball; each reduced point ``h x`` yields the conjugate ``h A h^-1``.
    When the ball contains the face pairings of the Dirichlet domain at
    ``I`` the descent ends in that domain, so conjugate elements produce
    overlapping key sets.  The conjugates ``s A s^-1`` by the ball elements
    themselves are added as keys, which also catches short conjugators in
    thin parts where the descent stalls.  A shared key exhibits a conjugator,
    so merges are always certified; a missed merge can only leave classes
    separate.

    Parameters
    ----------
    mats : sequence of ndarray
        Generator matrices.
    radius : int
        Word-ball radius for the descent moves.
    step : float
        Sampling step along the axis (hyperbolic length).
    """

    def __init__(self, mats: Sequence[np.ndarray], radius: int = 4, step: float = 0.05):
        ng = len(mats)
        gens = [np.asarray(m, dtype=complex) for m in mats] + [np.linalg.inv(m) for m in mats]
        elems = []
        seen = {_psl_key(np.eye(2))}
        front = [((), np.eye(2, dtype=complex))]
        for _ in range(radius):
            nxt = []
            for w, g in front:
                for x in range(2 * ng):
                    if w and (w[-1] + ng) % (2 * ng) == x:
                        continue
                    h = g @ gens[x]
                    k = _psl_key(h)
                    if k in seen:
                        continue
                    seen.add(k)
                    nxt.append((w + (x,), h))
                    elems.append(h)
            front = nxt
        self.S = np.array(elems) if elems else np.zeros((0, 2, 2), dtype=complex)
        self.step = step
        self._cache: dict = {}

    def keys(self, A: np.ndarray) -> frozenset:
        """Keys of the conjugates of ``A`` whose axes pass through the domain."""
        ck = _psl_key(A)
        if ck in self._cache:
            return self._cache[ck]
        A = np.asarray(A, dtype=complex)
        lam = complex_length(A)
        ell = lam.real
        ev, P = np.linalg.eig(A)
        if abs(ev[0]) < abs(ev[1]):
            P = P[:, ::-1]
        P = P / np.sqrt(np.linalg.det(P))
        nsamp = max(8, int(math.ceil(ell / self.step)))
        t = np.arange(nsamp) * (ell / nsamp)
        D = np.zeros((nsamp, 2, 2), dtype=complex)
        D[:, 0, 0] = np.exp(t)
        D[:, 1, 1] = np.exp(-t)
        X = P[None] @ D @ P.conj().T[None]
        H = np.broadcast_to(np.eye(2, dtype=complex), X.shape).copy()
        S, Sh = self.S, self.S.conj().transpose(0, 2, 1)
        for _ in range(10000):
            cur = np.trace(X, axis1=1, axis2=2).real
            if len(S) == 0:
                break
            # tr(S X S^*) for every sample and move
            Y = np.einsum("sij,njk,skl->nsil", S, X, Sh, optimize=False)
            tv = (Y[..., 0, 0] + Y[..., 1, 1]).real
            k = np.argmin(tv, axis=1)
            best = tv[np.arange(len(k)), k]
            imp = best < cur - 1e-10 * cur
            if not np.any(imp):
                break
            idx = np.nonzero(imp)[0]
            X[idx] = Y[idx, k[idx]]
            H[idx] = S[k[idx]] @ H[idx]
        Hi = np.linalg.inv(H)
        conj = H @ A[None] @ Hi
        # direct conjugates by ball elements (and A itself) cover thin parts,
        # where the descent can stall before reaching the domain
        direct = np.concatenate([A[None], self.S @ A[None] @ np.linalg.inv(self.S)]) if len(S) else A[None]
        out = frozenset(_psl_key(c) for c in np.concatenate([conj, direct]))
        self._cache[ck] = out
        return out

    def conjugate(self, A: np.ndarray, B: np.ndarray) -> bool:
        """Whether ``A`` and ``B`` are certified conjugate (up to sign)."""
        return bool(self.keys(A) & self.keys(B))


def _psl_key(g) -> tuple:
    g = np.asarray(g, dtype=complex)
    tr = g[0, 0] + g[1, 1]
    flip = tr.real < -1e-9 or (abs(tr.real) <= 1e-9 and tr.imag < 0)
    if abs(tr) <= 1e-9:
        v = g.ravel()
        nz = v[np.abs(v) > 1e-9][0]
        flip = nz.real < 0 or (abs(nz.real) <= 1e-9 and nz.imag < 0)
    if flip:
        g = -g
    v = g.ravel()
    return tuple(np.round(np.concatenate([v.real, v.imag]) * 1e6).astype(np.int64))


# ---------------------------------------------------------------------------
# primality


def prime_test(cls: GeodesicClass, spectrum: Sequence[GeodesicClass], *,
               oracle: ConjugacyOracle | None = None, tol: float = 1e-7) -> bool:
    """Whether ``cls`` is primitive, given the classes enumerated so far.

    A class is not prime if its word is cyclically a proper power, or if
    some enumerated class ``d`` and ``k >= 2`` satisfy ``k lam(d) = lam(cls)``
    modulo ``2 pi i`` with ``d^k`` conjugate to ``cls`` (checked through the
    canonical cyclic word of the power, or through ``oracle``).
    Sound when ``spectrum`` is complete below ``Re lam(cls)``.
    """
    if cls.word:
        _, k = W.primitive_root(cls.word)
        if k > 1:
            return False
    for d in spectrum:
        if d is cls or d.lam.real >= cls.lam.real - tol:
            continue
        k = round(cls.lam.real / d.lam.real)
        if k < 2 or abs(k * d.lam.real - cls.lam.real) > tol * max(1.0, cls.lam.real):
            continue
        dz = _reduce_im(k * d.lam - cls.lam, 2 * math.pi)
        if abs(dz) > 1e-6:
            continue
        if d.word and cls.word and W.canonical_cyclic(W.power(d.word, k)) == cls.word:
            return False
        if oracle is not None and d.matrix is not None and cls.matrix is not None:
            if oracle.conjugate(np.linalg.matrix_power(d.matrix, k), cls.matrix):
                return False
        if not d.word and not cls.word:
            return False
    return True


# ---------------------------------------------------------------------------
# enumeration


def _default_lift(M: ManifoldData) -> SpinLift | None:
    lifts = enumerate_spin_lifts(M)
    if not lifts:
        return None
    ones = SpinLift(tuple([1] * M.ngens))
    return ones if ones in lifts else lifts[0]


def enumerate_geodesics(M: ManifoldData, L: float, word_bound: int = 10, *,
                        lift: SpinLift | None = None, kind: str | None = None,
                        method: str = "auto", conjugator_radius: int = 4) -> SpectrumMeasure:
    """Enumerate oriented closed geodesics with ``Re lam <= L``.

    Parameters
    ----------
    M : ManifoldData
    L : float
        Length cutoff, ``L > 0``.
    word_bound : int
        Maximal word length for the ``"words"`` back end (ignored by ``"ford"``).
    lift : SpinLift, optional
        Spin lift attached to the classes; default: the all-plus lift when it
        is one, otherwise the first lift found.
    kind : {"psl", "spin"}, optional
        Default ``"spin"`` when ``lift`` is given, otherwise ``"psl"``.
    method : {"auto", "words", "ford"}
        ``"auto"`` uses the Ford domain for one-cusped fixtures.
    conjugator_radius : int
        Radius of the word ball driving :class:`ConjugacyOracle`.

    Returns
    -------
    SpectrumMeasure
    """
    if L <= 0:
        raise ValueError("cutoff L must be positive")
    if word_bound < 1:
        raise ValueError("word_bound must be >= 1")
    if kind is None:
        kind = "spin" if lift is not None else "psl"
    if lift is None:
        lift = _default_lift(M)
    if kind == "spin" and lift is None:
        raise ValueError("spin measure requested but the holonomy has no SL(2, C) lift")
    if method == "auto":
        method = "ford" if len(M.cusps) == 1 else "words"
    if method == "ford":
        classes, meta, complete = _enumerate_ford(M, L, lift)
    elif method == "words":
        classes, meta, complete = _enumerate_words(M, L, word_bound, lift, conjugator_radius)
    else:
        raise ValueError(f"unknown enumeration method {method!r}")
    if not complete:
        warnings.warn(f"enumeration of {M.name} may be incomplete below L={L}", RuntimeWarning, stacklevel=2)
    return SpectrumMeasure(_sorted_classes(classes), kind, float(L), complete, lift, meta)


def _attach_lift(lam: complex, mat: np.ndarray | None) -> tuple[complex | None, np.ndarray | None]:
    if mat is None:
        return None, None
    tr = complex(mat[0, 0] + mat[1, 1])
    return spin_length_from_psl(lam, tr), mat


def _enumerate_ford(M: ManifoldData, L: float, lift: SpinLift | None):
    from ._ford import FordDomain

    F = FordDomain(M)
    raw = F.enumerate(L)
    base = F.base_lift
    classes = []
    for c in raw:
        word = W.canonical_cyclic(c["word"])
        mat = c["matrix"]
        if lift is not None:
            mat = (lift.sign_of(word) * base.sign_of(word)) * mat
        ls, mat = _attach_lift(c["lambda"], mat if lift is not None else None)
        classes.append(GeodesicClass(word, c["lambda"], bool(c["prime"]), ls, mat))
    meta = {"method": "ford", **{k: (float(v) if isinstance(v, float) else v) for k, v in F.stats.items()}}
    return classes, meta, True


def _enumerate_words(M: ManifoldData, L: float, word_bound: int, lift: SpinLift | None,
                     radius: int):
    mats = M.generator_matrices(lift)
    ng = M.ngens
    gens = np.array(list(mats) + [np.linalg.inv(m) for m in mats])
    letters = list(range(1, ng + 1)) + list(range(-ng, 0))
    lidx = {x: (x - 1 if x > 0 else ng - x - 1) for x in letters}
    found: dict[W.Word, tuple[complex, np.ndarray]] = {}
    first_len: dict[W.Word, int] = {}
    words = [()]
    G = np.eye(2, dtype=complex)[None]
    for length in range(1, word_bound + 1):
        new_words, new_mats = [], []
        for x in letters:
            ok = [i for i, w in enumerate(words) if not (w and w[-1] == -x)]
            if not ok:
                continue
            new_words.extend(words[i] + (x,) for i in ok)
            new_mats.append(G[ok] @ gens[lidx[x]])
        words = new_words
        G = np.concatenate(new_mats)
        tr = G[:, 0, 0] + G[:, 1, 1]
        lox = ~((np.abs(tr.imag) <= LOX_TOL) & (np.abs(tr.real) <= 2 + LOX_TOL))
        lam = np.full(len(words), np.inf + 0j)
        lam[lox] = _lengths_vectorized(tr[lox])
        for i in np.nonzero(lox & (lam.real <= L + 1e-12))[0]:
            w = words[i]
            if w[0] == -w[-1]:
                continue
            cw = W.canonical_cyclic(w)
            if cw not in found:
                found[cw] = (complex(lam[i]), G[i].copy() if cw == w else M.evaluate(cw, lift))
                first_len[cw] = length
    # merge distinct canonical words that are conjugate in the group
    items = sorted(found.items(), key=lambda kv: (round(kv[1][0].real, 6), round(kv[1][0].imag, 6),
                                                  kv[1][0].real, kv[1][0].imag))
    oracle = ConjugacyOracle(mats, radius)
    parent = list(range(len(items)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    unresolved = 0
    i = 0
    while i < len(items):
        j = i + 1
        while j < len(items) and abs(items[j][1][0] - items[i][1][0]) <= MERGE_TOL:
            j += 1
        if j - i > 1:
            owner: dict = {}
            for a in range(i, j):
                for key in oracle.keys(items[a][1][1]):
                    if key in owner:
                        ra, rb = find(a), find(owner[key])
                        if ra != rb:
                            parent[ra] = rb
                    else:
                        owner[key] = a
            unresolved += len({find(a) for a in range(i, j)}) - 1
        i = j
    groups: dict[int, list[int]] = {}
    for a in range(len(items)):
        groups.setdefault(find(a), []).append(a)
    classes = []
    new_at = []
    for members in groups.values():
        best = min(members, key=lambda a: (len(items[a][0]), W._sort_key(items[a][0])))
        w, (lam, mat) = items[best]
        ls = spin_length_from_psl(lam, complex(mat[0, 0] + mat[1, 1])) if lift is not None else None
        classes.append(GeodesicClass(w, lam, True, ls, mat))
        new_at.append(min(first_len[items[a][0]] for a in members))
    order = sorted(range(len(classes)), key=lambda i: (classes[i].lam.real, classes[i].lam.imag))
    classes = [classes[i] for i in order]
    new_at = [new_at[i] for i in order]
    flags = [prime_test(c, classes, oracle=oracle) for c in classes]
    # Non-prime classes are regenerated as powers of the prime ones (the
    # primitive root is unique in a torsion-free group), so completeness only
    # depends on the primes; powers of very short cores need long words.
    primes = [replace(c, prime=True) for c, f in zip(classes, flags) if f]
    powers = []
    for c in primes:
        k = 2
        while k * c.lam.real <= L + 1e-12:
            mat = np.linalg.matrix_power(c.matrix, k)
            lam = _reduce_im(k * c.lam, 2 * math.pi)
            ls = _reduce_im(k * c.lam_spin, 4 * math.pi) if c.lam_spin is not None else None
            powers.append(GeodesicClass(W.canonical_cyclic(W.power(c.word, k)), lam, False, ls, mat))
            k += 1
    last_new = max((a for a, f in zip(new_at, flags) if f), default=0)
    complete = last_new <= word_bound - 2
    primes = list(_sorted_classes(primes + powers))
    meta = {"method": "words", "word_bound": word_bound, "conjugator_radius": radius,
            "canonical_words": len(found), "classes": len(primes),
            "coincident_unmerged": unresolved, "last_new_prime_length": last_new}
    return primes, meta, complete


# ---------------------------------------------------------------------------
# integrals


INTEGRANDS = ("log_abs_one_minus", "moment", "log_one_minus")


@dataclass(frozen=True)
class IntegralResult:
    """Truncated integral with a tail bound (``inf`` if not certified)."""

    value: complex
    tail_bound: float
    cutoff: float
    growth_constant: float


def fitted_growth_constant(mu: SpectrumMeasure, t_min: float = 0.0) -> float:
    """Smallest ``C`` with ``#{prime atoms, Re lam <= t} <= C exp(2 t)`` for ``t_min <= t <= cutoff``.

    The counting function is a step function, so the supremum is attained
    at an atom length or at ``t_min``.
    """
    ls = np.sort(np.array([c.lam.real for c in mu.primes]))
    if ls.size == 0:
        return 0.0
    counts = np.arange(1, ls.size + 1)
    vals = counts * np.exp(-2 * ls)
    vals = vals[ls >= t_min]
    at_min = np.searchsorted(ls, t_min, side="right") * math.exp(-2 * t_min)
    return float(max(vals.max(initial=0.0), at_min))


def default_growth_constant(mu: SpectrumMeasure) -> float:
    """Default growth constant: 1.5 times the envelope over ``[cutoff / 2, cutoff]``.

    A heuristic stand-in for the geometric constant (which needs the
    diameter and volume of a thick part); pass ``C`` explicitly for a
    certified bound.
    """
    return 1.5 * fitted_growth_constant(mu, mu.cutoff / 2)


def prime_count(mu: SpectrumMeasure) -> int:
    """Number of prime atoms (all with ``Re lam <= cutoff``)."""
    return len(mu.primes)


def tail_bound_exponential(a: float, L: float, C: float, K: float = 1.0, count_at_L: int = 0) -> float:
    """Bound on ``sum_{Re lam > L} K exp(-a Re lam)`` given ``P(t) <= C exp(2 t)`` for ``t >= L``.

    Integration by parts gives ``K (C a exp((2 - a) L) / (a - 2) - P(L) exp(-a L))``
    for ``a > 2``; ``count_at_L`` is ``P(L)``.
    """
    if a <= 2:
        return math.inf
    return K * max(0.0, C * a * math.exp((2 - a) * L) / (a - 2) - count_at_L * math.exp(-a * L))


def integrate(mu: SpectrumMeasure, f: str, k: int, *, C: float | None = None) -> IntegralResult:
    """Integrate a built-in test function against the measure.

    Parameters
    ----------
    mu : SpectrumMeasure
    f : {"log_abs_one_minus", "moment", "log_one_minus"}
        ``log|1 - z^-k|``, ``z^-k + conj(z)^-k`` or the principal ``log(1 - z^-k)``.
    k : int
        Exponent; ``k >= 5`` for spin measures, ``k >= 3`` for psl measures.
    C : float, optional
        Growth constant in ``#{Re lam <= t} <= C exp(2 t)``; defaults to
        :func:`default_growth_constant`.

    Returns
    -------
    IntegralResult
        ``tail_bound`` bounds the contribution of atoms beyond the cutoff
        (``inf`` for incomplete measures).
    """
    if f not in INTEGRANDS:
        raise ValueError(f"unknown integrand {f!r}; choose from {INTEGRANDS}")
    kmin = 5 if mu.kind == "spin" else 3
    if k < kmin:
        raise ValueError(f"k = {k} below the integrability threshold {kmin} for a {mu.kind} measure")
    lam = mu.lambdas()
    # z^-k = exp(-k lam) (psl) or exp(-k lam / 2) (spin)
    w = np.exp(-k * lam / 2) if mu.kind == "spin" else np.exp(-k * lam)
    if f == "log_abs_one_minus":
        terms = np.log(np.abs(1 - w))
        value = complex(math.fsum(terms))
    elif f == "moment":
        terms = 2 * w.real
        value = complex(math.fsum(terms))
    else:
        t = np.log(1 - w)
        value = complex(math.fsum(t.real), math.fsum(t.imag))
    Cg = default_growth_constant(mu) if C is None else float(C)
    a = k / 2 if mu.kind == "spin" else float(k)
    if not mu.complete:
        tb = math.inf
    else:
        wmax = math.exp(-a * mu.cutoff)
        K = 2.0 if f == "moment" else 1.0 / (1.0 - wmax)
        tb = tail_bound_exponential(a, mu.cutoff, Cg, K, prime_count(mu))
    return IntegralResult(value, tb, mu.cutoff, Cg)


def moments(mu: SpectrumMeasure, ks: Iterable[int]) -> np.ndarray:
    """``M_k = sum (z^-k + conj(z)^-k)`` over atoms, for each ``k`` (no threshold)."""
    z = mu.locations()
    return np.array([math.fsum(2 * (z ** (-k)).real) for k in ks])


# ---------------------------------------------------------------------------
# growth and convergence reports


def growth_check(mu: SpectrumMeasure, C: float, ts: Sequence[float] | None = None) -> dict:
    """Check ``#{prime atoms with Re lam <= t} <= C exp(2 t)`` on a grid.

    Returns
    -------
    dict
        ``ok``, ``supplied_C``, ``fitted_C`` (smallest admissible constant),
        ``fitted_exponent`` (least-squares slope of ``log count`` against
        ``t`` over the grid points with nonzero count), ``grid``, ``counts``.
    """
    ls = np.sort(np.array([c.lam.real for c in mu.primes]))
    if ts is None:
        ts = np.linspace(0.0, mu.cutoff, 41)[1:] if mu.cutoff > 0 else np.array([])
    ts = np.asarray(ts, dtype=float)
    counts = np.searchsorted(ls, ts + 1e-12, side="right")
    ok = bool(np.all(counts <= C * np.exp(2 * ts) + 1e-9))
    fitted = fitted_growth_constant(mu)
    nz = counts > 0
    slope = None
    if np.count_nonzero(nz) >= 2 and np.ptp(ts[nz]) > 0:
        slope = float(np.polyfit(ts[nz], np.log(counts[nz]), 1)[0])
    return {"ok": ok, "supplied_C": float(C), "fitted_C": fitted, "fitted_exponent": slope,
            "grid": [float(t) for t in ts], "counts": [int(c) for c in counts]}


def filling_convergence_demo(mu_sequence: Sequence[SpectrumMeasure], mu_limit: SpectrumMeasure,
                             window: tuple[float, float], *, filled_cusps: int = 1,
                             gap_tol: float = 1e-6) -> dict:
    """Compare filled spectra with their cusped limit inside a length window.

    Parameters
    ----------
    mu_sequence : sequence of SpectrumMeasure
        Spectra of Dehn-filled fixtures.
    mu_limit : SpectrumMeasure
        Spectrum of the cusped limit.
    window : (a, b)
        Real-length window; neither endpoint may lie within ``gap_tol`` of a
        limit atom.
    filled_cusps : int
        Number of filled cusps (the expected short-atom count is twice this).

    Returns
    -------
    dict
        Per measure: ``count`` of prime atoms with ``a < Re lam < b``,
        ``displacement`` (sum of ``|lam - lam_limit|`` under an optimal
        matching, ``None`` if the counts differ), ``short`` (prime atoms with
        ``Re lam <= a``) and ``short_expected``.
    """
    a, b = map(float, window)
    if not a < b:
        raise ValueError("window must satisfy a < b")
    if b > mu_limit.cutoff:
        raise ValueError("window exceeds the cutoff of the limit spectrum")
    lim = np.array([c.lam for c in mu_limit.primes], dtype=complex)
    if lim.size and np.min(np.minimum(np.abs(lim.real - a), np.abs(lim.real - b))) < gap_tol:
        raise ValueError("window endpoints lie in the limit length spectrum")
    lim_w = lim[(lim.real > a) & (lim.real < b)]
    reports = []
    for mu in list(mu_sequence) + [mu_limit]:
        if b > mu.cutoff:
            raise ValueError("window exceeds the cutoff of a filled spectrum")
        lam = np.array([c.lam for c in mu.primes], dtype=complex)
        inw = lam[(lam.real > a) & (lam.real < b)]
        short = int(np.count_nonzero(lam.real <= a))
        disp = None
        if inw.size == lim_w.size:
            if inw.size:
                cost = np.abs(inw[:, None] - lim_w[None, :])
                r, c = linear_sum_assignment(cost)
                disp = float(cost[r, c].sum())
            else:
                disp = 0.0
        reports.append({"count": int(inw.size), "displacement": disp, "short": short})
    limit_report = reports.pop()
    for r in reports:
        r["short_expected"] = 2 * filled_cusps
        r["matched"] = r["count"] == limit_report["count"]
    return {"window": [a, b], "limit": limit_report, "filled": reports,
            "ok": all(r["matched"] and r["short"] == r["short_expected"] for r in reports)}
