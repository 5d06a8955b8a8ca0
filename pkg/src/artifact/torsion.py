"""Twisted Reidemeister torsion from group presentations.

Chain conventions
-----------------
Chains are row vectors: the coefficient ``v`` of a cell lifted through the
group element ``g`` is ``v @ rho(g)``.  Boundary maps are matrices acting on
the right, ``c -> c @ D_k``, with

* ``D_2`` block ``(i, j) = rho_n(d r_i / d x_j)`` (Fox derivatives), shape
  ``(n * #relators, n * #generators)``;
* ``D_1`` block ``j = rho_n(x_j) - I``, shape ``(n * #generators, n)``.

Torsion of a based complex with homology bases ``h_k`` is

    tau = prod_k det[ D_{k+1}(b_{k+1}) ; h_k ; b_k ]^{(-1)^k}

(rows stacked, determinant relative to the standard basis), where ``b_k``
are standard basis rows whose images span ``im D_k``.  With this
normalization the circle with holonomy ``g`` has ``tau = det(rho(g) - I)``.
All torsions are handled modulo sign.

Homology bases at the complete structure (n odd) use, per cusp, an
invariant vector ``w`` of the peripheral holonomy: the 1-cycle ``w (x) theta``
along a peripheral curve ``theta = p a + q b`` and the 2-cycle ``w (x) T``
carried by the boundary torus (built from the fixture's torus identity).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from . import words as W
from .manifold import ManifoldData, SpinLift, cusp_frame, cusp_shape, peripheral_word, translation_parameters
from .repn import pairing_matrix, sym_power

RANK_RTOL = 1e-10
GAP_WARN = 1e3


class TorsionError(ValueError):
    """Raised for invalid torsion inputs (rank mismatch, bad presentation)."""


# ---------------------------------------------------------------------------
# representation plumbing


class RhoWords:
    """Evaluate ``rho_n`` on words and Fox derivatives with memoized prefixes."""

    def __init__(self, mats2: Sequence[np.ndarray], n: int):
        self.n = n
        self.gen = [sym_power(m, n, check=False) for m in mats2]
        self.inv = [sym_power(np.linalg.inv(m), n, check=False) for m in mats2]
        self._cache: dict[W.Word, np.ndarray] = {(): np.eye(n, dtype=complex)}

    def __call__(self, word: Sequence[int]) -> np.ndarray:
        word = tuple(word)
        if word in self._cache:
            return self._cache[word]
        k = len(word)
        while word[:k] not in self._cache:
            k -= 1
        out = self._cache[word[:k]]
        for i in range(k, len(word)):
            x = word[i]
            out = out @ (self.gen[x - 1] if x > 0 else self.inv[-x - 1])
            self._cache[word[: i + 1]] = out
        return out

    def fox(self, word: Sequence[int], j: int) -> np.ndarray:
        """``rho_n(d word / d x_j)`` for 1-based generator index ``j``."""
        out = np.zeros((self.n, self.n), dtype=complex)
        for c, pre in W.fox_derivative_terms(word, j):
            out += c * self(pre)
        return out

    def group_ring(self, terms: Sequence[tuple[complex, Sequence[int]]]) -> np.ndarray:
        """``rho_n`` of a formal sum ``sum c * word``."""
        out = np.zeros((self.n, self.n), dtype=complex)
        for c, w in terms:
            out += c * self(w)
        return out


def _signed_mats(M: ManifoldData, lift: SpinLift | None) -> list[np.ndarray]:
    return M.generator_matrices(lift)


# ---------------------------------------------------------------------------
# chain complexes


@dataclass
class TwistedChainComplex:
    """Based chain complex ``C_top -> ... -> C_0`` in the row convention.

    Attributes
    ----------
    n : int
        Representation dimension.
    boundaries : dict
        ``boundaries[k]`` is the matrix of ``C_k -> C_{k-1}`` (k >= 1).
    betti : list of int
        Homology ranks per degree.
    diagnostics : dict
        Singular-value gaps and residual of ``D_{k} D_{k-1}``.
    """

    n: int
    boundaries: dict[int, np.ndarray]
    betti: list[int] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    rho: RhoWords | None = None

    @property
    def top(self) -> int:
        return max(self.boundaries) if self.boundaries else 0

    def dim(self, k: int) -> int:
        if k == 0:
            return self.boundaries[1].shape[1] if 1 in self.boundaries else self.n
        return self.boundaries[k].shape[0]

    @property
    def boundary1(self) -> np.ndarray:
        return self.boundaries[1]

    @property
    def boundary2(self) -> np.ndarray:
        return self.boundaries[2]


def _numerical_rank(A: np.ndarray, rtol: float = RANK_RTOL) -> tuple[int, float, float]:
    """Rank by singular values; also return the kept/dropped gap and scale."""
    if A.size == 0:
        return 0, math.inf, 0.0
    s = np.linalg.svd(A, compute_uv=False)
    scale = float(s[0]) if s.size else 0.0
    if scale == 0.0:
        return 0, math.inf, 0.0
    r = int(np.sum(s > rtol * scale))
    gap = math.inf
    if 0 < r < s.size:
        gap = float(s[r - 1] / max(s[r], 1e-300))
    return r, gap, scale


def analyse_complex(C: TwistedChainComplex, rtol: float = RANK_RTOL) -> TwistedChainComplex:
    """Fill in homology ranks and diagnostics (in place)."""
    ranks = {}
    gaps = {}
    for k, D in C.boundaries.items():
        r, gap, scale = _numerical_rank(D, rtol)
        ranks[k] = r
        gaps[k] = gap
        if gap < GAP_WARN:
            warnings.warn(f"rank decision for D_{k} is ill-conditioned (gap ratio {gap:.3g})", RuntimeWarning)
    residual = 0.0
    for k in C.boundaries:
        if k - 1 in C.boundaries:
            P = C.boundaries[k] @ C.boundaries[k - 1]
            sc = max(np.abs(C.boundaries[k]).max() * np.abs(C.boundaries[k - 1]).max(), 1.0)
            residual = max(residual, float(np.abs(P).max() / sc))
    betti = []
    for k in range(C.top + 1):
        betti.append(C.dim(k) - ranks.get(k, 0) - ranks.get(k + 1, 0))
    C.betti = betti
    C.diagnostics = {"ranks": ranks, "gap": gaps, "dd_residual": residual}
    return C


def build_complex(M: ManifoldData, lift: SpinLift | None, n: int, *, check_euler: bool = True) -> TwistedChainComplex:
    """Fox-calculus chain complex of the presentation 2-complex twisted by ``rho_n``.

    Raises
    ------
    TorsionError
        If the presentation has the wrong deficiency for a spine of a
        manifold with torus boundary (Euler characteristic must vanish).
    """
    if n < 1:
        raise TorsionError("n must be positive")
    if check_euler and 1 - M.ngens + len(M.relators) != 0:
        raise TorsionError(
            "presentation deficiency incompatible with a 2-complex model of a cusped 3-manifold "
            f"(Euler characteristic {1 - M.ngens + len(M.relators)} != 0)"
        )
    rho = RhoWords(_signed_mats(M, lift), n)
    g = M.ngens
    D1 = np.vstack([rho.gen[j] - np.eye(n) for j in range(g)]) if g else np.zeros((0, n))
    boundaries = {1: D1}
    if M.relators:
        D2 = np.zeros((n * len(M.relators), n * g), dtype=complex)
        for i, r in enumerate(M.relators):
            for j in range(g):
                D2[i * n:(i + 1) * n, j * n:(j + 1) * n] = rho.fox(r, j + 1)
        boundaries[2] = D2
    C = TwistedChainComplex(n=n, boundaries=boundaries, rho=rho)
    analyse_complex(C)
    if C.diagnostics["dd_residual"] > 1e-8:
        raise TorsionError(f"boundary composition not zero (residual {C.diagnostics['dd_residual']:.3e})")
    return C


def circle_complex(g: np.ndarray, n: int) -> TwistedChainComplex:
    """Complex of a circle with holonomy ``g``: ``C_1 -> C_0`` by ``rho(g) - I``."""
    C = TwistedChainComplex(n=n, boundaries={1: sym_power(g, n, check=False) - np.eye(n)})
    return analyse_complex(C)


# ---------------------------------------------------------------------------
# torsion of based complexes


@dataclass(frozen=True)
class TorsionValue:
    """A torsion modulo sign, stored in log form.

    ``value`` is the canonical representative with ``Re >= 0`` (ties
    ``Im >= 0``); ``log_abs`` and ``phase`` describe it without overflow.
    """

    log_abs: float
    phase: float
    n: int
    basis: object = "acyclic"
    diagnostics: Mapping = field(default_factory=dict)

    @property
    def value(self) -> complex:
        return complex(math.exp(self.log_abs) * np.exp(1j * self.phase))

    def __truediv__(self, other: "TorsionValue") -> "TorsionValue":
        return TorsionValue(self.log_abs - other.log_abs, _canon_phase(self.phase - other.phase),
                            self.n, {"numerator": self.basis, "denominator": other.basis})


def _canon_phase(ph: float) -> float:
    """Representative of a phase modulo pi in (-pi/2, pi/2]."""
    ph = math.remainder(ph, math.pi)
    if ph <= -math.pi / 2 + 1e-15:
        ph += math.pi
    return ph


def _select_rows(D: np.ndarray, r: int) -> np.ndarray:
    """Indices of ``r`` rows of ``D`` with independent images (pivoted QR)."""
    if r == 0:
        return np.zeros(0, dtype=int)
    _, _, piv = sla.qr(D.T, mode="economic", pivoting=True)
    return np.sort(piv[:r])


def complex_torsion(C: TwistedChainComplex, homology: Mapping[int, np.ndarray] | None = None,
                    rtol: float = RANK_RTOL) -> tuple[float, float, dict]:
    """Milnor torsion of a based complex with given homology representatives.

    Parameters
    ----------
    C : TwistedChainComplex
    homology : mapping k -> array of row cycles in C_k
        Must have ``betti[k]`` rows in each degree with nonzero homology.

    Returns
    -------
    (log_abs, phase, diagnostics)
    """
    homology = dict(homology or {})
    if not C.betti:
        analyse_complex(C, rtol)
    top = C.top
    sel = {}
    for k in range(1, top + 1):
        r = C.diagnostics["ranks"][k]
        sel[k] = _select_rows(C.boundaries[k], r)
    log_abs, phase = 0.0, 0.0
    conds = {}
    for k in range(top + 1):
        dimk = C.dim(k)
        h = homology.get(k)
        nh = 0 if h is None else np.atleast_2d(h).shape[0]
        if nh != C.betti[k]:
            raise TorsionError(f"rank mismatch in degree {k}: basis has {nh} vectors, homology rank {C.betti[k]}")
        if h is not None and k >= 1:
            res = np.abs(np.atleast_2d(h) @ C.boundaries[k]).max()
            scale = max(np.abs(h).max() * np.abs(C.boundaries[k]).max(), 1.0)
            if res > 1e-7 * scale:
                raise TorsionError(f"homology representative in degree {k} is not a cycle (residual {res:.2e})")
        parts = []
        if k + 1 <= top and sel[k + 1].size:
            parts.append(C.boundaries[k + 1][sel[k + 1]])
        if nh:
            parts.append(np.atleast_2d(h))
        if k >= 1 and sel[k].size:
            E = np.zeros((sel[k].size, dimk), dtype=complex)
            E[np.arange(sel[k].size), sel[k]] = 1.0
            parts.append(E)
        if not parts:
            if dimk:
                raise TorsionError(f"degree {k}: empty basis for nonzero chain group")
            continue
        B = np.vstack(parts)
        if B.shape != (dimk, dimk):
            raise TorsionError(f"degree {k}: basis has shape {B.shape}, expected {(dimk, dimk)}")
        sign, la = np.linalg.slogdet(B)
        if sign == 0:
            raise TorsionError(f"degree {k}: singular basis change")
        conds[k] = float(np.linalg.cond(B))
        e = 1 if k % 2 == 0 else -1
        log_abs += e * la
        phase += e * float(np.angle(sign))
    return log_abs, _canon_phase(phase), {"condition": conds, "betti": list(C.betti)}


# ---------------------------------------------------------------------------
# homology bases


@dataclass(frozen=True)
class HomologyBasisSpec:
    """Per-cusp choices for the homology bases.

    Attributes
    ----------
    theta : sequence of (p, q)
        Peripheral class ``p a_j + q b_j`` carrying the 1-cycle.
    w : sequence of vectors or None
        Invariant (column) vectors; ``None`` computes them.
    u : sequence of complex or None
        Deformation parameters used when computing ``w``.
    """

    theta: tuple[tuple[int, int], ...]
    w: tuple | None = None
    u: tuple | None = None


def _deformed_frame(A: np.ndarray, u: complex, eps: int) -> np.ndarray:
    """``P`` with ``P^-1 A P = eps [[e^{u/2}, 1], [0, e^{-u/2}]]``, det P = 1."""
    m1 = eps * np.exp(u / 2)
    m2 = eps * np.exp(-u / 2)
    # eigenvector for m1 spans the image of A - m2 I
    N2 = A - m2 * np.eye(2)
    col = N2[:, 0] if np.abs(N2[:, 0]).max() >= np.abs(N2[:, 1]).max() else N2[:, 1]
    v1 = col / np.linalg.norm(col)
    v2, *_ = np.linalg.lstsq(N2, eps * v1, rcond=None)
    P = np.column_stack([v1, v2])
    det = np.linalg.det(P)
    if abs(det) < 1e-14:
        raise TorsionError("frame-conjugation failure: degenerate peripheral frame")
    return P / np.sqrt(det)


def invariant_vector(M: ManifoldData, cusp, n: int, u: complex = 0.0, lift: SpinLift | None = None,
                     tol: float = 1e-8) -> np.ndarray:
    """Column vector of ``C^n`` fixed by ``rho_n`` of the cusp's peripherals.

    At the complete structure (``u == 0``) this is ``X^{n-1}`` in a frame where
    the peripherals are upper triangular, pulled back to fixture coordinates.
    For ``u != 0`` and ``n = 2k + 1`` it is ``X^k (X - 2 sinh(u/2) Y)^k`` in the
    frame where the meridian is ``eps [[e^{u/2}, 1], [0, e^{-u/2}]]``.

    Raises
    ------
    TorsionError
        If the resulting vector is not invariant within ``tol``.
    """
    c = M.cusps[cusp] if isinstance(cusp, int) else cusp
    A = M.evaluate(c.a_word, lift)
    B = M.evaluate(c.b_word, lift)
    if u == 0:
        P = cusp_frame(M, c)
        w0 = np.zeros(n, dtype=complex)
        w0[0] = 1.0
    else:
        if n % 2 == 0:
            raise TorsionError("deformed invariant vectors exist only for odd n")
        k = (n - 1) // 2
        tr = np.trace(A)
        ch = 2 * np.cosh(u / 2)
        eps = 1 if abs(tr - ch) <= abs(tr + ch) else -1
        P = _deformed_frame(A, u, eps)
        w0 = deformed_invariant_coefficients(u, k)
    S = sym_power(P, n, check=False)
    w = S @ w0
    w = w / np.abs(w).max()
    res = max(np.abs(sym_power(A, n, check=False) @ w - w).max(), np.abs(sym_power(B, n, check=False) @ w - w).max())
    if res > tol * max(1.0, np.abs(sym_power(A, n, check=False)).max()):
        raise TorsionError(f"frame-conjugation failure: invariance residual {res:.2e}")
    return w


def deformed_invariant_coefficients(u: complex, k: int) -> np.ndarray:
    """Monomial coefficients of ``X^k (X - 2 sinh(u/2) Y)^k`` (length 2k+1)."""
    c = 2 * np.sinh(u / 2)
    lin = np.array([1.0, -c], dtype=complex)
    poly = np.ones(1, dtype=complex)
    for _ in range(k):
        poly = np.convolve(poly, lin)
    out = np.zeros(2 * k + 1, dtype=complex)
    out[: k + 1] = poly
    return out


def pairing_self_value(w: np.ndarray) -> complex:
    """``Phi(w, w)`` for the invariant pairing of :func:`repn.pairing_matrix`."""
    n = len(w)
    return complex(w @ pairing_matrix(n) @ w)


def _row_invariant(w: np.ndarray) -> np.ndarray:
    """Row vector fixed under right multiplication, ``(Phi w)^T``."""
    return pairing_matrix(len(w)) @ w


def h1_cycle(C: TwistedChainComplex, M: ManifoldData, cusp, theta, w: np.ndarray) -> np.ndarray:
    """Row chain in ``C_1`` representing ``w (x) theta``."""
    c = M.cusps[cusp] if isinstance(cusp, int) else cusp
    word = peripheral_word(c, theta)
    wr = _row_invariant(w)
    n = C.n
    out = np.zeros(n * M.ngens, dtype=complex)
    for j in range(M.ngens):
        out[j * n:(j + 1) * n] = wr @ C.rho.fox(word, j + 1)
    return out


def h2_cycle(C: TwistedChainComplex, M: ManifoldData, cusp, w: np.ndarray) -> np.ndarray:
    """Row chain in ``C_2`` representing ``w (x) T`` (boundary torus)."""
    c = M.cusps[cusp] if isinstance(cusp, int) else cusp
    if c.torus_identity is None:
        raise TorsionError(f"cusp {c.index} has no torus identity; cannot build the torus 2-cycle")
    wr = _row_invariant(w)
    n = C.n
    out = np.zeros(n * len(M.relators), dtype=complex)
    for term in c.torus_identity:
        i = term.relator
        out[i * n:(i + 1) * n] += term.exponent * (wr @ C.rho(term.conjugator))
    return out


def torsion_with_bases(M: ManifoldData, lift: SpinLift | None, n: int, spec: HomologyBasisSpec | None = None,
                       *, complex_: TwistedChainComplex | None = None) -> TorsionValue:
    """Torsion ``tau(M; rho_n; {theta_j})`` with the canonical homology bases.

    For acyclic complexes ``spec`` is ignored.
    """
    C = complex_ if complex_ is not None else build_complex(M, lift, n)
    if all(b == 0 for b in C.betti):
        la, ph, diag = complex_torsion(C)
        return TorsionValue(la, ph, n, "acyclic", diag)
    if spec is None:
        raise TorsionError("complex is not acyclic: a HomologyBasisSpec is required")
    if len(spec.theta) != len(M.cusps):
        raise TorsionError("one theta per cusp required")
    h1, h2 = [], []
    for j, cusp in enumerate(M.cusps):
        if spec.w is not None and spec.w[j] is not None:
            w = np.asarray(spec.w[j], dtype=complex)
        else:
            u = 0.0 if spec.u is None else spec.u[j]
            w = invariant_vector(M, cusp, n, u, lift)
        h1.append(h1_cycle(C, M, cusp, spec.theta[j], w))
        h2.append(h2_cycle(C, M, cusp, w))
    la, ph, diag = complex_torsion(C, {1: np.array(h1), 2: np.array(h2)})
    return TorsionValue(la, ph, n, spec, diag)


def basis_change_covariance(M: ManifoldData, lift: SpinLift | None, n: int, theta, theta_prime,
                            tol: float = 1e-9) -> dict:
    """Compare ``tau(theta) / tau(theta')`` with the cusp-shape product.

    Returns
    -------
    dict
        ``factor`` = prod_j cshape(theta_j, theta'_j); ``ratio`` = the measured
        torsion ratio (mod sign); ``exponent`` = e in {+1, -1} with
        ``ratio = +- factor^e`` (None if neither matches within ``tol``).
    """
    theta = [tuple(t) for t in theta]
    theta_prime = [tuple(t) for t in theta_prime]
    factor = complex(np.prod([cusp_shape(M, j, theta[j], theta_prime[j]) for j in range(len(M.cusps))]))
    C = build_complex(M, lift, n)
    t1 = torsion_with_bases(M, lift, n, HomologyBasisSpec(tuple(theta)), complex_=C)
    t2 = torsion_with_bases(M, lift, n, HomologyBasisSpec(tuple(theta_prime)), complex_=C)
    ratio = (t1 / t2).value
    exponent = None
    for e in (1, -1):
        f = factor ** e
        if min(abs(ratio - f), abs(ratio + f)) <= tol * max(1.0, abs(f)):
            exponent = e
            break
    return {"factor": factor, "ratio": ratio, "exponent": exponent}


def normalized_torsion(M: ManifoldData, lift: SpinLift | None, n: int, theta=None, *, check: bool = True,
                       tol: float = 1e-6) -> TorsionValue:
    """``T_n = tau_n / tau_3`` (odd n) or ``tau_n / tau_2`` (even n).

    Odd ``n`` uses a shared peripheral class ``theta`` (default: meridians);
    with ``check`` the quotient is recomputed with the longitudes and must
    agree within ``tol`` (relative).  The deviation is stored in the
    diagnostics; in double precision it grows from ~1e-13 at ``n = 5`` to
    ~1e-6 at ``n = 13``, so larger ``n`` is not reliable.

    Raises
    ------
    TorsionError
        For ``n < 4`` or a failed independence check.
    """
    if n < 4:
        raise TorsionError("normalized torsion needs n >= 4")
    if n % 2 == 0:
        tn = torsion_with_bases(M, lift, n)
        t2 = torsion_with_bases(M, lift, 2)
        if any(isinstance(t.basis, HomologyBasisSpec) for t in (tn, t2)):
            raise TorsionError("even-dimensional normalization requires an acyclic lift")
        out = tn / t2
        return TorsionValue(out.log_abs, out.phase, n, "acyclic", {"tau_n": tn, "tau_2": t2})
    if theta is None:
        theta = tuple((1, 0) for _ in M.cusps)
    theta = tuple(tuple(t) for t in theta)
    spec = HomologyBasisSpec(theta)
    out = torsion_with_bases(M, lift, n, spec) / torsion_with_bases(M, lift, 3, spec)
    diag = {"theta": theta}
    if check and M.cusps:
        alt = tuple((0, 1) if t != (0, 1) else (1, 0) for t in theta)
        spec2 = HomologyBasisSpec(alt)
        out2 = torsion_with_bases(M, lift, n, spec2) / torsion_with_bases(M, lift, 3, spec2)
        dev = abs(out.log_abs - out2.log_abs) + abs(math.remainder(out.phase - out2.phase, math.pi))
        diag["theta_check"] = alt
        diag["theta_deviation"] = dev
        if dev > tol:
            raise TorsionError(f"normalized torsion depends on theta (deviation {dev:.2e})")
    return TorsionValue(out.log_abs, out.phase, n, spec, diag)
