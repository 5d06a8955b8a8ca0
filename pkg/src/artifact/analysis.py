"""Müller-type identities, the volume asymptotics and moment inversion.

Zeta route
----------
For an acyclic spin lift of a one-cusped manifold, consecutive normalised
torsions of equal parity are linked by Ruelle zeta values at ``s = k / 2``::

    log|T_{k+1}| - log|T_{k-1}| = log|R_k(k / 2)| - k vol / pi      (k >= 5)

(odd ``k + 1`` for even ``k``, even ``k + 1`` for odd ``k``).  Summing gives
:func:`mueller_identity`, and ``log|T_n| / n^2 -> -vol / (4 pi)``.

Moments
-------
With spin atoms ``z = exp(lam / 2)`` and ``M_k = sum (z^-k + conj(z)^-k)``,
``log|R_k(k / 2)| = -sum_{j >= 1} M_{kj} / (2 j)``; Möbius inversion gives
``M_k = -2 sum_d mu(d) log|R_{kd}(kd / 2)| / d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .spectrum import SpectrumMeasure, _reduce_im
from .zeta import log_ruelle_at_half_with_tail


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class TorsionSequence:
    """Map ``n -> log|T_n|`` (``n >= 4``) with provenance."""

    entries: Mapping[int, float]
    provenance: str = "external"
    uncertainty: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for n, v in self.entries.items():
            if n < 4:
                raise ValueError("torsion sequences start at n = 4")
            if not math.isfinite(v):
                raise ValueError(f"non-finite entry at n = {n}")

    @property
    def odd(self) -> list[int]:
        return sorted(n for n in self.entries if n % 2)

    @property
    def even(self) -> list[int]:
        return sorted(n for n in self.entries if n % 2 == 0)


@dataclass(frozen=True)
class MeasureEstimate:
    """Recovered atoms ``(location, weight)`` of the symmetrised measure ``mu + conj(mu)``."""

    atoms: tuple[tuple[complex, float], ...]
    symmetrized: bool = True
    residual: float = 0.0
    singular_values: tuple[float, ...] = ()

    def locations(self) -> np.ndarray:
        return np.array([z for z, _ in self.atoms], dtype=complex)

    def lengths(self) -> np.ndarray:
        """Spin lengths ``2 log z`` of the atoms (``Im`` in ``(-2 pi, 2 pi]``)."""
        return np.array([_reduce_im(2 * complex(np.log(z)), 4 * math.pi) for z, _ in self.atoms])


@dataclass(frozen=True)
class MuellerResult:
    value: float
    uncertainty: float
    terms: Mapping[int, float]
    volume_term: float


# ---------------------------------------------------------------------------
# Müller identity and sequences


def _log_r(mu: SpectrumMeasure, k: int, C: float | None) -> tuple[float, float]:
    if len(mu.primes) == 0:
        return 0.0, 0.0
    return log_ruelle_at_half_with_tail(mu, k, C=C)


def mueller_identity(mu: SpectrumMeasure, vol: float, m: int, parity: str, *,
                     C: float | None = None) -> MuellerResult:
    """Zeta-route prediction of a normalised torsion quotient.

    Parameters
    ----------
    mu : SpectrumMeasure
        Spin measure (required for ``parity="even"``).
    vol : float
        Volume.
    m : int
        ``m >= 3``.
    parity : {"odd", "even"}
        odd: ``log|T_{2m+1} / T_5| = sum_{k=3}^{m} log|R_{2k}(k)| - vol (m(m+1) - 6) / pi``;
        even: ``log|T_{2m} / T_4| = sum_{k=2}^{m-1} log|R_{2k+1}(k + 1/2)| - vol (m^2 - 4) / pi``.
    C : float, optional
        Growth constant for the tail bounds.

    Returns
    -------
    MuellerResult
        ``uncertainty`` is the sum of the tail bounds of the zeta terms.
    """
    if m < 3:
        raise ValueError("m must be >= 3")
    if parity == "odd":
        ks = [2 * k for k in range(3, m + 1)]
        vt = vol * (m * (m + 1) - 6) / math.pi
    elif parity == "even":
        if mu.kind != "spin" and mu.primes:
            raise ValueError("even parity requires a spin measure")
        ks = [2 * k + 1 for k in range(2, m)]
        vt = vol * (m * m - 4) / math.pi
    else:
        raise ValueError("parity must be 'odd' or 'even'")
    terms, unc = {}, 0.0
    for k in ks:
        v, t = _log_r(mu, k, C)
        terms[k] = v
        unc += t
    return MuellerResult(math.fsum(terms.values()) - vt, unc, terms, vt)


def zeta_route_sequence(mu: SpectrumMeasure, vol: float, anchors: Mapping[int, float], n_max: int, *,
                        C: float | None = None) -> TorsionSequence:
    """Extend anchor values ``log|T_4|`` and/or ``log|T_5|`` up to ``n_max`` by the zeta route."""
    entries: dict[int, float] = {}
    unc: dict[int, float] = {}
    for n0, v0 in anchors.items():
        if n0 not in (4, 5):
            raise ValueError("anchors must be at n = 4 or n = 5")
        entries[n0], unc[n0] = float(v0), 0.0
        n, acc, u = n0, float(v0), 0.0
        while n + 2 <= n_max:
            k = n + 1
            r, t = _log_r(mu, k, C)
            acc += r - k * vol / math.pi
            u += t
            n += 2
            entries[n], unc[n] = acc, u
    return TorsionSequence(entries, "zeta route", unc)


def algebraic_sequence(M, lift, ns: Sequence[int]) -> TorsionSequence:
    """``log|T_n|`` from twisted chain complexes (reliable for ``n <= 13`` in double precision)."""
    from .torsion import normalized_torsion

    return TorsionSequence({int(n): normalized_torsion(M, lift, int(n)).log_abs for n in ns}, "algebraic route")


def richardson_limit(ns: Sequence[float], values: Sequence[float], order: int = 3) -> float:
    """Polynomial extrapolation in ``h = 1 / n`` to ``h = 0`` using the last ``order + 1`` points."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    p = min(order + 1, len(ns))
    h = 1.0 / ns[-p:]
    y = values[-p:]
    # Neville's algorithm at h = 0
    T = list(y)
    for j in range(1, p):
        for i in range(p - 1, j - 1, -1):
            T[i] = (h[i - j] * T[i] - h[i] * T[i - 1]) / (h[i - j] - h[i])
    return float(T[-1])


def asymptotic_ratio(seq: TorsionSequence, parity: str | None = None, order: int = 3) -> dict:
    """Ratios ``log|T_n| / n^2`` and their Richardson limit.

    Returns
    -------
    dict
        ``n``, ``ratio``, ``limit`` (None with fewer than 4 entries) and
        ``volume_estimate = -4 pi limit``.
    """
    if parity is None:
        ns = seq.odd if len(seq.odd) >= len(seq.even) else seq.even
    else:
        ns = seq.odd if parity == "odd" else seq.even
    ratios = [seq.entries[n] / n ** 2 for n in ns]
    out = {"n": ns, "ratio": ratios, "limit": None, "volume_estimate": None}
    if len(ns) >= 4:
        lim = richardson_limit(ns, ratios, order)
        out["limit"] = lim
        out["volume_estimate"] = -4 * math.pi * lim
    return out


# ---------------------------------------------------------------------------
# moments


def _mobius(n: int) -> int:
    if n == 1:
        return 1
    out, p, m = 1, 2, n
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            out = -out
        p += 1
    if m > 1:
        out = -out
    return out


def zeta_logs_from_torsion(seq: TorsionSequence, vol: float) -> dict[int, float]:
    """``log|R_k(k / 2)| = log|T_{k+1}| - log|T_{k-1}| + k vol / pi`` wherever both entries exist."""
    out = {}
    for n in sorted(seq.entries):
        if n + 2 in seq.entries:
            k = n + 1
            out[k] = seq.entries[n + 2] - seq.entries[n] + k * vol / math.pi
    return out


def moments_from_zeta_logs(zlogs: Mapping[int, float]) -> dict[int, float]:
    """Invert ``log|R_k(k / 2)| = -sum_j M_{kj} / (2 j)`` by Möbius inversion.

    ``M_k`` is returned for every ``k`` present; the sum over divisor
    multiples is truncated at the largest available ``k`` (the neglected
    terms are ``O(M_{2k})``).  Multiples missing inside the range raise.
    """
    if not zlogs:
        return {}
    kmax = max(zlogs)
    out = {}
    for k in sorted(zlogs):
        acc = []
        d = 1
        while k * d <= kmax:
            mu_d = _mobius(d)
            if mu_d:
                if k * d not in zlogs:
                    raise ValueError(f"missing log|R_{k * d}| needed for M_{k}")
                acc.append(mu_d * zlogs[k * d] / d)
            d += 1
        out[k] = -2 * math.fsum(acc)
    return out


def moments_from_torsion(seq: TorsionSequence, vol: float) -> dict[int, float]:
    """Moments ``M_k`` of the spin spectrum from a torsion sequence.

    Raises
    ------
    ValueError
        If the sequence does not cover consecutive dimensions.
    """
    z = zeta_logs_from_torsion(seq, vol)
    if not z:
        raise ValueError("sequence must contain pairs n, n + 2")
    ks = sorted(z)
    if ks != list(range(ks[0], ks[-1] + 1)):
        raise ValueError("sequence must cover consecutive dimensions")
    return moments_from_zeta_logs(z)


def forward_zeta_logs(lams_spin: Sequence[complex], ks: Sequence[int], jmax: int | None = None) -> dict[int, float]:
    """Exact ``log|R_k(k/2)|`` for a finite spin measure (one atom per length)."""
    lam = np.asarray(lams_spin, dtype=complex)
    return {int(k): math.fsum(np.log(np.abs(1 - np.exp(-k * lam / 2)))) for k in ks}


# ---------------------------------------------------------------------------
# measure recovery


def recover_measure(moments: Mapping[int, float], B: int, *, rank_tol: float = 1e-10) -> MeasureEstimate:
    """Recover the symmetrised measure from consecutive moments (matrix pencil).

    Parameters
    ----------
    moments : mapping k -> M_k
        Consecutive moments; ``M_k = sum_nu w^-k`` over the symmetrised measure
        ``nu = mu + conj(mu)``.
    B : int
        Maximal number of distinct atoms of ``nu``.
    rank_tol : float
        Relative singular-value threshold for the model order.

    Returns
    -------
    MeasureEstimate
        Atoms ``(z, weight)`` with ``z`` closed under conjugation; weights
        are the fitted (real) multiplicities in ``nu``.

    Raises
    ------
    ValueError
        With fewer than ``2 B + 2`` consecutive moments.
    """
    ks = sorted(moments)
    if ks and ks != list(range(ks[0], ks[0] + len(ks))):
        raise ValueError("moments must be consecutive")
    need = 2 * B + 2
    if len(ks) < need:
        raise ValueError(f"need at least {need} consecutive moments for B = {B}, got {len(ks)}")
    y = np.array([moments[k] for k in ks], dtype=float)
    k0 = ks[0]
    N = len(y)
    scale = np.max(np.abs(y)) if np.any(y) else 1.0
    if scale == 0:
        return MeasureEstimate((), True, 0.0, ())
    ys = y / scale
    Lp = N // 2
    H = np.array([[ys[i + j] for j in range(Lp + 1)] for i in range(N - Lp)])
    U, sv, Vh = np.linalg.svd(H, full_matrices=False)
    r = int(np.sum(sv > rank_tol * sv[0]))
    r = min(r, B)
    if r == 0:
        return MeasureEstimate((), True, 0.0, tuple(sv))
    V = Vh[:r].conj().T
    V1, V2 = V[:-1], V[1:]
    x = np.linalg.eigvals(np.linalg.pinv(V1) @ V2)  # nodes 1/z
    # weights by least squares on y_k = sum c_i x_i^k
    kk = np.asarray(ks, dtype=float)
    Vand = x[None, :] ** kk[:, None]
    c, *_ = np.linalg.lstsq(Vand, y.astype(complex), rcond=None)
    resid = float(np.max(np.abs(Vand @ c - y)) / max(np.max(np.abs(y)), 1e-300))
    atoms = [(1 / xi, ci) for xi, ci in zip(x, c)]
    atoms = _symmetrize(atoms)
    return MeasureEstimate(tuple(atoms), True, resid, tuple(float(s) for s in sv))


def _symmetrize(atoms: list[tuple[complex, complex]], tol: float = 1e-6) -> list[tuple[complex, float]]:
    """Average conjugate partners so that the atom set is conjugation-closed."""
    atoms = [(complex(z), complex(c)) for z, c in atoms]
    used = [False] * len(atoms)
    out = []
    for i, (z, c) in enumerate(atoms):
        if used[i]:
            continue
        used[i] = True
        if abs(z.imag) <= tol * max(1.0, abs(z)):
            out.append((complex(z.real, 0.0), float(c.real)))
            continue
        best, bd = None, math.inf
        for j in range(len(atoms)):
            if not used[j]:
                d = abs(atoms[j][0] - z.conjugate())
                if d < bd:
                    best, bd = j, d
        if best is not None and bd <= 1e-3 * max(1.0, abs(z)):
            used[best] = True
            zz = (z + atoms[best][0].conjugate()) / 2
            cc = float((c.real + atoms[best][1].real) / 2)
            out.append((zz, cc))
            out.append((zz.conjugate(), cc))
        else:
            out.append((z, float(c.real)))
            out.append((z.conjugate(), float(c.real)))
    out.sort(key=lambda t: (round(abs(t[0]), 9), round(t[0].imag, 9)))
    return out


def symmetrized_locations(mu: SpectrumMeasure) -> list[tuple[complex, float]]:
    """Atoms of ``mu + conj(mu)`` as ``(location, multiplicity)``."""
    z = mu.locations()
    allz = np.concatenate([z, np.conj(z)])
    out: list[list] = []
    for w in sorted(allz, key=lambda t: (round(abs(t), 9), round(t.imag, 9))):
        if out and abs(out[-1][0] - w) <= 1e-9 * max(1.0, abs(w)):
            out[-1][1] += 1
        else:
            out.append([complex(w), 1.0])
    return [(z, m) for z, m in out]


def compare_estimates(est: MeasureEstimate, truth: Sequence[tuple[complex, float]]) -> float:
    """Maximal location error under optimal matching (``inf`` on count mismatch)."""
    a = est.locations()
    b = np.array([z for z, _ in truth], dtype=complex)
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def cauchy_transform(atoms: Sequence[tuple[complex, float]], zeta: np.ndarray) -> np.ndarray:
    """``sum w / (z - zeta)`` over atoms ``(z, w)``."""
    zeta = np.asarray(zeta, dtype=complex)
    out = np.zeros_like(zeta)
    for z, w in atoms:
        out += w / (z - zeta)
    return out


def reconstruct_sequence(zlogs: Mapping[int, float], vol: float, anchors: Mapping[int, float],
                         ns: Sequence[int]) -> dict[int, float]:
    """Telescoping reconstruction of ``log|T_n|`` from anchors and zeta logs.

    Each anchor ``(n0, value)`` determines every ``n`` of the same parity
    through ``log|T_{k+1}| - log|T_{k-1}| = log|R_k(k/2)| - k vol / pi``.
    """
    out = {}
    for n in ns:
        src = [(n0, v) for n0, v in anchors.items() if (n0 - n) % 2 == 0]
        if not src:
            raise ValueError(f"no anchor of the parity of n = {n}")
        n0, v = src[0]
        acc = v
        if n >= n0:
            for m in range(n0, n, 2):
                acc += zlogs[m + 1] - (m + 1) * vol / math.pi
        else:
            for m in range(n, n0, 2):
                acc -= zlogs[m + 1] - (m + 1) * vol / math.pi
        out[n] = acc
    return out


def zeta_logs_from_estimate(est: MeasureEstimate, ks: Sequence[int]) -> dict[int, float]:
    """``log|R_k(k/2)|`` of ``mu`` from an estimate of ``mu + conj(mu)`` (half the symmetric sum)."""
    out = {}
    for k in ks:
        s = math.fsum(w * math.log(abs(1 - z ** (-k))) for z, w in est.atoms)
        out[int(k)] = s / 2
    return out


# ---------------------------------------------------------------------------
# isospectrality


def isospectral_up_to_conj(mu1: SpectrumMeasure, mu2: SpectrumMeasure, tol: float = 1e-6) -> tuple[bool, dict]:
    """Compare ``mu1 + conj(mu1)`` with ``mu2 + conj(mu2)``.

    Raises
    ------
    ValueError
        If the cutoffs differ.
    """
    if abs(mu1.cutoff - mu2.cutoff) > 1e-12:
        raise ValueError("cutoff mismatch")

    def sym(mu):
        lam = mu.lambdas()
        per = 4 * math.pi if mu.kind == "spin" else 2 * math.pi
        return np.array([_reduce_im(complex(l), per) for l in np.concatenate([lam, np.conj(lam)])])

    a, b = sym(mu1), sym(mu2)
    report = {"atoms": [int(a.size // 2), int(b.size // 2)], "max_distance": None}
    if a.size != b.size:
        return False, report
    if a.size == 0:
        report["max_distance"] = 0.0
        return True, report
    # sort-based matching (exact for well-separated atoms), with assignment as fallback
    ia = np.lexsort((a.imag, np.round(a.real, 8)))
    ib = np.lexsort((b.imag, np.round(b.real, 8)))
    d = np.abs(a[ia] - b[ib])
    dist = float(d.max())
    if dist > tol and a.size <= 4000:
        cost = np.abs(a[:, None] - b[None, :])
        r, c = linear_sum_assignment(cost)
        dist = float(cost[r, c].max())
    real_ok = bool(np.allclose(np.sort(a.real), np.sort(b.real), atol=tol, rtol=0))
    report["max_distance"] = dist
    report["real_lengths_equal"] = real_ok
    ok = dist <= tol
    if ok and not real_ok:
        raise AssertionError("symmetrised spectra agree but real length spectra differ")
    return ok, report


# ---------------------------------------------------------------------------
# Bergman-space operator


def psi_log_coefficients(J: int) -> np.ndarray:
    """Taylor coefficients ``psi_j = 1 / j`` of ``-log(1 - z)`` (index 0 unused)."""
    c = np.zeros(J + 1)
    c[1:] = 1.0 / np.arange(1, J + 1)
    return c


def bergman_truncation(psi: Sequence[float], R: float, N: int) -> dict:
    """Matrix of ``A_psi = I + B_psi`` on the first ``N`` orthonormal monomials of ``A^2(D_R)``.

    ``A_psi(z^n) = psi(z^n)`` for ``n >= 1``, ``A_psi(1) = 1``; in the basis
    ``phi_n = sqrt((n + 1) / pi) z^n / R^(n+1)`` the column ``n`` has entries
    ``psi_j sqrt((n + 1) / (n j + 1)) R^(n (j - 1))`` at rows ``n j``.

    Parameters
    ----------
    psi : sequence
        Taylor coefficients ``psi[j]`` (``psi[0] = 0``, ``psi[1] = 1``); missing
        coefficients are zero.
    R : float
        Radius, ``0 < R < 1``.
    N : int
        Truncation size.

    Returns
    -------
    dict
        ``matrix``, ``unit_lower_triangular``, ``hs_partial`` (cumulative
        ``sum_n ||B phi_n||^2`` over the truncated columns), ``hs_bound``
        (``2 / (R^2 (1 - R^2)) sum_{j >= 2} |psi_j|^2 R^(2j) / j``),
        ``sigma_min`` and ``first_offdiag_row`` per column.
    """
    if not 0 < R < 1:
        raise ValueError("R must satisfy 0 < R < 1")
    psi = np.asarray(psi, dtype=complex)
    if psi.size < 2 or abs(psi[0]) > 1e-14 or abs(psi[1] - 1) > 1e-14:
        raise ValueError("psi must satisfy psi(0) = 0 and psi'(0) = 1")
    A = np.eye(N, dtype=complex)
    for n in range(1, N):
        j = 2
        while n * j < N and j < psi.size:
            A[n * j, n] = psi[j] * math.sqrt((n + 1) / (n * j + 1)) * R ** (n * (j - 1))
            j += 1
    Bm = A - np.eye(N)
    col_norms = np.sum(np.abs(Bm) ** 2, axis=0)
    hs_partial = np.cumsum(col_norms)
    j = np.arange(2, psi.size)
    hs_bound = float(2 / (R ** 2 * (1 - R ** 2)) * np.sum(np.abs(psi[2:]) ** 2 * R ** (2 * j) / j))
    # tail of psi beyond the supplied coefficients is not included in the bound
    sv = np.linalg.svd(A, compute_uv=False)
    first = []
    for n in range(N):
        nz = np.nonzero(np.abs(Bm[:, n]) > 0)[0]
        first.append(int(nz[0]) if nz.size else None)
    return {
        "matrix": A,
        "unit_lower_triangular": bool(np.allclose(np.triu(A, 1), 0, atol=0) and np.all(np.diag(A) == 1)),
        "hs_partial": hs_partial,
        "hs_bound": hs_bound,
        "sigma_min": float(sv.min()),
        "first_offdiag_row": first,
    }


# ---------------------------------------------------------------------------
# volume oracle and reconstruction from a tail of the sequence


def lobachevsky(theta: float) -> float:
    """Lobachevsky function ``Lambda(theta) = (1/2) sum_{n>=1} sin(2 n theta) / n^2``.

    Evaluated through the Clausen function (mpmath), which sums the series
    to working precision.
    """
    import mpmath as mp

    with mp.workdps(30):
        return float(mp.clsin(2, 2 * mp.mpf(theta)) / 2)


def figure_eight_volume() -> float:
    """Volume of the figure-eight knot complement, two regular ideal tetrahedra: ``6 Lambda(pi / 3)``."""
    return 6 * lobachevsky(math.pi / 3)


def extend_downward(seq: TorsionSequence, vol: float, B: int, n_min: int = 4) -> dict[int, float]:
    """Reconstruct ``log|T_n|`` for ``n_min <= n`` from the entries of ``seq`` alone.

    The available consecutive entries give zeta logs, moments and (with at
    most ``B`` atoms in the symmetrised measure) a recovered measure; its
    zeta logs telescope the two smallest entries down to ``n_min``.

    Returns
    -------
    dict
        ``n -> log|T_n|`` for every ``n`` from ``n_min`` to the largest entry.
    """
    est = recover_measure(moments_from_torsion(seq, vol), B)
    ns = sorted(seq.entries)
    n0 = ns[0]
    anchors = {n0: seq.entries[n0], n0 + 1: seq.entries[n0 + 1]}
    zl = zeta_logs_from_estimate(est, range(n_min + 1, n0 + 1))
    zl.update(zeta_logs_from_torsion(seq, vol))
    out = reconstruct_sequence(zl, vol, anchors, range(n_min, n0))
    out.update({n: float(v) for n, v in seq.entries.items()})
    return dict(sorted(out.items()))
