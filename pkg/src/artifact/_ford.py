"""Ford-domain enumeration of closed geodesics for one-cusped fixtures.

The holonomy is conjugated so that the cusp sits at infinity with
peripheral translations ``z -> z + alpha``, ``z -> z + beta``.  For an element
``g = [[A, B], [C, D]]`` with ``C != 0`` the isometric sphere has centre
``-D/C`` and radius ``1/|C|``.  The Ford domain ``F`` is the part of the
chimney over the lattice cell ``P`` lying above every isometric sphere.

Outline
-------
1. Double cosets ``Gamma_inf g Gamma_inf`` are enumerated by ``|C|`` with a
   breadth-first search seeded by the faces of ``F`` (complete because the
   face spheres cover the floor of the chimney).
2. Every loxodromic conjugacy class has a lift whose axis top lies in ``F``;
   the top height ``R`` is at least the lowest vertex height ``h_min`` of
   ``F``, which bounds ``|C| <= cosh(L/2) / h_min``.  All such lifts with
   ``Re lambda <= L`` are the *candidates*.
3. Candidates are grouped into conjugacy classes by walking the closed
   geodesic through ``F`` (crossing faces and re-reducing into ``F``) and
   collecting the lifts whose tops lie in ``F``.
4. Primality: lifts sharing an oriented axis are powers of a common
   primitive element; the one of least length is prime.

Group elements carry their SL(2, C) matrix under a fixed spin lift together
with a recipe for their word, so spin signs and words are exact.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import words as W
from .manifold import ManifoldData, SpinLift, cusp_frame, enumerate_spin_lifts

EPS_BOUNDARY = 1e-9


@dataclass
class _Elem:
    mat: np.ndarray          # SL(2, C) in the cusp frame (base lift)
    recipe: tuple            # ("word", word) or ("prod", left_t, sigma_id, mid_t, gamma_id, right_t)


class FordDomain:
    """Ford domain of a one-cusped fixture (see module docstring).

    Parameters
    ----------
    M : ManifoldData
        Fixture with exactly one cusp.
    base_lift : SpinLift, optional
        Lift used for the matrices carried by group elements; defaults to
        the first lift returned by :func:`enumerate_spin_lifts`.
    seed_depth : int
        Word length of the initial breadth-first search for face candidates.
    """

    def __init__(self, M: ManifoldData, base_lift: SpinLift | None = None, seed_depth: int = 6):
        if len(M.cusps) != 1:
            raise ValueError("Ford-domain enumeration requires exactly one cusp")
        self.M = M
        lifts = enumerate_spin_lifts(M)
        self.base_lift = base_lift or lifts[0]
        cusp = M.cusps[0]
        P = cusp_frame(M, cusp)
        Pi = np.linalg.inv(P)
        self.gens = [Pi @ m @ P for m in M.generator_matrices(self.base_lift)]
        self.gens_inv = [np.linalg.inv(g) for g in self.gens]
        A = self._eval(cusp.a_word)
        B = self._eval(cusp.b_word)
        self.sa = 1 if A[0, 0].real > 0 else -1
        self.sb = 1 if B[0, 0].real > 0 else -1
        self.alpha = complex(A[0, 1] / A[0, 0])
        self.beta = complex(B[0, 1] / B[0, 0])
        if abs((self.beta / self.alpha).imag) < 1e-9:
            raise ValueError("peripheral translations are not independent")
        lat = np.array([[self.alpha.real, self.beta.real], [self.alpha.imag, self.beta.imag]])
        self._latinv = np.linalg.inv(lat)
        self._tcache: dict = {}
        self.a_word = cusp.a_word
        self.b_word = cusp.b_word
        self.elems: list[_Elem] = []
        self._seed(seed_depth)

    # -- basic helpers ---------------------------------------------------
    def _eval(self, word) -> np.ndarray:
        out = np.eye(2, dtype=complex)
        for x in word:
            out = out @ (self.gens[x - 1] if x > 0 else self.gens_inv[-x - 1])
        return out

    def coords(self, z):
        if isinstance(z, (complex, float, np.complexfloating, np.floating)):
            z = complex(z)
            L = self._latinv
            return (L[0, 0] * z.real + L[0, 1] * z.imag, L[1, 0] * z.real + L[1, 1] * z.imag)
        z = np.asarray(z, dtype=complex)
        s = self._latinv[0, 0] * z.real + self._latinv[0, 1] * z.imag
        t = self._latinv[1, 0] * z.real + self._latinv[1, 1] * z.imag
        return s, t

    def reduce_shift(self, z):
        """Lattice shift ``(i, j)`` moving ``z`` into the cell ``[-1/2, 1/2)^2``."""
        s, t = self.coords(z)
        return -np.floor(s + 0.5 + EPS_BOUNDARY).astype(int), -np.floor(t + 0.5 + EPS_BOUNDARY).astype(int)

    def shift(self, i, j):
        return i * self.alpha + j * self.beta

    def T(self, i: int, j: int) -> np.ndarray:
        """SL(2, C) matrix of ``a^i b^j`` in the cusp frame."""
        key = (i, j)
        out = self._tcache.get(key)
        if out is None:
            s = (self.sa ** (i % 2)) * (self.sb ** (j % 2))
            out = s * np.array([[1, self.shift(i, j)], [0, 1]], dtype=complex)
            out.setflags(write=False)
            if len(self._tcache) < 100000:
                self._tcache[key] = out
        return out

    def t_word(self, i: int, j: int) -> W.Word:
        return W.multiply(W.power(self.a_word, i), W.power(self.b_word, j))

    def word(self, idx: int) -> W.Word:
        """Word of stored element ``idx`` (reconstructed from its recipe)."""
        rec = self.elems[idx].recipe
        if rec[0] == "word":
            return rec[1]
        _, lt, sid, mt, gid, rt = rec
        return W.multiply(self.t_word(*lt), self.word(sid), self.t_word(*mt), self.word(gid), self.t_word(*rt))

    def _add(self, mat, recipe) -> int:
        self.elems.append(_Elem(mat, recipe))
        return len(self.elems) - 1

    def _normalize(self, g):
        """Left/right translations putting ``A/C`` and ``D/C`` into the cell."""
        C = g[1, 0]
        i1, j1 = self.reduce_shift(g[0, 0] / C)
        g = self.T(int(i1), int(j1)) @ g
        i2, j2 = self.reduce_shift(g[1, 1] / g[1, 0])
        g = g @ self.T(int(i2), int(j2))
        return g, (int(i1), int(j1)), (int(i2), int(j2))

    @staticmethod
    def _dkey(g):
        C = g[1, 0]
        v = np.array([g[0, 0] / C, g[1, 1] / C, C * C])
        r = np.round(np.concatenate([v.real, v.imag]) * 1e7).astype(np.int64)
        return tuple(r)

    # -- faces -------------------------------------------------------------
    def _seed(self, depth: int):
        """Word search for double-coset representatives, then face selection."""
        ng = len(self.gens)
        seen = {}
        frontier = [((), np.eye(2, dtype=complex))]
        visited = {self._pkey(np.eye(2))}
        reps = {}
        for _ in range(depth):
            nxt = []
            for w, g in frontier:
                for x in list(range(1, ng + 1)) + list(range(-ng, 0)):
                    if w and w[-1] == -x:
                        continue
                    h = g @ (self.gens[x - 1] if x > 0 else self.gens_inv[-x - 1])
                    k = self._pkey(h)
                    if k in visited:
                        continue
                    visited.add(k)
                    nw = w + (x,)
                    nxt.append((nw, h))
                    if abs(h[1, 0]) > 1e-9:
                        hn, lt, rt = self._normalize(h)
                        dk = self._dkey(hn)
                        if dk not in reps:
                            reps[dk] = (hn, W.multiply(self.t_word(*lt), nw, self.t_word(*rt)))
            frontier = nxt
        del seen
        items = sorted(reps.values(), key=lambda t: abs(t[0][1, 0]))
        # smallest |C| threshold whose spheres cover the chimney floor
        cvals = sorted({round(abs(m[1, 0]), 9) for m, _ in items})
        chosen = None
        for cmax in cvals:
            S = [(m, w) for m, w in items if abs(m[1, 0]) <= cmax + 1e-9]
            if self._covers(S):
                chosen = S
                break
        if chosen is None:
            raise RuntimeError("word search too shallow: isometric spheres do not cover the cusp cell")
        self.face_ids = [self._add(m, ("word", w)) for m, w in chosen]
        self._build_faces()
        h = self.hmin
        # every sphere of radius >= h_min must be a face candidate
        X = 1.0 / h + 1e-9
        found = self._dcoset_bfs(X)
        self.face_ids = [i for i in found if abs(self.elems[i].mat[1, 0]) <= X]
        self._build_faces()
        if self.hmin < h - 1e-9:
            raise RuntimeError("Ford domain refinement failed to stabilize")

    def _covers(self, S, grid: int = 48) -> bool:
        cs = np.array([-m[1, 1] / m[1, 0] for m, _ in S])
        rs = np.array([1 / abs(m[1, 0]) for m, _ in S])
        u = (np.arange(grid) + 0.5) / grid - 0.5
        ss, tt = np.meshgrid(u, u)
        pts = (ss * self.alpha + tt * self.beta).ravel()
        shifts = np.array([self.shift(i, j) for i in range(-2, 3) for j in range(-2, 3)])
        cc = (cs[:, None] + shifts[None, :]).ravel()
        rr = np.repeat(rs, len(shifts))
        d = np.abs(pts[:, None] - cc[None, :]) ** 2 - rr[None, :] ** 2
        return bool(np.all(d.min(axis=1) < -1e-6))

    def _build_faces(self, pad: float = 0.05):
        fc, fr, fel, fid = [], [], [], []
        for idx in self.face_ids:
            g = self.elems[idx].mat
            c = -g[1, 1] / g[1, 0]
            r = 1 / abs(g[1, 0])
            s0, t0 = self.coords(c)
            ri = r * np.linalg.norm(self._latinv[0]) + pad
            rj = r * np.linalg.norm(self._latinv[1]) + pad
            for i in range(math.floor(-0.5 - s0 - ri), math.ceil(0.5 - s0 + ri) + 1):
                for j in range(math.floor(-0.5 - t0 - rj), math.ceil(0.5 - t0 + rj) + 1):
                    cc = c + self.shift(i, j)
                    s, t = self.coords(cc)
                    # keep spheres meeting the closed cell (plus padding)
                    ds = max(abs(s) - 0.5, 0.0)
                    dt = max(abs(t) - 0.5, 0.0)
                    if abs(ds * self.alpha + dt * self.beta) <= r + pad or (ds == 0 and dt == 0):
                        fc.append(cc)
                        fr.append(r)
                        fel.append(g @ self.T(-i, -j))
                        fid.append((idx, -i, -j))
        self.FC = np.array(fc)
        self.FR = np.array(fr)
        self.FEL = fel
        self.FID = fid
        self.hmin = self._hmin()

    def _hmin(self) -> float:
        cs, rs = self.FC, self.FR
        n = len(cs)
        best = math.inf
        P = np.stack([cs.real, cs.imag], 1)
        for a in range(n):
            for b in range(a + 1, n):
                if abs(cs[a] - cs[b]) >= rs[a] + rs[b]:
                    continue
                cidx = np.arange(b + 1, n)
                ok = (np.abs(cs[cidx] - cs[a]) < rs[a] + rs[cidx]) & (np.abs(cs[cidx] - cs[b]) < rs[b] + rs[cidx])
                for c in cidx[ok]:
                    Mx = 2 * np.array([P[b] - P[a], P[c] - P[a]])
                    if abs(np.linalg.det(Mx)) < 1e-12:
                        continue
                    rhs = np.array([rs[a] ** 2 - rs[b] ** 2 - P[a] @ P[a] + P[b] @ P[b],
                                    rs[a] ** 2 - rs[c] ** 2 - P[a] @ P[a] + P[c] @ P[c]])
                    xy = np.linalg.solve(Mx, rhs)
                    h2 = rs[a] ** 2 - np.sum((xy - P[a]) ** 2)
                    if h2 <= 0:
                        continue
                    z = xy[0] + 1j * xy[1]
                    s, t = self.coords(z)
                    if abs(s) > 0.5 + 1e-9 or abs(t) > 0.5 + 1e-9:
                        continue
                    d2 = np.abs(cs - z) ** 2 + h2 - rs ** 2
                    if np.any(d2 < -1e-9):
                        continue
                    best = min(best, math.sqrt(h2))
        if not math.isfinite(best):
            raise RuntimeError("no Ford-domain vertices found")
        return best

    # -- double cosets -------------------------------------------------------
    def lattice_disk(self, z0: complex, rho: float):
        """Lattice points ``(i, j)`` with ``|z0 + i alpha + j beta| <= rho``."""
        s0, t0 = self.coords(z0)
        si = rho * np.linalg.norm(self._latinv[0])
        ti = rho * np.linalg.norm(self._latinv[1])
        I = np.arange(math.ceil(-s0 - si), math.floor(-s0 + si) + 1)
        J = np.arange(math.ceil(-t0 - ti), math.floor(-t0 + ti) + 1)
        if I.size == 0 or J.size == 0:
            return np.zeros((0, 2), dtype=int)
        II, JJ = np.meshgrid(I, J, indexing="ij")
        II, JJ = II.ravel(), JJ.ravel()
        ok = np.abs(z0 + II * self.alpha + JJ * self.beta) <= rho * (1 + 1e-9)
        return np.stack([II[ok], JJ[ok]], 1)

    def _dcoset_bfs(self, X: float) -> list[int]:
        """All double cosets with ``|C| <= X``, as element ids."""
        S = list(self.face_ids)
        found = {}
        level = []
        for i in S:
            k = self._dkey(self.elems[i].mat)
            if k not in found:
                found[k] = i
                level.append(i)
        while level:
            new = []
            for gid in level:
                g = self.elems[gid].mat
                C = g[1, 0]
                a = g[0, 0] / C
                for sid in S:
                    s = self.elems[sid].mat
                    Cs = s[1, 0]
                    rho = X / (abs(C) * abs(Cs))
                    pts = self.lattice_disk(a + s[1, 1] / Cs, rho)
                    for i, j in pts:
                        i, j = int(i), int(j)
                        h = s @ self.T(i, j) @ g
                        if abs(h[1, 0]) < 1e-9 or abs(h[1, 0]) > X * (1 + 1e-9):
                            continue
                        hn, lt, rt = self._normalize(h)
                        k = self._dkey(hn)
                        if k in found:
                            continue
                        idx = self._add(hn, ("prod", lt, sid, (i, j), gid, rt))
                        found[k] = idx
                        new.append(idx)
            level = new
        return list(found.values())

    # -- geometry of axes ----------------------------------------------------
    @staticmethod
    def _pkey(g):
        tr = g[0, 0] + g[1, 1]
        if tr.real < -1e-9 or (abs(tr.real) <= 1e-9 and tr.imag < -1e-9) or (abs(tr) <= 1e-9 and g[0, 0].real < 0):
            g = -g
        v = np.asarray(g).ravel()
        return tuple(np.round(np.concatenate([v.real, v.imag]) * 1e6).astype(np.int64))

    @staticmethod
    def axis(g):
        """(repelling, attracting) fixed points of a loxodromic with ``C != 0``."""
        A, C, D = g[0, 0], g[1, 0], g[1, 1]
        tr = A + D
        sq = cmath.sqrt(tr * tr - 4)
        z1 = ((A - D) + sq) / (2 * C)
        z2 = ((A - D) - sq) / (2 * C)
        if abs(C * z1 + D) > 1:
            return z2, z1
        return z1, z2

    def top_key(self, g):
        """Key of the lift conjugated so that its axis top lies over the cell."""
        e1, e2 = self.axis(g)
        i, j = self.reduce_shift((e1 + e2) / 2)
        E = self.T(int(i), int(j))
        return self._pkey(E @ g @ _inv2(E))

    def axis_key(self, g):
        e1, e2 = self.axis(g)
        i, j = self.reduce_shift((e1 + e2) / 2)
        sh = self.shift(int(i), int(j))
        v = np.array([e1 + sh, e2 + sh])
        return tuple(np.round(np.concatenate([v.real, v.imag]) * 1e6).astype(np.int64))

    def interval(self, e1, e2):
        """Parameter interval of the axis inside ``F`` (``c = cos`` of the angle)."""
        m = (e1 + e2) / 2
        R = abs(e2 - e1) / 2
        u = (e2 - e1) / (2 * R)
        dm = m - self.FC
        c0 = np.abs(dm) ** 2 + R * R - self.FR ** 2
        c1 = 2 * R * (dm * np.conj(u)).real
        lo, hi = -1.0, 1.0
        lo_w, hi_w = None, None
        degenerate = (np.abs(c1) < 1e-9 * R) & (np.abs(c0) < 1e-9 * max(1.0, R * R))
        flat = (np.abs(c1) < 1e-15) & ~degenerate
        if np.any(flat & (c0 < 0)):
            return None
        act = ~degenerate & ~flat
        with np.errstate(divide="ignore", invalid="ignore"):
            b = -c0 / c1
        pos = act & (c1 > 0)
        neg = act & (c1 < 0)
        if np.any(pos):
            k = int(np.argmax(np.where(pos, b, -np.inf)))
            if b[k] > lo:
                lo, lo_w = float(b[k]), ("sph", k)
        if np.any(neg):
            k = int(np.argmin(np.where(neg, b, np.inf)))
            if b[k] < hi:
                hi, hi_w = float(b[k]), ("sph", k)
        sm, tm = self.coords(m)
        su, tu = self.coords(R * u)
        for ax, (a0, a1) in enumerate(((float(sm), float(su)), (float(tm), float(tu)))):
            if abs(a1) < 1e-15:
                continue
            for side in (-0.5, 0.5):
                bb = (side - a0) / a1
                sgn = 1 if side > 0 else -1
                upper = (side > 0) == (a1 > 0)
                if upper:
                    if bb < hi:
                        hi, hi_w = bb, ("wall", ax, sgn)
                else:
                    if bb > lo:
                        lo, lo_w = bb, ("wall", ax, sgn)
        return lo, hi, lo_w, hi_w

    def top_in_F(self, g, tol: float = 1e-9) -> bool:
        e1, e2 = self.axis(g)
        m = (e1 + e2) / 2
        R = abs(e2 - e1) / 2
        return bool(np.all(np.abs(m - self.FC) ** 2 + R * R - self.FR ** 2 >= -tol))

    @staticmethod
    def _act(E, z, h):
        a, b, c, d = E[0, 0], E[0, 1], E[1, 0], E[1, 1]
        den = abs(c * z + d) ** 2 + abs(c) ** 2 * h * h
        return ((a * z + b) * np.conj(c * z + d) + a * np.conj(c) * h * h) / den, h / den

    def reduce_point(self, z, h):
        """Element ``E`` and image ``E(z, h)`` lying in the closed domain ``F``."""
        E = np.eye(2, dtype=complex)
        for _ in range(10000):
            s, t = self.coords(z)
            i = -math.floor(s + 0.5) if abs(s) > 0.5 + 1e-10 else 0
            j = -math.floor(t + 0.5) if abs(t) > 0.5 + 1e-10 else 0
            if i or j:
                z = z + self.shift(i, j)
                E = self.T(i, j) @ E
            d = np.abs(z - self.FC) ** 2 + h * h - self.FR ** 2
            k = int(np.argmin(d))
            if d[k] < -1e-10 * max(1.0, self.FR[k] ** 2):
                z, h = self._act(self.FEL[k], z, h)
                E = self.FEL[k] @ E
            else:
                return z, h, E
        raise RuntimeError("point reduction did not terminate")

    def boundary_images(self, g, tol: float = 1e-8):
        """Conjugates of ``g`` whose axis tops are boundary-identified with ``g``'s.

        A top lying on a face of ``F`` (or on a wall of the cell) is equivalent
        under the face pairing to a top on the paired face; all such lifts
        are returned (including ``g`` itself).
        """
        out = [g]
        seen = {self._pkey(g)}
        stack = [g]
        while stack:
            cur = stack.pop()
            e1, e2 = self.axis(cur)
            z = (e1 + e2) / 2
            h = abs(e2 - e1) / 2
            moves = []
            d = np.abs(z - self.FC) ** 2 + h * h - self.FR ** 2
            for k in np.nonzero(np.abs(d) <= tol * np.maximum(1.0, self.FR ** 2))[0]:
                moves.append(self.FEL[int(k)])
            s, t = self.coords(z)
            for ax, val in ((0, float(s)), (1, float(t))):
                if abs(abs(val) - 0.5) <= tol:
                    sgn = 1 if val > 0 else -1
                    moves.append(self.T(-sgn, 0) if ax == 0 else self.T(0, -sgn))
            if abs(abs(float(s)) - 0.5) <= tol and abs(abs(float(t)) - 0.5) <= tol:
                moves.append(self.T(-int(np.sign(s)), -int(np.sign(t))))
            for E in moves:
                nxt = E @ cur @ _inv2(E)
                if not self.top_in_F(nxt, tol=1e-7):
                    continue
                k = self._pkey(nxt)
                if k not in seen:
                    seen.add(k)
                    out.append(nxt)
                    stack.append(nxt)
        return out

    def walk(self, g, max_steps: int = 100000):
        """Follow the closed geodesic of ``g`` through ``F``.

        Returns
        -------
        tops : list of ndarray
            Lifts (conjugates of ``g``) whose axis tops lie in ``F``, one per
            passage of the geodesic through its top.
        total : float
            Accumulated length (equals ``Re lambda(g)``).
        """
        ell = complex_length_psl(g).real
        cur = g
        tops = []
        total = 0.0
        e1, e2 = self.axis(cur)
        iv = self.interval(e1, e2)
        c_in = iv[0]
        for _ in range(max_steps):
            if total > ell - 1e-7:
                return tops, total
            e1, e2 = self.axis(cur)
            lo, hi, lo_w, hi_w = self.interval(e1, e2)
            c_a = c_in
            if hi < c_a:
                hi = c_a
            # the top (c = 0) belongs to the half-open segment [c_a, hi)
            if c_a - 1e-9 <= 0 < hi - 1e-9 or (abs(c_a) <= 1e-9 and abs(hi) <= 1e-9):
                tops.append(cur)
            total += 0.5 * math.log(((1 - c_a) * (1 + hi)) / ((1 + c_a) * (1 - hi)))
            R = abs(e2 - e1) / 2
            m = (e1 + e2) / 2
            u = (e2 - e1) / (2 * R)
            z = m + R * hi * u
            h = R * math.sqrt(max(0.0, 1 - hi * hi))
            if hi_w[0] == "wall":
                _, ax, sgn = hi_w
                E = self.T(-sgn, 0) if ax == 0 else self.T(0, -sgn)
            else:
                E = self.FEL[hi_w[1]]
            z, h = self._act(E, z, h)
            z, h, E2 = self.reduce_point(z, h)
            E = E2 @ E
            cur = E @ cur @ _inv2(E)
            e1, e2 = self.axis(cur)
            m = (e1 + e2) / 2
            R = abs(e2 - e1) / 2
            u = (e2 - e1) / (2 * R)
            c_in = float(((z - m) * np.conj(u)).real / R)
        raise RuntimeError("geodesic walk did not close")

    # -- enumeration ---------------------------------------------------------
    def candidates(self, L: float, dcosets: list[int]):
        """Lifts with axis top in ``F`` and ``Re lambda <= L``.

        Returns list of (matrix, recipe-for-word) with the matrix in SL(2, C)
        under the base lift.
        """
        tmax = 2 * math.cosh(L / 2)
        out = []
        for gid in dcosets:
            g0 = self.elems[gid].mat
            C, A0, D0 = g0[1, 0], g0[0, 0], g0[1, 1]
            pts = self.lattice_disk((A0 + D0) / C, tmax / abs(C))
            if len(pts) == 0:
                continue
            k = pts[:, 0] * self.alpha + pts[:, 1] * self.beta
            center = (A0 - D0) / (2 * C) + k / 2
            ni, nj = self.reduce_shift(center)
            ni, nj = -ni, -nj
            mi, mj = pts[:, 0] - ni, pts[:, 1] - nj
            for q in range(len(pts)):
                g = self.T(int(mi[q]), int(mj[q])) @ g0 @ self.T(int(ni[q]), int(nj[q]))
                tr = g[0, 0] + g[1, 1]
                if abs(tr.imag) < 1e-9 and abs(tr.real) <= 2 + 1e-9:
                    continue
                R = abs(cmath.sqrt(tr * tr - 4)) / (2 * abs(C))
                if R < self.hmin - 1e-9:
                    continue
                lam = complex_length_psl(g)
                if lam.real > L:
                    continue
                if not self.top_in_F(g):
                    continue
                out.append((g, (gid, (int(mi[q]), int(mj[q])), (int(ni[q]), int(nj[q])))))
        return out

    def candidate_word(self, recipe) -> W.Word:
        gid, lt, rt = recipe
        return W.multiply(self.t_word(*lt), self.word(gid), self.t_word(*rt))

    def enumerate(self, L: float):
        """Conjugacy classes of loxodromics with ``Re lambda <= L``.

        Returns
        -------
        list of dict
            keys: ``matrix`` (SL(2, C) under the base lift, cusp frame),
            ``word``, ``ntops``, ``prime``.
        """
        X = math.cosh(L / 2) / self.hmin * (1 + 1e-9)
        dcs = self._dcoset_bfs(X)
        cands = self.candidates(L, dcs)
        index = {}
        for n, (g, _) in enumerate(cands):
            index.setdefault(self.top_key(g), n)
        parent = list(range(len(cands)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        walked = set()
        for n, (g, _) in enumerate(cands):
            if find(n) in walked:
                continue
            tops, _ = self.walk(g)
            for t in tops:
                for b in self.boundary_images(t):
                    m = index.get(self.top_key(b))
                    if m is not None:
                        parent[find(m)] = find(n)
            walked.add(find(n))
        groups: dict = {}
        for n in range(len(cands)):
            groups.setdefault(find(n), []).append(n)
        # primality: a lift sharing its oriented axis with a shorter lift is a
        # proper power (powers of a lift with top in F are themselves candidates)
        lam = [complex_length_psl(g) for g, _ in cands]
        axis_min: dict = {}
        akeys = []
        for n, (g, _) in enumerate(cands):
            k = self.axis_key(g)
            akeys.append(k)
            axis_min[k] = min(axis_min.get(k, math.inf), lam[n].real)
        classes = []
        for members in groups.values():
            n0 = min(members)
            g, rec = cands[n0]
            prime = all(lam[m].real <= axis_min[akeys[m]] + 1e-9 for m in members)
            classes.append({"matrix": g, "recipe": rec, "ntops": len(members),
                            "lambda": lam[n0], "prime": prime})
        for c in classes:
            c["word"] = self.candidate_word(c.pop("recipe"))
        self.stats = {"double_cosets": len(dcs), "candidates": len(cands), "classes": len(classes),
                      "hmin": self.hmin, "faces": len(self.face_ids)}
        return classes


def _inv2(g: np.ndarray) -> np.ndarray:
    """Inverse of a unit-determinant 2x2 matrix."""
    return np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]])


def complex_length_psl(g) -> complex:
    """Complex length with ``Re > 0`` and ``Im`` in ``(-pi, pi]`` of a loxodromic."""
    tr = g[0, 0] + g[1, 1]
    lam = 2 * cmath.acosh(tr / 2)
    if lam.real < 0:
        lam = -lam
    im = math.remainder(lam.imag, 2 * math.pi)
    if im <= -math.pi + 1e-9:
        im += 2 * math.pi
    return complex(lam.real, im)
