"""Irreducible representations of SL(2, C) by symmetric powers.

The ``n``-dimensional representation acts on homogeneous polynomials of
degree ``n - 1`` in ``X, Y`` through the substitution

    X -> a11 X + a21 Y,    Y -> a12 X + a22 Y,

written in the monomial basis ``X^{n-1}, X^{n-2} Y, ..., Y^{n-1}``
(decreasing X-degree).  With this substitution ``sym_power(A @ B) ==
sym_power(A) @ sym_power(B)`` and ``sym_power(A, 2) == A``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import comb

TOL_DET = 1e-10


def as_sl2(A, tol_det: float = TOL_DET) -> np.ndarray:
    """Validate and return a complex 2x2 matrix of unit determinant.

    Raises
    ------
    ValueError
        If the shape is wrong or ``|det A - 1| > tol_det``.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {A.shape}")
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if abs(det - 1) > tol_det:
        raise ValueError(f"non-unimodular matrix: |det - 1| = {abs(det - 1):.3e}")
    return A


def _poly_power_table(c0: complex, c1: complex, m: int) -> list[np.ndarray]:
    """Coefficient arrays of (c0 X + c1 Y)^e for e = 0..m in decreasing X-degree."""
    out = [np.ones(1, dtype=complex)]
    lin = np.array([c0, c1], dtype=complex)
    for _ in range(m):
        out.append(np.convolve(out[-1], lin))
    return out


def sym_power(A, n: int, *, check: bool = True, tol_det: float = TOL_DET) -> np.ndarray:
    """Matrix of ``A`` on degree-``(n - 1)`` polynomials (the ``n``-dim irrep).

    Parameters
    ----------
    A : array_like, shape (2, 2)
        Unit-determinant complex matrix.
    n : int
        Representation dimension, ``n >= 1``.
    check : bool
        Validate the determinant of ``A``.

    Returns
    -------
    ndarray, shape (n, n)
        Column ``j`` holds the coefficients of ``A . X^{n-1-j} Y^j``.
    """
    if int(n) != n or n < 1:
        raise ValueError("dimension n must be a positive integer")
    n = int(n)
    A = as_sl2(A, tol_det) if check else np.asarray(A, dtype=complex)
    m = n - 1
    px = _poly_power_table(A[0, 0], A[1, 0], m)
    py = _poly_power_table(A[0, 1], A[1, 1], m)
    out = np.empty((n, n), dtype=complex)
    for j in range(n):
        out[:, j] = np.convolve(px[m - j], py[j])
    return out


def sym_power_mp(A, n: int, dps: int = 50):
    """Extended-precision variant of :func:`sym_power` using mpmath.

    Returns an ``mpmath.matrix``; same conventions as :func:`sym_power`.
    """
    import mpmath as mp

    with mp.workdps(dps):
        a = [[mp.mpc(A[i][j]) for j in range(2)] for i in range(2)]
        if abs(a[0][0] * a[1][1] - a[0][1] * a[1][0] - 1) > mp.mpf(TOL_DET):
            raise ValueError("non-unimodular matrix")
        m = n - 1

        def table(c0, c1):
            rows = [[mp.mpc(1)]]
            for _ in range(m):
                prev = rows[-1]
                nxt = [mp.mpc(0)] * (len(prev) + 1)
                for i, v in enumerate(prev):
                    nxt[i] += v * c0
                    nxt[i + 1] += v * c1
                rows.append(nxt)
            return rows

        px = table(a[0][0], a[1][0])
        py = table(a[0][1], a[1][1])
        out = mp.matrix(n, n)
        for j in range(n):
            p, q = px[m - j], py[j]
            for i1, v1 in enumerate(p):
                for i2, v2 in enumerate(q):
                    out[i1 + i2, j] += v1 * v2
        return out


def eigenvalue(A) -> complex:
    """An eigenvalue ``a`` of ``A`` with ``|a| >= 1`` (ties: ``Im`` log >= 0)."""
    A = np.asarray(A, dtype=complex)
    tr = A[0, 0] + A[1, 1]
    disc = np.sqrt(tr * tr - 4 + 0j)
    a = (tr + disc) / 2
    b = (tr - disc) / 2
    return a if abs(a) >= abs(b) else b


def character(A, n: int, *, parabolic_tol: float = 1e-6) -> complex:
    """Trace of ``sym_power(A, n)``.

    Uses the geometric sum ``sum_j a^{n-1-2j}`` over an eigenvalue ``a`` and
    falls back to the trace of the symmetric power when ``a`` is close to
    ``+-1`` (where the two eigenvalues merge).
    """
    if n < 1:
        raise ValueError("dimension n must be positive")
    a = eigenvalue(A)
    if abs(a - 1) < parabolic_tol or abs(a + 1) < parabolic_tol:
        return complex(np.trace(sym_power(A, n, check=False)))
    k = np.arange(n)
    return complex(np.sum(a ** (n - 1 - 2 * k)))


@lru_cache(maxsize=64)
def _pairing_cached(n: int) -> np.ndarray:
    m = n - 1
    phi = np.zeros((n, n), dtype=complex)
    for i in range(n):
        phi[i, m - i] = (-1) ** i / comb(m, i, exact=True)
    phi.setflags(write=False)
    return phi


def pairing_matrix(n: int) -> np.ndarray:
    """Invariant bilinear form ``det^{n-1}`` on degree-``(n - 1)`` polynomials.

    Normalized so that ``Phi(X^{n-1}, Y^{n-1}) = 1``.  Satisfies
    ``S.T @ Phi @ S == Phi`` for ``S = sym_power(A, n)``; symmetric for odd
    ``n`` and antisymmetric for even ``n``.
    """
    if int(n) != n or n < 1:
        raise ValueError("dimension n must be a positive integer")
    return _pairing_cached(int(n)).copy()


def random_sl2(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random unit-determinant complex matrix (Gaussian entries, rescaled)."""
    M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    M *= scale
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return M / np.sqrt(det)
