"""Truncated twisted Ruelle zeta functions over a spectrum measure.

``R_k(s) = prod_phi (1 - sigma_k(phi) exp(-s l(phi)))`` with
``sigma_k(phi) = exp(i k Im lam(phi) / 2)``, and

``R_{rho_n}(s) = prod_phi det(I - rho_n(phi) exp(-s l(phi)))``

over prime atoms ``phi``.  For odd ``k`` the character ``sigma_k`` depends on
the spin length; for even ``k`` it is well defined on PSL lengths.  Every
product is accumulated as a compensated sum of principal logarithms.

Tail bounds use ``#{l(phi) <= t} <= C exp(2 t)``: a factor ``1 - w`` with
``|w| <= exp(-a l)`` satisfies ``|log|1 - w|| <= -log(1 - |w|)``, so the
missing factors contribute at most
``(C a exp((2 - a) L) / (a - 2) - P(L) exp(-a L)) / (1 - exp(-a L))``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .repn import sym_power
from .spectrum import SpectrumMeasure, default_growth_constant, integrate, prime_count, tail_bound_exponential


@dataclass(frozen=True)
class ZetaValue:
    """Truncated zeta value.

    Attributes
    ----------
    value : complex
        Truncated product.
    log_abs : float
        ``log|value|`` accumulated in log space.
    truncation_cutoff : float
        Length cutoff ``L`` of the measure.
    tail_bound : float
        Bound on ``|log|R| - log_abs|`` from atoms beyond the cutoff
        (``inf`` outside the convergence region or for incomplete measures).
    arg : float
        Sum of the principal arguments of the factors.
    """

    value: complex
    log_abs: float
    truncation_cutoff: float
    tail_bound: float
    arg: float = 0.0

    def as_dict(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "log_abs": self.log_abs,
                "arg": self.arg, "cutoff": self.truncation_cutoff,
                "tail_bound": None if not math.isfinite(self.tail_bound) else float(self.tail_bound)}


def _sum_logs(factors: np.ndarray) -> tuple[float, float]:
    f = np.asarray(factors, dtype=complex).ravel()
    keep = np.abs(f - 1) >= 1e-15
    lg = np.log(f[keep])
    return math.fsum(lg.real), math.fsum(lg.imag)


def _value(log_abs: float, arg: float) -> complex:
    return cmath.exp(complex(log_abs, arg)) if log_abs > -700 else 0j


def _tail(mu: SpectrumMeasure, a: float, C: float | None, strict: bool) -> float:
    if not mu.complete:
        warnings.warn("incomplete spectrum: tail bound is infinite", RuntimeWarning, stacklevel=3)
        return math.inf
    if a <= 2:
        msg = "evaluation point outside the guaranteed convergence region"
        if strict:
            raise ValueError(msg)
        warnings.warn(msg + ": tail bound is infinite", RuntimeWarning, stacklevel=3)
        return math.inf
    Cg = default_growth_constant(mu) if C is None else float(C)
    K = 1.0 / (1.0 - math.exp(-a * mu.cutoff)) if mu.cutoff > 0 else math.inf
    return tail_bound_exponential(a, mu.cutoff, Cg, K, prime_count(mu))


def sigma_character(mu: SpectrumMeasure, k: int) -> np.ndarray:
    """``sigma_k = exp(i k Im lam / 2)`` for every prime atom."""
    if k % 2 and mu.kind != "spin":
        raise ValueError("odd k requires a spin measure")
    lam = mu.lambdas()
    return np.exp(0.5j * k * lam.imag)


def ruelle_sigma(mu: SpectrumMeasure, k: int, s: complex, *, C: float | None = None,
                 strict: bool = False) -> ZetaValue:
    """Truncated ``R_k(s)``.

    Parameters
    ----------
    mu : SpectrumMeasure
        Spin measure (any ``k``) or psl measure (even ``k``).
    k : int
    s : complex
        Evaluation point; the tail bound is finite for ``Re s > 2``.
    C : float, optional
        Growth constant for the tail bound.
    strict : bool
        Raise instead of warning outside the convergence region.
    """
    s = complex(s)
    lam = mu.lambdas()
    w = sigma_character(mu, k) * np.exp(-s * lam.real)
    la, arg = _sum_logs(1 - w)
    tb = _tail(mu, s.real, C, strict)
    return ZetaValue(_value(la, arg), la, mu.cutoff, tb, arg)


def log_ruelle_at_half(mu: SpectrumMeasure, k: int, *, C: float | None = None) -> float:
    """``log|R_k(k / 2)|`` as the integral of ``log|1 - z^-k|`` against the spin measure.

    For a psl measure ``k`` must be even and the integrand ``log|1 - z^-(k/2)|``
    of the psl atoms is used (same factors).  Thresholds are those of
    :func:`artifact.spectrum.integrate` (spin ``k >= 5``; psl ``k / 2 >= 3``).
    """
    if mu.kind == "spin":
        return integrate(mu, "log_abs_one_minus", k, C=C).value.real
    if k % 2:
        raise ValueError("odd k requires a spin measure")
    return integrate(mu, "log_abs_one_minus", k // 2, C=C).value.real


def log_ruelle_at_half_with_tail(mu: SpectrumMeasure, k: int, *, C: float | None = None) -> tuple[float, float]:
    """``(log|R_k(k/2)|, tail bound)`` via the integral route."""
    if mu.kind == "spin":
        r = integrate(mu, "log_abs_one_minus", k, C=C)
    else:
        if k % 2:
            raise ValueError("odd k requires a spin measure")
        r = integrate(mu, "log_abs_one_minus", k // 2, C=C)
    return r.value.real, r.tail_bound


def weights(n: int) -> np.ndarray:
    """Weights ``n - 1 - 2j``, ``j = 0..n-1``, of the ``n``-dimensional representation."""
    return n - 1 - 2 * np.arange(n)


def rho_factor_eigen(lam_spin: complex, n: int, s: complex) -> complex:
    """``det(I - rho_n e^{-s l})`` from the eigenvalues ``exp(w lam / 2)``."""
    l = lam_spin.real
    out = 1 + 0j
    for wt in weights(n):
        out *= 1 - cmath.exp(wt * lam_spin / 2 - s * l)
    return out


def rho_factor_det(A: np.ndarray, n: int, s: complex, l: float) -> complex:
    """``det(I - rho_n(A) e^{-s l})`` by a dense determinant."""
    S = sym_power(A, n, check=False)
    return complex(np.linalg.det(np.eye(n) - S * cmath.exp(-s * l)))


def ruelle_rho_n(mu: SpectrumMeasure, n: int, s: complex, *, C: float | None = None,
                 strict: bool = False, check: bool = True, check_tol: float = 1e-9) -> ZetaValue:
    """Truncated ``R_{rho_n}(s)`` over the prime atoms.

    The product is accumulated from the eigenvalue factorisation
    ``prod_j (1 - exp((n - 1 - 2j) lam / 2 - s l))``; with ``check`` each
    factor is compared with the dense determinant of
    ``I - sym_power(A, n) e^{-s l}`` for classes carrying a matrix.

    Even ``n`` requires a spin measure.  The tail bound is finite for
    ``Re s > 2 + (n - 1) / 2``.
    """
    s = complex(s)
    if n < 1:
        raise ValueError("n must be positive")
    if n % 2 == 0 and mu.kind != "spin":
        raise ValueError("even n requires a spin measure")
    primes = mu.primes
    if mu.kind == "spin":
        lam = np.array([c.lam_spin for c in primes], dtype=complex)
    else:
        lam = np.array([c.lam for c in primes], dtype=complex)
    wts = weights(n)
    E = np.exp(wts[None, :] * lam[:, None] / 2 - s * lam.real[:, None])
    la, arg = _sum_logs(1 - E)
    if check:
        worst = 0.0
        for c, row in zip(primes, 1 - E):
            if c.matrix is None:
                continue
            direct = rho_factor_det(c.matrix, n, s, c.lam.real)
            eig = complex(np.prod(row))
            worst = max(worst, abs(direct - eig) / max(abs(eig), 1e-300))
        if worst > check_tol:
            raise ArithmeticError(f"determinant and eigenvalue routes differ by {worst:.2e}")
    # weight w contributes factors decaying like exp(-(Re s - w / 2) l)
    tb = 0.0
    for wt in wts:
        tb += _tail(mu, s.real - wt / 2, C, strict)
    return ZetaValue(_value(la, arg), la, mu.cutoff, tb, arg)
