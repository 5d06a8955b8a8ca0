import numpy as np
import pytest

from artifact import repn as R


def sym_power_oracle(A, n):
    """Action on homogeneous polynomials of degree n - 1 by explicit substitution.

    Basis ``X^(n-1-j) Y^j``; ``X -> a X + c Y``, ``Y -> b X + d Y``.
    """
    A = np.asarray(A, dtype=complex)
    x = np.array([A[0, 0], A[1, 0]])  # image of X as coefficients of (X, Y)
    y = np.array([A[0, 1], A[1, 1]])
    out = np.zeros((n, n), dtype=complex)
    for j in range(n):
        poly = np.ones(1, dtype=complex)
        for _ in range(n - 1 - j):
            poly = np.convolve(poly, x)
        for _ in range(j):
            poly = np.convolve(poly, y)
        out[:, j] = poly
    return out


def test_identity_and_diagonal():
    assert np.allclose(R.sym_power(np.eye(2), 5), np.eye(5))
    a = 1.7 - 0.3j
    assert np.allclose(R.sym_power(np.diag([a, 1 / a]), 3), np.diag([a ** 2, 1, a ** -2]))


@pytest.mark.parametrize("n", [1, 2, 3, 6, 9])
def test_matches_polynomial_substitution(rng, n):
    for _ in range(5):
        A = R.random_sl2(rng)
        assert np.allclose(R.sym_power(A, n), sym_power_oracle(A, n), rtol=1e-11, atol=1e-11)


def test_homomorphism_and_central_character(rng):
    for _ in range(20):
        A, B = R.random_sl2(rng), R.random_sl2(rng)
        for n in range(1, 9):
            assert np.allclose(R.sym_power(A @ B, n), R.sym_power(A, n) @ R.sym_power(B, n))
            assert np.allclose(R.sym_power(-np.eye(2), n), (-1) ** (n - 1) * np.eye(n))


def test_rejects_non_unimodular():
    with pytest.raises(ValueError):
        R.sym_power(np.diag([2.0, 1.0]), 3)


def test_character_closed_form_and_parabolic():
    assert R.character(np.diag([2, 0.5]), 3) == pytest.approx(5.25)
    P = np.array([[1, 1], [0, 1]])
    for n in range(1, 8):
        assert R.character(P, n) == pytest.approx(n)
        assert R.character(-P, n) == pytest.approx((-1) ** (n - 1) * n)


def test_character_matches_trace(rng):
    for _ in range(10):
        A = R.random_sl2(rng)
        for n in range(1, 8):
            assert R.character(A, n) == pytest.approx(np.trace(R.sym_power(A, n)), rel=1e-10)


def test_pairing_small_cases_and_symmetry():
    assert np.array_equal(R.pairing_matrix(2), np.array([[0, 1], [-1, 0]]))
    for n in range(1, 10):
        Phi = R.pairing_matrix(n)
        sign = 1 if n % 2 else -1
        assert np.array_equal(Phi.T, sign * Phi)


def test_pairing_invariance(rng):
    for _ in range(10):
        A = R.random_sl2(rng)
        for n in range(1, 9):
            S = R.sym_power(A, n)
            # rounding in the congruence grows with the entry size of S
            scale = max(np.linalg.norm(S, 2) ** 2, 1.0)
            res = np.abs(S.T @ R.pairing_matrix(n) @ S - R.pairing_matrix(n)).max()
            assert res / scale <= 1e-13


def test_mpmath_power_agrees(rng):
    A = R.random_sl2(rng)
    S = np.array(R.sym_power_mp(A, 6).tolist(), dtype=complex)
    assert np.allclose(S, R.sym_power(A, 6), rtol=1e-12)
