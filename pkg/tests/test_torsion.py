import math

import numpy as np
import pytest

from artifact import manifold as MF
from artifact import repn as R
from artifact import torsion as TO
from artifact import words as W

# Even n: |T_n| from the Fox-calculus determinant formula (see _fox_torsion).
EVEN = {(1, 1): {4: 1 / 2, 6: 1 / 49, 8: 1 / 4802},
        (-1, -1): {4: 1 / 6, 6: 1 / 121, 8: 1 / 12150}}
# Odd n: algebraic route, cross-checked by the zeta route in the acceptance suite.
ODD = {5: 3 / 28, 7: 1 / 480}


def _fox_torsion(M, lift, n):
    """det rho(dr/dx) / det(rho(y) - I) for generators x = a, y = a b^-1.

    An independent oracle for one-relator presentations: the substitution
    b = y^-1 x makes rho(y) loxodromic for either lift.  The value is the
    reciprocal of the chain-complex torsion in this package's convention.
    """
    sub = {1: (1,), -1: (-1,), 2: (-2, 1), -2: (-1, 2)}
    r = W.reduce_word([g for t in M.relators[0] for g in sub[t]])
    X, Y = M.evaluate((1,), lift), M.evaluate((1, -2), lift)
    mats = {1: X, -1: np.linalg.inv(X), 2: Y, -2: np.linalg.inv(Y)}

    def rho(w):
        P = np.eye(2, dtype=complex)
        for g in w:
            P = P @ mats[g]
        return R.sym_power(P, n)

    D = sum(c * rho(w) for c, w in W.fox_derivative_terms(r, 1))
    return np.linalg.det(D) / np.linalg.det(rho((2,)) - np.eye(n))


def test_fox_oracle_matches_frozen_values(fig8, lifts):
    for l in lifts:
        for n, v in EVEN[l.signs].items():
            assert abs(_fox_torsion(fig8, l, 2) / _fox_torsion(fig8, l, n)) == pytest.approx(v, rel=1e-9)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_even_normalized_torsion(fig8, lifts, n):
    for l in lifts:
        t = TO.normalized_torsion(fig8, l, n)
        assert abs(t.value) == pytest.approx(EVEN[l.signs][n], rel=1e-9)


@pytest.mark.parametrize("n", [5, 7])
def test_odd_normalized_torsion(fig8, lifts, n):
    for l in [None, *lifts]:
        t = TO.normalized_torsion(fig8, l, n, tol=1e-9)
        assert abs(t.value) == pytest.approx(ODD[n], rel=1e-9)
        assert t.diagnostics["theta_deviation"] <= 1e-9


def test_normalized_torsion_rejects_small_n(fig8):
    with pytest.raises(TO.TorsionError):
        TO.normalized_torsion(fig8, None, 3)


def test_n2_complex_is_acyclic(fig8, lifts):
    for l in lifts:
        C = TO.analyse_complex(TO.build_complex(fig8, l, 2))
        assert list(C.betti) == [0, 0, 0]


def test_n3_homology_ranks(fig8):
    C = TO.analyse_complex(TO.build_complex(fig8, None, 3))
    assert list(C.betti) == [0, 1, 1]


def test_boundary_maps_compose_to_zero(fig8):
    C = TO.build_complex(fig8, None, 5)
    assert np.abs(C.boundary2 @ C.boundary1).max() < 1e-9


def test_circle_complex(rng):
    lam = 0.8 + 0.3j
    g = np.diag([np.exp(lam / 2), np.exp(-lam / 2)])
    for n in (2, 4):
        C = TO.analyse_complex(TO.circle_complex(g, n))
        assert list(C.betti) == [0, 0]
        log_abs, _, _ = TO.complex_torsion(C)
        expected = math.log(abs(np.linalg.det(R.sym_power(g, n) - np.eye(n))))
        assert abs(log_abs) == pytest.approx(abs(expected), rel=1e-12)


def test_invariant_vector_complete_structure(fig8):
    for n in (3, 5):
        w = TO.invariant_vector(fig8, 0, n)
        c = fig8.cusps[0]
        for word in (c.a_word, c.b_word):
            S = R.sym_power(fig8.evaluate(word), n)
            assert np.allclose(S @ w, w, atol=1e-10)
        # X^(n-1) direction: the meridian is already [[1, 1], [0, 1]]
        e = np.zeros(n)
        e[0] = 1
        assert np.allclose(w / w[0], e)


def test_deformed_invariant_coefficients():
    u = 0.3 + 0.7j
    assert np.allclose(TO.deformed_invariant_coefficients(u, 1), [1, -2 * np.sinh(u / 2), 0])


def test_deformed_pairing_self_value_homogeneity():
    # w(u) = e1^k e2^k with det(e1, e2) = -2 sinh(u/2); the det-power pairing
    # gives Phi(w, w) = (-1)^k (2 sinh(u/2))^(2k) / binom(2k, k)
    for k in (1, 2, 3, 4):
        for u in (0.3 + 0.7j, 1.1 - 0.2j, -0.5 + 2.0j):
            w = TO.deformed_invariant_coefficients(u, k)
            expected = (-1) ** k * (2 * np.sinh(u / 2)) ** (2 * k) / math.comb(2 * k, k)
            assert TO.pairing_self_value(w) == pytest.approx(expected, rel=1e-12)


def test_basis_change_covariance(fig8):
    same = TO.basis_change_covariance(fig8, None, 3, [(1, 0)], [(1, 0)])
    assert same["factor"] == pytest.approx(1)
    for n in (3, 5, 7):
        cov = TO.basis_change_covariance(fig8, None, n, [(1, 0)], [(0, 1)])
        assert cov["factor"] == pytest.approx(MF.cusp_shape(fig8, 0, (1, 0), (0, 1)))
        assert cov["exponent"] == -1


def test_w_scaling_invariance(fig8):
    w = TO.invariant_vector(fig8, 0, 5)
    a = TO.torsion_with_bases(fig8, None, 5, TO.HomologyBasisSpec(((1, 0),), w=(w,)))
    b = TO.torsion_with_bases(fig8, None, 5, TO.HomologyBasisSpec(((1, 0),), w=(2.5j * w,)))
    assert b.log_abs == pytest.approx(a.log_abs, abs=1e-12)
    assert math.remainder(b.phase - a.phase, math.pi) == pytest.approx(0, abs=1e-12)


def test_eta_independence_odd(fig8, lifts):
    for n in (5, 7):
        vals = [TO.normalized_torsion(fig8, l, n).value for l in lifts]
        assert vals[0] == pytest.approx(vals[1], rel=1e-9)


def test_torsion_value_quotient():
    a = TO.TorsionValue(1.0, 0.2, 5)
    b = TO.TorsionValue(0.25, -0.1, 5)
    q = a / b
    assert q.log_abs == pytest.approx(0.75)
    assert q.phase == pytest.approx(0.3)
