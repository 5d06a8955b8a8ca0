import cmath
import json
import math

import numpy as np
import pytest

from artifact import filling as FL
from artifact import manifold as MF
from artifact import repn as R
from artifact import spectrum as SP

SHIPPED = ["fig8_5_1", "fig8_12_1", "fig8_20_1"]


@pytest.fixture(scope="module")
def filled():
    return {nm: FL.load_filled(nm) for nm in SHIPPED}


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_fixtures_verify(filled, name):
    F = filled[name]
    rep = FL.verify_filling(F)
    assert rep["ok"], rep["problems"]
    for c in rep["cusps"]:
        assert c["filling_residual"] < 1e-6
    for row in rep["lifts"]:
        assert row["descends"] == row["extends_to_filling"]


def test_descent_follows_parity_rule(filled):
    # eps = (1, -1) for the all-plus lift, (-1, -1) for the other one
    rep = FL.verify_filling(filled["fig8_5_1"])
    flags = {tuple(r["signs"]): r["descends"] for r in rep["lifts"]}
    assert flags[(1, 1)] is True       # 1^5 (-1)^1 = -1
    assert flags[(-1, -1)] is False    # (-1)^5 (-1)^1 = +1
    rep = FL.verify_filling(filled["fig8_12_1"])
    assert all(r["descends"] for r in rep["lifts"])


def test_relators_hold_in_filled_group(filled):
    for F in filled.values():
        M = F.filled_manifold()
        assert len(M.relators) == 2
        assert max(r for _, r in M.relator_residuals()) < 1e-9


def test_complete_structure_fails_filling_equation():
    res = FL.filling_residuals([0j], [0j], [5], [1])
    assert res[0] == pytest.approx(2 * math.pi)


def test_newton_refinement_is_a_fixed_point(filled):
    F = filled["fig8_5_1"]
    mats, u, v = FL.refine_point(F.base, F.p, F.q, F.deformed.holonomy, target=1.0,
                                 u_ref=F.point.u, v_ref=F.point.v)
    assert u[0] == pytest.approx(F.point.u[0], abs=1e-10)
    assert v[0] == pytest.approx(F.point.v[0], abs=1e-10)
    assert FL.filling_residuals(u, v, F.p, F.q)[0] < 1e-12


def test_core_length_equals_meridian_parameter(filled):
    F = filled["fig8_12_1"]
    lam = FL.core_lengths(F)[0]
    assert lam == pytest.approx(0.133703 + 0.493093j, abs=1e-6)
    # the core is the meridian, whose logarithmic eigenvalue is u
    assert lam.real == pytest.approx(F.point.u[0].real, abs=1e-12)


def test_core_lengths_shrink_with_p(filled):
    ls = [FL.core_lengths(filled[n])[0].real for n in SHIPPED]
    assert ls[0] > ls[1] > ls[2] > 0


def test_round_trip_json(filled):
    F = filled["fig8_5_1"]
    G = FL.load_filled(json.dumps(FL.filled_to_json(F)))
    assert G.p == F.p and G.q == F.q
    assert np.allclose(G.deformed.holonomy, F.deformed.holonomy)
    assert G.point.u == pytest.approx(F.point.u)


def test_surgery_factor_examples():
    with pytest.warns(RuntimeWarning, match="imaginary"):
        assert FL.surgery_factor_even(2j * math.pi, 1) == pytest.approx(4)
    with pytest.warns(RuntimeWarning, match="imaginary"):
        assert FL.surgery_factor_odd(1j * math.pi, 1) == pytest.approx(4)
    for n in range(2, 8):
        # real lambda: every factor is (e^x - 1)(e^-x - 1) = -(2 sinh(x / 2))^2 < 0
        f = FL.surgery_factor(1.3, n)
        assert abs(f.imag) < 1e-12 and (-1) ** (n // 2) * f.real > 0
        assert abs(FL.surgery_factor(1e-6 + 0j, n)) < 1e-10


def test_odd_factor_against_diagonal_determinant():
    A = np.diag([math.exp(0.5), math.exp(-0.5)])
    S = R.sym_power(A, 5) - np.eye(5)
    eig = np.diag(S)
    prod = np.prod(eig[np.abs(eig) > 1e-12])
    assert FL.surgery_factor_odd(1.0, 2) == pytest.approx(prod, rel=1e-13)
    expected = np.prod([(math.exp(j) - 1) * (math.exp(-j) - 1) for j in (1, 2)])
    assert FL.surgery_factor_odd(1.0, 2) == pytest.approx(expected, rel=1e-13)


def test_imaginary_length_warns():
    with pytest.warns(RuntimeWarning):
        FL.surgery_factor(0.5j, 3)


def test_determinant_oracle(rng):
    checked = 0
    while checked < 10:
        A = R.random_sl2(rng)
        if not SP.is_loxodromic(A):
            continue
        lam = SP.complex_length(A, spin=True)
        for n in range(2, 12):
            d = FL.determinant_oracle(A, n)
            assert abs(d - FL.surgery_factor(lam, n)) <= 1e-8 * abs(d)
        checked += 1


def test_double_precision_oracle_small_n(rng):
    A = R.random_sl2(rng)
    lam = SP.complex_length(A, spin=True)
    for n in (2, 3, 4, 5):
        assert FL.determinant_oracle(A, n, dps=None) == pytest.approx(FL.surgery_factor(lam, n), rel=1e-8)


def test_cluster_map():
    assert FL.cluster_map(0, 0, 2) == pytest.approx(0)
    assert FL.cluster_map(0, 2 * math.pi, 2) == pytest.approx(1)
    vals = np.array([FL.cluster_map(0, th, 2) for th in np.linspace(0, 2 * math.pi, 1000)])
    assert np.abs(vals.imag).max() <= 1e-12
    assert vals.real.min() >= 0 and vals.real.max() <= 1 + 1e-12
    assert vals.real.min() < 0.01 and vals.real.max() > 0.99


@pytest.mark.parametrize("name", SHIPPED)
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_surgery_relation(filled, name, n):
    rel = FL.filled_torsion_relation(filled[name], n)
    assert rel["ok"], rel
    assert rel["residual"] <= rel["tolerance"]


def test_large_twist_factors_tend_to_one(filled):
    # the factor moves towards +-1 as the core shortens only through the
    # normalized odd quotient; the det ratio approaches 1 as p grows
    d = [FL.filled_torsion_relation(filled[n], 5)["normalized"]["det_ratio_distance_to_one"]
         for n in SHIPPED]
    assert d[0] > d[1] > d[2]
    assert d[2] < 0.02


def test_det_ratio_sequence(filled):
    rows = FL.det_ratio_sequence([filled[n] for n in SHIPPED], 2)
    assert [r["p"] for r in rows] == [[5], [12], [20]]
    assert all(math.isfinite(r["log_abs_ratio"]) for r in rows)


def test_filled_complex_rejects_non_descending_lift(filled):
    F = filled["fig8_5_1"]
    bad = MF.SpinLift((-1, -1))
    with pytest.raises(Exception, match="descend"):
        FL.filled_complex(F, 2, bad)
