import copy
import json
import math

import numpy as np
import pytest

from artifact import manifold as MF

OMEGA = (-1 + 1j * math.sqrt(3)) / 2


def fig8_doc():
    return json.loads(MF.fixture_path("fig8").read_text())


def test_fig8_holonomy_and_relator(fig8):
    A, B = fig8.generator_matrices()
    assert np.allclose(A, [[1, 1], [0, 1]])
    assert np.allclose(B, [[1, 0], [-OMEGA, 1]])
    # independent check: multiply the relator out by hand
    mats = {"a": A, "b": B, "A": np.linalg.inv(A), "B": np.linalg.inv(B)}
    prod = np.eye(2, dtype=complex)
    for ch in "aBAbaBabAB":
        prod = prod @ mats[ch]
    assert np.abs(prod - np.eye(2)).max() < 1e-10
    assert max(r for _, r in fig8.relator_residuals()) < 1e-10


def test_round_trip_through_json(fig8):
    doc = fig8_doc()
    M = MF.load_fixture(json.dumps(doc))
    assert M.generators == fig8.generators
    assert M.relators == fig8.relators
    assert all(np.allclose(x, y) for x, y in zip(M.holonomy, fig8.holonomy))


def test_non_unimodular_generator_is_rejected():
    doc = fig8_doc()
    doc["holonomy"]["a"] = MF.matrix_to_json(np.array([[2, 0], [0, 1]], dtype=complex))
    with pytest.raises(MF.FixtureError, match="non-unimodular generator"):
        MF.load_fixture(doc)


def test_non_parabolic_peripheral_is_rejected():
    # a one-generator fixture whose cusp word has trace 2.5
    t = 2.5
    lam = math.acosh(t / 2)
    g = np.diag([math.exp(lam), math.exp(-lam)]).astype(complex)
    doc = {"name": "bad", "generators": ["g", "h"], "relators": [],
           "holonomy": {"g": MF.matrix_to_json(g), "h": MF.matrix_to_json(np.eye(2, dtype=complex))},
           "cusps": [{"a": "g", "b": "h"}]}
    with pytest.raises(MF.FixtureError, match="peripheral not parabolic"):
        MF.load_fixture(doc)


def test_broken_relator_is_itemized():
    doc = fig8_doc()
    doc["relators"] = ["a b"]
    with pytest.raises(MF.FixtureError, match="relator 0"):
        MF.load_fixture(doc)


def test_fig8_has_two_lifts(fig8, lifts):
    assert len(lifts) == 2
    # |H^1(M; Z/2)| = 2 from the abelianized presentation
    assert MF.h1_mod2_order(fig8) == 2
    # brute force over all four sign vectors
    good = []
    for s in [(1, 1), (1, -1), (-1, 1), (-1, -1)]:
        mats = [e * m for e, m in zip(s, fig8.holonomy)]
        ok = True
        for r in fig8.relators:
            P = np.eye(2, dtype=complex)
            for g in r:
                M = mats[abs(g) - 1]
                P = P @ (M if g > 0 else np.linalg.inv(M))
            ok &= np.allclose(P, np.eye(2))
        if ok:
            good.append(s)
    assert sorted(good) == sorted(l.signs for l in lifts)


def test_one_generator_free_fixture_has_two_lifts():
    C = MF.load_shipped("cyclic")
    assert len(MF.enumerate_spin_lifts(C)) == 2


def test_fig8_lifts_are_acyclic(fig8, lifts):
    for l in lifts:
        signs = MF.peripheral_signs(fig8, l, 0)
        assert -1 in signs
        assert MF.is_acyclic(fig8, l)


def test_two_cusp_fixture_with_positive_cusp():
    T = MF.load_shipped("two_cusp")
    lift = MF.SpinLift((1,) * T.ngens)
    assert MF.peripheral_signs(T, lift, 0) == (1, 1)
    assert not MF.is_acyclic(T, lift)


def test_peripheral_sign_of_trace_minus_two(fig8):
    lift = MF.SpinLift((-1, -1))
    assert MF.peripheral_signs(fig8, lift, 0)[0] == -1


def test_not_at_complete_structure(fig8):
    deformed = fig8.with_holonomy([np.diag([1.5, 1 / 1.5]).astype(complex), fig8.holonomy[1]])
    with pytest.raises(ValueError, match="not at complete structure"):
        MF.peripheral_signs(deformed, MF.SpinLift((1, 1)), 0)


def test_parity_rule():
    assert MF.extends_to_filling_signs([(1, -1)], [5], [3])
    for p, q in [(1, 0), (0, 1), (1, 1), (3, 2), (5, 7)]:
        assert not MF.extends_to_filling_signs([(1, 1)], [p], [q])
    assert MF.extends_to_filling_signs([(-1, -1)], [2], [1])
    assert not MF.extends_to_filling_signs([(-1, -1)], [1], [1])


def test_cusp_shape(fig8):
    assert MF.cusp_shape(fig8, 0, (1, 0), (1, 0)) == pytest.approx(1)
    s = MF.cusp_shape(fig8, 0, (0, 1), (1, 0))
    assert s * MF.cusp_shape(fig8, 0, (1, 0), (0, 1)) == pytest.approx(1)
    # classical value for the figure-eight knot: longitude / meridian = 2 sqrt(3) i
    assert abs(s.imag) == pytest.approx(2 * math.sqrt(3), rel=1e-12)
    assert abs(s.real) < 1e-12


def test_cusp_frame_normalizes_meridian(fig8):
    P = MF.cusp_frame(fig8, 0)
    A = np.linalg.inv(P) @ fig8.evaluate(fig8.cusps[0].a_word) @ P
    assert np.allclose(A, [[1, 1], [0, 1]])


def test_peripheral_word(fig8):
    c = fig8.cusps[0]
    w = MF.peripheral_word(c, (2, -1))
    X = fig8.evaluate(w)
    Y = np.linalg.matrix_power(fig8.evaluate(c.a_word), 2) @ np.linalg.inv(fig8.evaluate(c.b_word))
    assert np.allclose(X, Y)
