import cmath
import itertools
import math

import numpy as np
import pytest

from artifact import manifold as MF
from artifact import spectrum as SP


def _multiset(lams):
    return sorted((round(l.real, 8), round(l.imag, 8) + 0.0) for l in lams)


def test_complex_length_diagonal():
    lam = 1 + 0.5j
    A = np.diag([cmath.exp(lam / 2), cmath.exp(-lam / 2)])
    assert SP.complex_length(A) == pytest.approx(lam)


def test_spin_length_branch():
    A = -np.diag([math.exp(0.35), math.exp(-0.35)])
    lam = SP.complex_length(A, spin=True)
    # 2 cosh(lam / 2) = trace over the strip Im in (-2 pi, 2 pi]
    assert 2 * cmath.cosh(lam / 2) == pytest.approx(np.trace(A))
    assert lam.real == pytest.approx(0.7)
    assert lam.imag == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("A", [[[1, 1], [0, 1]], [[0, 1], [-1, 0]]])
def test_not_loxodromic(A):
    with pytest.raises(SP.NotLoxodromicError):
        SP.complex_length(np.array(A, dtype=complex))


def _brute_force_systole(M, max_len=6):
    best = math.inf
    letters = [1, -1, 2, -2]
    for n in range(1, max_len + 1):
        for w in itertools.product(letters, repeat=n):
            if any(w[i] == -w[i + 1] for i in range(n - 1)):
                continue
            t = np.trace(M.evaluate(w))
            if abs(t.imag) < 1e-9 and abs(t.real) <= 2 + 1e-9:
                continue
            best = min(best, (2 * cmath.acosh(t / 2)).real)
    return best


def test_fig8_systole(fig8):
    mu = SP.enumerate_geodesics(fig8, 1.2)
    oracle = _brute_force_systole(fig8)
    assert oracle == pytest.approx(1.0870701449957, abs=1e-10)
    assert mu.complete
    assert len(mu.primes) == 4  # two unoriented systoles, both orientations
    for c in mu.classes:
        assert c.length == pytest.approx(oracle, abs=1e-10)
    # both orientations of each geodesic appear
    words = {c.word for c in mu.classes}
    from artifact import words as W
    assert all(W.canonical_cyclic(W.invert(w)) in words for w in words)


def test_word_and_ford_back_ends_agree(fig8):
    ford = SP.enumerate_geodesics(fig8, 2.0, method="ford")
    words = SP.enumerate_geodesics(fig8, 2.0, word_bound=10, method="words")
    assert words.complete
    assert _multiset(ford.lambdas()) == _multiset(words.lambdas())


def test_cyclic_group_atoms():
    C = MF.load_shipped("cyclic")
    mu = SP.enumerate_geodesics(C, 5.5, 8)
    assert len(mu.classes) == 10
    assert [c.word for c in mu.primes] in ([(1,), (-1,)], [(-1,), (1,)])
    for c in mu.classes:
        k = len(c.word)
        assert c.lam == pytest.approx(k * (1 + 0.5j))


def test_prime_test():
    C = MF.load_shipped("cyclic")
    mu = SP.enumerate_geodesics(C, 3.0, 6)
    sq = [c for c in mu.classes if c.word == (1, 1)][0]
    assert not SP.prime_test(sq, mu.classes)
    fake = SP.GeodesicClass((1, 2, 1, 2), 2.0 + 0j)
    assert not SP.prime_test(fake, [])


def test_systole_is_prime(fig8):
    mu = SP.enumerate_geodesics(fig8, 1.2)
    assert all(SP.prime_test(c, mu.classes) for c in mu.classes)


def test_integrate_single_atom():
    mu = SP.SpectrumMeasure.from_lengths([2 * math.log(2)], "spin")
    assert SP.integrate(mu, "moment", 5).value == pytest.approx(2 * 2 ** -5)
    lam = 1.3 + 0.4j
    mu = SP.SpectrumMeasure.from_lengths([lam], "spin")
    for k in (5, 6, 7):
        got = SP.integrate(mu, "log_abs_one_minus", k).value
        assert got == pytest.approx(math.log(abs(1 - cmath.exp(-k * lam / 2))))


def test_integrate_rejects_low_k():
    mu = SP.SpectrumMeasure.from_lengths([1.0], "spin")
    with pytest.raises(ValueError, match="threshold"):
        SP.integrate(mu, "moment", 3)


def test_growth_check_fig8(spectra):
    rep = SP.growth_check(spectra(3.0), 1.0)
    assert rep["ok"]
    assert rep["fitted_exponent"] <= 2 + 0.3


def test_growth_check_trivial_cases():
    empty = SP.SpectrumMeasure.from_lengths([], "psl", cutoff=3.0)
    assert SP.growth_check(empty, 1.0)["ok"]
    mu = SP.enumerate_geodesics(MF.load_shipped("cyclic"), 4.0, 6)
    assert SP.growth_check(mu, 1.0)["ok"]


def test_incomplete_when_word_bound_too_small(fig8):
    with pytest.warns(RuntimeWarning):
        mu = SP.enumerate_geodesics(fig8, 3.0, word_bound=4, method="words")
    assert not mu.complete


def test_export_formats(fig8):
    mu = SP.enumerate_geodesics(fig8, 1.2)
    csv_text = mu.to_csv(fig8.generators)
    assert csv_text.splitlines()[0] == "word,re_lambda,im_lambda,spin_sign,prime,multiplicity"
    assert len(csv_text.splitlines()) == 5
    assert mu.to_json(fig8.generators) == mu.to_json(fig8.generators)


def test_filling_demo_against_itself(spectra):
    lim = spectra(1.3)
    rep = SP.filling_convergence_demo([lim], lim, (1.0, 1.2), filled_cusps=0)
    assert rep["filled"][0]["displacement"] == pytest.approx(0.0)


def test_filling_demo_rejects_bad_window(spectra):
    lim = spectra(1.3)
    with pytest.raises(ValueError):
        SP.filling_convergence_demo([lim], lim, (1.2, 1.0))
    with pytest.raises(ValueError):
        SP.filling_convergence_demo([lim], lim, (1.0, 1.0870701449957))
