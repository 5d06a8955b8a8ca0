import math

import numpy as np
import pytest
from scipy.integrate import quad

from artifact import analysis as AN
from artifact import spectrum as SP
from artifact import torsion as TO

ATOMS = [1.1 + 0.7j, 1.6 - 2.1j, 2.3 + 3.0j]


def _exact_moments(lams, ks):
    z = np.exp(np.asarray(lams) / 2)
    allz = np.concatenate([z, np.conj(z)])
    return {k: float(np.sum(allz ** (-k)).real) for k in ks}


def test_volume_against_quadrature():
    # Lobachevsky function as -int_0^theta log|2 sin t| dt
    lob = -quad(lambda t: math.log(abs(2 * math.sin(t))), 0, math.pi / 3, limit=200)[0]
    assert AN.lobachevsky(math.pi / 3) == pytest.approx(lob, abs=1e-12)
    assert AN.figure_eight_volume() == pytest.approx(6 * lob, abs=1e-11)
    assert AN.figure_eight_volume() == pytest.approx(2.0298832, abs=1e-7)


def test_mueller_empty_spectrum():
    mu = SP.SpectrumMeasure.from_lengths([], "psl", cutoff=4.0)
    res = AN.mueller_identity(mu, 0.0, 3, "odd")
    assert res.value == 0.0


def test_mueller_fig8_at_L5(fig8, spectra):
    vol = AN.figure_eight_volume()
    res = AN.mueller_identity(spectra(5.0), vol, 3, "odd")
    alg = TO.normalized_torsion(fig8, None, 7).log_abs - TO.normalized_torsion(fig8, None, 5).log_abs
    assert alg == pytest.approx(math.log((1 / 480) / (3 / 28)), abs=1e-9)
    assert abs(res.value - alg) <= res.uncertainty
    assert res.volume_term == pytest.approx(6 * vol / math.pi)


def test_mueller_even_parity(fig8, lifts, spectra):
    vol = AN.figure_eight_volume()
    mu = spectra(5.0, "spin", 0)
    res = AN.mueller_identity(mu, vol, 3, "even")
    alg = (TO.normalized_torsion(fig8, lifts[0], 6).log_abs
           - TO.normalized_torsion(fig8, lifts[0], 4).log_abs)
    assert abs(res.value - alg) <= res.uncertainty


def test_asymptotic_ratio_exact_fit():
    c = 0.3
    seq = AN.TorsionSequence({n: -c * n * n for n in range(5, 40, 2)})
    out = AN.asymptotic_ratio(seq, "odd")
    assert out["limit"] == pytest.approx(-c, abs=1e-12)
    assert out["volume_estimate"] == pytest.approx(4 * math.pi * c)


def test_asymptotic_ratio_needs_four_entries():
    seq = AN.TorsionSequence({5: -1.0, 7: -2.0, 9: -3.0})
    assert AN.asymptotic_ratio(seq)["limit"] is None


def test_richardson_removes_polynomial_corrections():
    ns = np.arange(5, 60, 2)
    vals = -0.2 + 1.5 / ns - 3.0 / ns ** 2
    assert AN.richardson_limit(ns, vals, 3) == pytest.approx(-0.2, abs=1e-10)


def test_sequence_rejects_small_n():
    with pytest.raises(ValueError):
        AN.TorsionSequence({3: 0.0})


def test_zero_measure_has_zero_moments():
    zl = {k: 0.0 for k in range(5, 30)}
    assert all(v == 0 for v in AN.moments_from_zeta_logs(zl).values())


def test_moments_from_zeta_logs_exact():
    ks = range(5, 200)
    zl = AN.forward_zeta_logs(ATOMS, ks)
    mom = AN.moments_from_zeta_logs(zl)
    exact = _exact_moments(ATOMS, range(5, 25))
    for k in range(5, 25):
        assert mom[k] == pytest.approx(exact[k], abs=1e-12)


def test_recover_three_atoms():
    mu = SP.SpectrumMeasure.from_lengths(ATOMS, "spin")
    est = AN.recover_measure(_exact_moments(ATOMS, range(5, 45)), 6)
    assert AN.compare_estimates(est, AN.symmetrized_locations(mu)) <= 1e-6


def test_conjugate_measures_give_identical_estimates():
    a = AN.recover_measure(_exact_moments(ATOMS, range(5, 45)), 6)
    b = AN.recover_measure(_exact_moments(np.conj(ATOMS), range(5, 45)), 6)
    assert AN.compare_estimates(a, [(z, w) for z, w in b.atoms]) <= 1e-9


SHALLOW = [0.6 + 0.9j, 0.8 - 2.0j, 1.0 + 2.8j]


def _noisy(atoms, seed, noise=1e-10):
    rng = np.random.default_rng(seed)
    return {k: v + noise * rng.standard_normal() for k, v in _exact_moments(atoms, range(5, 45)).items()}


def test_recover_with_noise():
    mu = SP.SpectrumMeasure.from_lengths(SHALLOW, "spin")
    for seed in range(10):
        est = AN.recover_measure(_noisy(SHALLOW, seed), 6)
        assert AN.compare_estimates(est, AN.symmetrized_locations(mu)) <= 1e-6
        assert est.singular_values[5] > 1e-2


def test_noise_on_deep_atoms_is_flagged_by_conditioning():
    # atoms far outside the unit circle contribute |z|^-k and drown in the noise;
    # the smallest retained singular value reports it
    mu = SP.SpectrumMeasure.from_lengths(ATOMS, "spin")
    est = AN.recover_measure(_noisy(ATOMS, 0), 6)
    assert est.singular_values[5] < 1e-3
    assert AN.compare_estimates(est, AN.symmetrized_locations(mu)) <= 1e-3


def test_recover_underdetermined():
    with pytest.raises(ValueError, match="moments"):
        AN.recover_measure(_exact_moments(ATOMS, range(5, 9)), 6)


def test_torsion_sequence_round_trip():
    vol = 2.0
    zl = AN.forward_zeta_logs(ATOMS, range(5, 72))
    full = AN.reconstruct_sequence(zl, vol, {4: -1.0, 5: -2.0}, range(4, 72))
    seq = AN.TorsionSequence(full, "synthetic")
    est = AN.recover_measure(AN.moments_from_torsion(seq, vol), 6)
    mu = SP.SpectrumMeasure.from_lengths(ATOMS, "spin")
    assert AN.compare_estimates(est, AN.symmetrized_locations(mu)) <= 1e-6


def test_extend_downward():
    vol = 2.0
    zl = AN.forward_zeta_logs(ATOMS, range(5, 72))
    full = AN.reconstruct_sequence(zl, vol, {4: -1.0, 5: -2.0}, range(4, 72))
    tail = AN.TorsionSequence({n: v for n, v in full.items() if n >= 8})
    rec = AN.extend_downward(tail, vol, 6)
    for n in range(4, 8):
        assert rec[n] == pytest.approx(full[n], abs=1e-6)


def test_zeta_logs_from_estimate():
    mom = _exact_moments(ATOMS, range(5, 45))
    est = AN.recover_measure(mom, 6)
    zl = AN.zeta_logs_from_estimate(est, [6, 9])
    exact = AN.forward_zeta_logs(ATOMS, [6, 9])
    assert zl[6] == pytest.approx(exact[6], abs=1e-8)
    assert zl[9] == pytest.approx(exact[9], abs=1e-8)


def test_cauchy_transform_single_atom():
    z = np.array([0.1 + 0.2j])
    assert AN.cauchy_transform([(2.0 + 0j, 3.0)], z)[0] == pytest.approx(3 / (2 - z[0]))


def test_isospectral_up_to_conjugation():
    mu = SP.SpectrumMeasure.from_lengths(ATOMS, "spin", cutoff=3.0)
    ok, _ = AN.isospectral_up_to_conj(mu, mu.conjugate())
    assert ok
    moved = SP.SpectrumMeasure.from_lengths([ATOMS[0] + 1e-3, *ATOMS[1:]], "spin", cutoff=3.0)
    ok, _ = AN.isospectral_up_to_conj(mu, moved)
    assert not ok


def test_fig8_spectrum_is_conjugation_closed(spectra):
    mu = spectra(3.0)
    ok, _ = AN.isospectral_up_to_conj(mu, mu.conjugate())
    assert ok
    lam = mu.lambdas()

    def key(l):
        im = math.remainder(l.imag, 2 * math.pi)  # representative in [-pi, pi]
        return (round(l.real, 8), round(abs(im), 8) if abs(abs(im) - math.pi) < 1e-9 else round(im, 8))

    assert sorted(map(key, lam)) == sorted(map(key, np.conj(lam)))


def test_bergman_identity_symbol():
    rep = AN.bergman_truncation([0.0, 1.0], 0.5, 16)
    assert np.allclose(rep["matrix"], np.eye(16))
    assert rep["hs_bound"] == 0


def test_bergman_log_symbol():
    psi = AN.psi_log_coefficients(64)
    assert psi[1] == 1 and psi[5] == pytest.approx(1 / 5)
    rep = AN.bergman_truncation(psi, 0.5, 64)
    A = rep["matrix"]
    assert rep["unit_lower_triangular"]
    assert np.array_equal(np.triu(A, 1), np.zeros_like(A))
    assert np.all(np.diag(A) == 1)
    assert np.all(rep["hs_partial"] <= rep["hs_bound"])
    assert rep["sigma_min"] > 0.5
    # independent column norm: column n has psi_j sqrt((n+1)/(nj+1)) R^(n(j-1)) at row nj
    n, R = 3, 0.5
    col = [(1 / j) * math.sqrt((n + 1) / (n * j + 1)) * R ** (n * (j - 1)) for j in range(2, 22) if n * j < 64]
    assert np.linalg.norm(A[n + 1:, n]) == pytest.approx(np.linalg.norm(col), rel=1e-12)
