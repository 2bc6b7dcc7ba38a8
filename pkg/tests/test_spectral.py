"""Spectra: closed form on the slice, the discretized solver against it,
Rayleigh quotients, index logic."""

import pytest

from fminlab import rotsym as R, spectral as SP
from fminlab.ambient import SphereCylinder
from fminlab.errors import ArgumentError, IncompleteSpectrumError, PreconditionError


def closed_mu(n, k):
    return k * (k + n - 1) / (2.0 * (n - 1)) - 0.5


def test_closed_form_n2():
    spec = SP.slice_spectrum_closed_form(2, 2)
    entries = spec.sorted_entries()
    assert [e.mu for e in entries] == pytest.approx([-0.5, 0.5, 2.5])
    assert [e.multiplicity for e in entries] == [1, 3, 5]
    assert spec.index == 1


def test_closed_form_n3_first_eigenvalue():
    spec = SP.slice_spectrum_closed_form(3, 1)
    mu1 = spec.sorted_entries()[1].mu
    assert mu1 == pytest.approx(3.0 / 4.0 - 0.5)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_closed_form_positive_above_ground(n):
    spec = SP.slice_spectrum_closed_form(n, 8)
    mus = [e.mu for e in spec.sorted_entries()]
    assert mus[0] == pytest.approx(-0.5)
    assert all(m > 0 for m in mus[1:])
    assert spec.index == 1


def test_harmonic_dimensions():
    assert [SP.harmonic_dimension(2, k) for k in range(4)] == [1, 3, 5, 7]
    assert [SP.harmonic_dimension(3, k) for k in range(4)] == [1, 4, 9, 16]
    assert [SP.harmonic_dimension(1, k) for k in range(4)] == [1, 2, 2, 2]
    # branching: modes of the orbit sphere assemble the full multiplicity
    for n in (2, 3):
        for k in range(5):
            total = sum(SP.harmonic_dimension(n - 1, m) for m in range(k + 1))
            assert total == SP.harmonic_dimension(n, k)


@pytest.mark.parametrize("n", [2, 3])
def test_solver_matches_closed_form(n):
    sl = R.slice_profile(SphereCylinder(n))
    spec = SP.sturm_liouville_spectrum(sl, m_max=10, grid=2000)
    worst = 0.0
    for e in spec.entries:
        k = e.mode + e.k_in_mode
        if k <= 10:
            worst = max(worst, abs(e.mu - closed_mu(n, k)))
    assert worst <= 1e-6
    assert spec.index == 1


def test_constant_mode_exact_at_coarse_grid():
    sl = R.slice_profile(SphereCylinder(2))
    spec = SP.sturm_liouville_spectrum(sl, m_max=0, grid=200, richardson=False)
    mu0 = spec.sorted_entries()[0].mu
    assert abs(mu0 + 0.5) <= 1e-8


def test_richardson_invariant():
    # extrapolating grids 1000/2000 reaches 1e-8 for the first six ladders
    sl = R.slice_profile(SphereCylinder(2))
    spec = SP.sturm_liouville_spectrum(sl, m_max=5, grid=2000)
    for e in spec.entries:
        k = e.mode + e.k_in_mode
        if k <= 5:
            assert abs(e.mu - closed_mu(2, k)) <= 1e-8


def test_second_order_convergence():
    sl = R.slice_profile(SphereCylinder(2))
    errs = []
    for grid in (500, 1000):
        spec = SP.sturm_liouville_spectrum(sl, m_max=1, grid=grid,
                                           richardson=False)
        worst = max(abs(e.mu - closed_mu(2, e.mode + e.k_in_mode))
                    for e in spec.entries if 1 <= e.mode + e.k_in_mode <= 3)
        errs.append(worst)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)


def test_assembled_multiplicities():
    sl = R.slice_profile(SphereCylinder(3))
    spec = SP.sturm_liouville_spectrum(sl, m_max=6, grid=1000)
    for k in range(4):
        mu = closed_mu(3, k)
        total = sum(e.multiplicity for e in spec.entries
                    if abs(e.mu - mu) < 1e-4)
        assert total == SP.harmonic_dimension(3, k)


def test_rayleigh_quotients_on_slice():
    sl = R.slice_profile(SphereCylinder(2))
    assert SP.rayleigh_quotient(sl, "alpha") == pytest.approx(-0.5, abs=1e-8)
    assert SP.rayleigh_quotient(sl, "one") == pytest.approx(-0.5, abs=1e-8)


def test_rayleigh_zero_trial_rejected():
    sl = R.slice_profile(SphereCylinder(2))
    with pytest.raises(ArgumentError):
        SP.rayleigh_quotient(sl, "height_t")  # t vanishes on the slice


def test_minmax_coherence():
    sl = R.slice_profile(SphereCylinder(2))
    spec = SP.sturm_liouville_spectrum(sl, m_max=4, grid=800)
    mu_min = spec.sorted_entries()[0].mu
    for trial in ("one", "alpha", "f_restricted", "A2"):
        try:
            q = SP.rayleigh_quotient(sl, trial)
        except ArgumentError:
            continue
        assert q >= mu_min - 1e-6


def test_index_preconditions():
    spec = SP.SpectrumResult(label="x", n=2)
    with pytest.raises(IncompleteSpectrumError):
        SP.lf_index(spec)
    spec.entries.append(SP.SpectrumEntry(mu=-0.5, multiplicity=1, mode=0))
    with pytest.raises(IncompleteSpectrumError):
        SP.lf_index(spec)
    spec.entries.append(SP.SpectrumEntry(mu=1.0, multiplicity=1, mode=0))
    assert SP.lf_index(spec) == 1


def test_spectrum_requires_closed_profile():
    arc = R.integrate_profile((0.5, 0.1, 0.05), 1e-3, 1.0, SphereCylinder(2))
    with pytest.raises(PreconditionError):
        SP.sturm_liouville_spectrum(arc, m_max=1, grid=200)


def test_solver_threads_agree():
    sl = R.slice_profile(SphereCylinder(2))
    s1 = SP.sturm_liouville_spectrum(sl, m_max=3, grid=400)
    s2 = SP.sturm_liouville_spectrum(sl, m_max=3, grid=400, threads=3)
    mus1 = [e.mu for e in s1.sorted_entries()]
    mus2 = [e.mu for e in s2.sorted_entries()]
    assert mus1 == pytest.approx(mus2, abs=0.0)


def test_result_serialization():
    spec = SP.slice_spectrum_closed_form(2, 3)
    d = spec.to_dict()
    assert d["index"] == 1
    assert d["convention"] == SP.CONVENTION
    assert d["eigenvalues"][0]["mu"] == pytest.approx(-0.5)
