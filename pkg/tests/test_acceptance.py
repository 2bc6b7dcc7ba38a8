"""Acceptance criteria.

Each test prints one [PASS]/[FAIL] line; run with `pytest -s
tests/test_acceptance.py` to see them.  Tolerances are pinned here and
nowhere else.
"""

import math
import time

import numpy as np
import pytest

from fminlab import hypersurface as HS, identities as ID, jets as J
from fminlab import rotsym as R, spectral as SP
from fminlab.ambient import SphereCylinder


def _report(ok: bool, label: str, detail: str = ""):
    print(f"[{'PASS' if ok else 'FAIL'}] {label}" + (f"  ({detail})" if detail else ""))
    assert ok, f"{label}: {detail}"


# -- shared shot-profile collection (criteria 3, 4, 9) ---------------------------

SWEEP_STARTS = (0.0, -0.8, -0.4, 0.4, 0.8, 1.4)


@pytest.fixture(scope="module")
def shot_profiles():
    """Closed profiles produced by the shooting sweep (n = 3)."""
    model = SphereCylinder(3)
    cfg = R.ShootConfig(scan_count=3, scan_radius=0.25, max_bisect=48,
                        max_length_factor=5.0)
    found = []
    outcomes = []
    for t0 in SWEEP_STARTS:
        res = R.shoot_closed(t0, model, cfg)
        outcomes.append((t0, res.found))
        if res.found:
            found.append(res.profile)
    print(f"      sweep outcomes: {outcomes}")
    return found


def test_criterion_1_slice_spectrum():
    t0 = time.perf_counter()
    worst = 0.0
    indices = []
    for n in (2, 3):
        sl = R.slice_profile(SphereCylinder(n))
        spec = SP.sturm_liouville_spectrum(sl, m_max=10, grid=2000)
        for e in spec.entries:
            k = e.mode + e.k_in_mode
            if k <= 10:
                exact = k * (k + n - 1) / (2.0 * (n - 1)) - 0.5
                worst = max(worst, abs(e.mu - exact))
        indices.append(spec.index)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and indices == [1, 1] and elapsed < 10.0
    _report(ok, "criterion 1: slice spectrum reproduction (n=2,3, k<=10)",
            f"worst |mu - exact| = {worst:.2e}, indices = {indices}, "
            f"{elapsed:.1f}s")


def test_criterion_2_identity_suite():
    t0 = time.perf_counter()
    charts = [
        HS.slice_chart(2), HS.slice_chart(3),
        HS.equator_cylinder_chart(2), HS.equator_cylinder_chart(3),
        HS.shrinker_sphere_chart(2), HS.shrinker_sphere_chart(3),
        HS.shrinker_cylinder_chart(2),
    ]
    worst = 0.0
    count = 0
    for chart in charts:
        ids = ID.compatible_identities(chart)
        pts = ID.low_discrepancy_points(chart, 100, seed=2024)
        for rep in ID.check_many(ids, chart, pts, tol=1e-8):
            worst = max(worst, rep.max_residual)
            count += 1
    elapsed = time.perf_counter() - t0
    ids_covered = set().union(*(ID.compatible_identities(c) for c in charts))
    ok = worst <= 1e-8 and len(ids_covered) == 14 and elapsed < 60.0
    _report(ok, "criterion 2: all 14 identities on exact charts at 1e-8",
            f"{count} reports, worst residual {worst:.2e}, {elapsed:.1f}s")


def test_criterion_3_alpha_eigenfunction(shot_profiles):
    profiles = [R.slice_profile(SphereCylinder(2))] + shot_profiles
    worst = 0.0
    for prof in profiles:
        q = SP.rayleigh_quotient(prof, "alpha")
        worst = max(worst, abs(q + 0.5))
    ok = worst <= 1e-8
    _report(ok, "criterion 3: Rayleigh quotient of alpha is -1/2",
            f"{len(profiles)} profiles, worst |q + 1/2| = {worst:.2e}")


def test_criterion_4_integral_identities(shot_profiles):
    profiles = [R.slice_profile(SphereCylinder(2)),
                R.slice_profile(SphereCylinder(3))] + shot_profiles
    worst = 0.0
    for prof in profiles:
        worst = max(worst, *R.lemA_residuals(prof))
    ok = worst <= 1e-6
    _report(ok, "criterion 4: closed-profile integral identities",
            f"{len(profiles)} profiles, worst residual = {worst:.2e}")


def test_criterion_5_pinching_band():
    b = R.pinching_band(3, math.sqrt(0.5))
    collapse = max(abs(b.lo - 0.25), abs(b.hi - 0.25))
    lo5, hi5 = R.corollary_band(5)
    cor = max(abs(lo5 - 0.25 * (1 - math.sqrt(0.5))),
              abs(hi5 - 0.25 * (1 + math.sqrt(0.5))))
    verdict = R.band_verdict(R.slice_profile(SphereCylinder(3)))
    ok = collapse <= 1e-12 and cor <= 1e-12 and verdict.holds_everywhere
    _report(ok, "criterion 5: pinching-band closed forms and slice membership",
            f"collapse {collapse:.1e}, corollary {cor:.1e}, "
            f"slice in band: {verdict.holds_everywhere}")


def test_criterion_6_ode_chart_coherence():
    model = SphereCylinder(2)
    a = model.a
    prof = R.integrate_profile((0.0, 0.0, 0.0), 1e-3 * a, math.pi * a, model)
    t_max = float(np.abs(prof.t).max())

    chart = R.profile_chart(prof)
    lo, hi = chart.domain[0]
    hf_worst = 0.0
    for sq in np.linspace(lo, hi, 60):
        hf_worst = max(hf_worst, HS.fminimality_residual(chart, [sq, 2.0]))

    def endpoint(h):
        return R.integrate_profile((0.3 * a, 0.5, 0.2), h, 1.5, model).states[-1]

    e1, e2, e3 = endpoint(2e-3 * a), endpoint(1e-3 * a), endpoint(0.5e-3 * a)
    ratio = float(np.linalg.norm(e1 - e2) / np.linalg.norm(e2 - e3))

    ok = t_max <= 1e-10 and hf_worst <= 1e-7 and 12.0 <= ratio <= 20.0
    _report(ok, "criterion 6: ODE-chart coherence and 4th-order convergence",
            f"|t|max {t_max:.1e}, |H_f| {hf_worst:.1e}, ratio {ratio:.2f}")


def test_criterion_7_jet_property_suite():
    rng = np.random.default_rng(20240810)
    failures = 0

    # 6000 product-rule cases: random jets, random multi-index, Leibniz
    import itertools

    for _ in range(6000):
        n_vars = int(rng.integers(1, 4))
        order = int(rng.integers(1, 5))
        t = J.jet_table(n_vars, order)
        a = J.Jet(t, rng.normal(size=t.size))
        b = J.Jet(t, rng.normal(size=t.size))
        ab = a * b
        beta = t.exponents[int(rng.integers(0, t.size))]
        lhs = J.extract_partial(ab, beta)
        rhs = 0.0
        for gamma in itertools.product(*[range(x + 1) for x in beta]):
            w = math.prod(math.comb(x, g) for x, g in zip(beta, gamma))
            rest = tuple(x - g for x, g in zip(beta, gamma))
            rhs += w * J.extract_partial(a, gamma) * J.extract_partial(b, rest)
        if abs(lhs - rhs) > 1e-12 * (1.0 + abs(rhs)):
            failures += 1

    # 4000 finite-difference cases on random elementary compositions
    def make_fn(c):
        def f(x):
            return math.sin(c[0] * x) * math.exp(c[1] * math.cos(x)) \
                + c[2] * x * x

        def jf(x0):
            x = J.jet_variable(x0, 0, 1, 4)
            return (J.jet_sin(x * c[0]) * J.jet_exp(J.jet_cos(x) * c[1])
                    + c[2] * x * x)

        return f, jf

    for _ in range(4000):
        c = rng.uniform(-1.0, 1.0, size=3)
        x0 = float(rng.uniform(-1.0, 1.0))
        f, jf = make_fn(c)
        a = jf(x0)
        h = 1e-4
        d1 = (8 * (f(x0 + h) - f(x0 - h)) - (f(x0 + 2 * h) - f(x0 - 2 * h))) \
            / (12 * h)
        d2 = (f(x0 + h) - 2 * f(x0) + f(x0 - h)) / h**2
        if abs(J.extract_partial(a, (1,)) - d1) > 1e-6:
            failures += 1
        if abs(J.extract_partial(a, (2,)) - d2) > 1e-6:
            failures += 1
        H = 1e-2

        def fd3(hh):
            return (f(x0 + 2 * hh) - 2 * f(x0 + hh) + 2 * f(x0 - hh)
                    - f(x0 - 2 * hh)) / (2 * hh**3)

        def fd4(hh):
            return (f(x0 + 2 * hh) - 4 * f(x0 + hh) + 6 * f(x0)
                    - 4 * f(x0 - hh) + f(x0 - 2 * hh)) / hh**4

        d3 = (4 * fd3(H / 2) - fd3(H)) / 3   # Richardson-extrapolated oracle
        d4 = (4 * fd4(H / 2) - fd4(H)) / 3
        if abs(J.extract_partial(a, (3,)) - d3) > 1e-3:
            failures += 1
        if abs(J.extract_partial(a, (4,)) - d4) > 1e-3:
            failures += 1

    ok = failures == 0
    _report(ok, "criterion 7: jet property suite on 10^4 randomized cases",
            f"failures = {failures}")


def test_criterion_8_weighted_volume():
    sl = R.slice_profile(SphereCylinder(2))
    err = abs(R.weighted_volume(sl) - 8 * math.pi)
    ok = err <= 1e-8
    _report(ok, "criterion 8: weighted volume of the n=2 slice is 8*pi",
            f"error {err:.2e}")


def test_criterion_9_classification_probes(shot_profiles):
    """Any closed non-slice profile from the sweep must both leave the
    pinching band somewhere and have index >= 2; a violation of either is a
    contradiction with the classification and fails the suite."""
    model = SphereCylinder(3)
    slice_ref = R.slice_profile(model)
    contradictions = []
    n_nonslice = 0
    for prof in shot_profiles:
        # distance of samples to the slice
        ref = slice_ref.state_at(np.clip(prof.s, 0, slice_ref.length))
        dist = float(np.max(np.abs(prof.t)))
        is_slice = dist <= 1e-3
        spec = SP.sturm_liouville_spectrum(prof, m_max=8, grid=1000)
        idx = spec.index
        if is_slice:
            if idx != 1:
                contradictions.append(f"slice-like profile with index {idx}")
            continue
        n_nonslice += 1
        verdict = R.band_verdict(prof)
        if verdict.holds_everywhere:
            contradictions.append(
                f"non-slice profile inside the band everywhere: {prof.label}")
        if idx < 2:
            contradictions.append(
                f"non-slice profile with index {idx}: {prof.label}")
    ok = not contradictions
    _report(ok, "criterion 9: classification probes on swept closed profiles",
            f"{len(shot_profiles)} closed ({n_nonslice} non-slice); "
            + ("no contradictions" if ok else "; ".join(contradictions)))
