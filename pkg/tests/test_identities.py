"""The identity layer: catalog, residuals on exact and generated charts,
preconditions, consistency chains, finite-difference spot checks."""

import numpy as np
import pytest

from fminlab import hypersurface as HS, identities as ID, rotsym
from fminlab.ambient import SphereCylinder
from fminlab.errors import ArgumentError, PreconditionError

TOL = 1e-8


def exact_charts():
    return [
        HS.slice_chart(2), HS.slice_chart(3),
        HS.equator_cylinder_chart(2), HS.equator_cylinder_chart(3),
        HS.shrinker_sphere_chart(2), HS.shrinker_sphere_chart(3),
        HS.shrinker_cylinder_chart(2),
    ]


def test_catalog_is_complete():
    infos = ID.list_identities()
    assert len(infos) == 14
    by_name = {i.name: i for i in infos}
    assert by_name["SIMONS_FULL"].jet_order == 4
    assert by_name["HEIGHT"].jet_order == 2
    assert by_name["CYL_DALPHA2"].requires == "cylinder"
    assert all(i.statement for i in infos)


@pytest.mark.parametrize("chart", exact_charts(), ids=lambda c: c.label)
def test_all_identities_on_exact_charts(chart):
    ids = ID.compatible_identities(chart)
    pts = ID.low_discrepancy_points(chart, 25, seed=11)
    reports = ID.check_many(ids, chart, pts, TOL)
    for rep in reports:
        assert rep.passed, f"{rep.identity}: {rep.max_residual}"


def _fmin_arc(n, seed=0):
    model = SphereCylinder(n)
    rng = np.random.default_rng(seed)
    rho0 = model.a * rng.uniform(0.35, 0.6)
    initial = (rho0, rng.uniform(-0.6, 0.6), rng.uniform(-0.3, 0.3))
    arc = rotsym.integrate_profile(initial, 1e-3 * model.a, 1.0, model)
    return rotsym.profile_chart(arc)


@pytest.mark.parametrize("n", [2, 3])
def test_all_identities_on_generated_charts(n):
    """Profile charts have genuinely varying H, |A|^2, alpha; every
    cylinder-compatible identity must still hold pointwise."""
    chart = _fmin_arc(n, seed=n)
    pts = ID.low_discrepancy_points(chart, 20, seed=5)
    reports = ID.check_many(ID.compatible_identities(chart), chart, pts, TOL)
    for rep in reports:
        assert rep.passed, f"{rep.identity}: {rep.max_residual}"


def test_specific_trivial_examples():
    sl = HS.slice_chart(2)
    pts = ID.low_discrepancy_points(sl, 10, seed=1)
    rep = ID.check_identity("CYL_DALPHA2", sl, pts)
    assert rep.max_residual <= 1e-14

    sp = HS.shrinker_sphere_chart(2)
    rep = ID.check_identity("SHRINKER_A2", sp,
                            ID.low_discrepancy_points(sp, 10, seed=1))
    assert rep.max_residual <= 1e-12

    eq = HS.equator_cylinder_chart(2)
    rep = ID.check_identity("HEIGHT", eq,
                            ID.low_discrepancy_points(eq, 10, seed=1))
    assert rep.max_residual <= 1e-14


def test_precondition_sharpness():
    translated = HS.graph_chart("1", 2, label="translated-slice")
    pts = ID.low_discrepancy_points(translated, 5, seed=2)
    with pytest.raises(PreconditionError) as err:
        ID.check_identity("CYL_DALPHA2", translated, pts)
    assert "u =" in str(err.value)  # names the worst point


def test_model_compatibility_rejected():
    sl = HS.slice_chart(2)
    with pytest.raises(ArgumentError):
        ID.check_identity("SHRINKER_A2", sl,
                          ID.low_discrepancy_points(sl, 3, seed=0))
    sp = HS.shrinker_sphere_chart(2)
    with pytest.raises(ArgumentError):
        ID.check_identity("HEIGHT", sp,
                          ID.low_discrepancy_points(sp, 3, seed=0))
    with pytest.raises(ArgumentError):
        ID.check_identity("NOT_AN_IDENTITY", sl, [[1.0, 2.0]])


def test_consistency_chain_cylinder_vs_soliton_simons():
    """On cylinder charts the specialized balance equals the soliton-form
    balance after the curvature substitution, so the signed defects agree."""
    chart = _fmin_arc(2, seed=9)
    pts = ID.low_discrepancy_points(chart, 12, seed=3)
    ra = ID.check_identity("CYL_DA2", chart, pts)
    rb = ID.check_identity("SIMONS_SOLITON", chart, pts)
    for (_, la, rha, _), (_, lb, rhb, _) in zip(ra.samples, rb.samples):
        assert abs((la - rha) - (lb - rhb)) <= 1e-9


def test_alpha_law_reduces_to_soliton_form():
    chart = _fmin_arc(2, seed=12)
    pts = ID.low_discrepancy_points(chart, 12, seed=4)
    law = ID.check_identity("ALPHA_LAW", chart, pts)
    sol = ID.check_identity("ALPHA_SOLITON", chart, pts)
    for (_, _, _, r1), (_, _, _, r2) in zip(law.samples, sol.samples):
        if r1 <= 1e-9:
            assert r2 <= 1e-9


def test_fd_crosscheck_spot_points():
    """The nested-jet drift Laplacian behind each identity's left side agrees
    with a divergence-form finite-difference recomputation."""
    chart = _fmin_arc(2, seed=4)
    pts = ID.low_discrepancy_points(chart, 10, seed=6)
    tolerances = {
        "ALPHA_LAW": 1e-5, "ALPHA_SOLITON": 1e-5, "CYL_DALPHA2": 1e-5,
        "DELTAF_F": 1e-6, "HEIGHT": 0.0, "FLAP_H": 1e-3, "LF_H": 1e-3,
        "CYL_DH2": 1e-3, "CYL_DA2": 1e-2, "SIMONS_FULL": 1e-2,
        "SIMONS_SOLITON": 1e-2,
    }
    for name, tol in tolerances.items():
        dev = ID.fd_crosscheck(name, chart, pts[:3] if tol else pts[:1])
        assert dev <= max(tol, 1e-12), f"{name}: fd deviation {dev}"


def test_report_serialization():
    sl = HS.slice_chart(2)
    rep = ID.check_identity("HEIGHT", sl, ID.low_discrepancy_points(sl, 4, 7))
    d = rep.to_dict()
    assert d["identity"] == "HEIGHT"
    assert d["pass"] is True
    assert len(d["samples"]) == 4
    assert d["statement"]


def test_low_discrepancy_determinism():
    sl = HS.slice_chart(2)
    p1 = ID.low_discrepancy_points(sl, 16, seed=42)
    p2 = ID.low_discrepancy_points(sl, 16, seed=42)
    assert np.array_equal(p1, p2)
    p3 = ID.low_discrepancy_points(sl, 16, seed=43)
    assert not np.array_equal(p1, p3)
    box = sl.domain
    assert np.all(p1 >= box[:, 0]) and np.all(p1 <= box[:, 1])
