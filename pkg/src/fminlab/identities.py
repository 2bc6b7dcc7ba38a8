"""Pointwise residual checks of the drift-Laplacian identities.

Every identity is assembled verbatim from its stated form: the left side is
the nested-jet drift Laplacian (or stability operator) of the named scalar
field, the right side is built from the pointwise geometric package plus the
ambient closed forms (curvature, soliton tensor, weight derivatives).  Both
sides are evaluated independently at each sample point and the residual is
|LHS - RHS|; nothing is algebraically pre-simplified.

The checks are only meaningful on weighted-minimal charts, which is enforced
as a precondition rather than silently reported as a residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import ambient, jets, operators
from .errors import ArgumentError, PreconditionError
from .hypersurface import (
    GeometryAtPoint,
    ImmersionChart,
    evaluate_geometry_jets,
    geometry_at_point,
)

_FMIN_SAMPLE_TOL = 1e-8


# -- identity catalog -----------------------------------------------------------

@dataclass(frozen=True)
class IdentityInfo:
    name: str
    statement: str
    requires: str       # any | cylinder | gaussian | soliton
    jet_order: int
    laplacian_field: str | None  # field whose drift Laplacian the LHS uses


CATALOG: dict[str, IdentityInfo] = {}


def _register(name, statement, requires, jet_order, laplacian_field):
    CATALOG[name] = IdentityInfo(name, statement, requires, jet_order,
                                 laplacian_field)


_register(
    "FLAP_H",
    "D_f H = 2 sum_i d3f(i,nu,i) - sum_i d3f(nu,i,i) + 2 sum_ij a_ij d2f(i,j)"
    " - Ricf(nu,nu) H - |A|^2 H",
    "any", 4, "H",
)
_register(
    "LF_H",
    "L_f H = 2 sum_i d3f(i,nu,i) - sum_i d3f(nu,i,i) + 2 sum_ij a_ij d2f(i,j)",
    "any", 4, "H",
)
_register(
    "SIMONS_FULL",
    "(1/2) D_f |A|^2 = |grad A|^2 + 2 sum a_ij a_ik Ricf(j,k) - Ricf(nu,nu)|A|^2"
    " - |A|^4 + 2 sum a_ij Ricf(i,nu;j) - sum a_ij Ricf(i,j;nu)"
    " + sum a_ij Rm(i,nu,j,nu;nu) - 2 sum a_ij a_ik Rm(j,nu,k,nu)"
    " - 2 sum a_ij a_lk Rm(i,l,j,k)",
    "any", 4, "A2",
)
_register(
    "SIMONS_SOLITON",
    "(1/2) D_f |A|^2 = |grad A|^2 + C |A|^2 - |A|^4 + sum a_ij Rm(i,nu,j,nu;nu)"
    " - 2 sum a_ij a_ik Rm(j,nu,k,nu) - 2 sum a_ij a_lk Rm(i,l,j,k)",
    "soliton", 4, "A2",
)
_register(
    "ALPHA_LAW",
    "D_f alpha = Ricf(X,nu) - |A|^2 alpha - Ricf(nu,nu) alpha;"
    "  L_f alpha = Ricf(X,nu)   (X the parallel field)",
    "any", 3, "alpha",
)
_register(
    "ALPHA_SOLITON",
    "L_f alpha = C alpha",
    "soliton", 3, "alpha",
)
_register(
    "CYL_DALPHA2",
    "(1/2) D_f alpha^2 = |grad alpha|^2 - |A|^2 alpha^2",
    "cylinder", 3, "alpha_squared",
)
_register(
    "CYL_DH2",
    "(1/2) D_f H^2 = |grad H|^2 - (|A|^2 + C) H^2 + C <grad alpha^2, grad f>",
    "cylinder", 4, "H_squared",
)
_register(
    "CYL_DA2",
    "(1/2) D_f |A|^2 = |grad A|^2 + |A|^2 (C - |A|^2)"
    " - (2/a^2)(|grad alpha|^2 - alpha^2 |A|^2)"
    " - (2/a^2)(2 C f alpha^2 - <grad alpha^2, grad f>)",
    "cylinder", 4, "A2",
)
_register(
    "SHRINKER_H2",
    "(1/2) D_f H^2 = |grad H|^2 + (1/2 - |A|^2) H^2",
    "gaussian", 4, "H_squared",
)
_register(
    "SHRINKER_A2",
    "(1/2) D_f |A|^2 = |grad A|^2 + (1/2 - |A|^2) |A|^2",
    "gaussian", 4, "A2",
)
_register(
    "SHRINKER_LFH",
    "L_f H = H",
    "gaussian", 4, "H",
)
_register(
    "HEIGHT",
    "|grad t|^2 = 1 - alpha^2",
    "cylinder", 2, None,
)
_register(
    "DELTAF_F",
    "D_f f = C (1 - alpha^2) - 2 C f",
    "cylinder", 2, "f_restricted",
)

IDENTITY_NAMES = tuple(CATALOG)


def list_identities() -> list[IdentityInfo]:
    """Static catalog: identity id, statement, required model, jet order."""
    return list(CATALOG.values())


def _compatible(info: IdentityInfo, model: ambient.AmbientModel) -> bool:
    if info.requires == "any" or info.requires == "soliton":
        return True  # both built-in models are gradient solitons
    if info.requires == "cylinder":
        return isinstance(model, ambient.SphereCylinder)
    if info.requires == "gaussian":
        return isinstance(model, ambient.GaussianSpace)
    raise ArgumentError(f"bad requirement tag {info.requires!r}")


# -- evaluation context ----------------------------------------------------------

class IdentityContext:
    """Everything the residual formulas need at one chart point."""

    def __init__(self, chart: ImmersionChart, u, order: int = 4):
        self.geo = evaluate_geometry_jets(chart, u, order)
        self.gp: GeometryAtPoint = geometry_at_point(self.geo)
        self.model = chart.model
        self.n = chart.dim
        self.frame = self.gp.frame
        self.C = self.model.soliton_constant
        self.a = self.gp.a
        self.A2 = self.gp.A2
        self.H = self.gp.H
        self.alpha = self.gp.alpha
        _, self.w_grad, self.w_hess, self.w_third = ambient.weight_derivatives(
            self.model, self.gp.point, self.frame
        )
        k = self.n + 1
        self.ricf = np.array([
            [ambient.bakry_emery_ricci(self.model, self.frame, i, j)
             for j in range(k)] for i in range(k)
        ])
        X = ambient.parallel_field(self.model)
        self.X_frame = self.frame.vectors @ X

    def lap(self, F: jets.Jet) -> float:
        return operators.laplacian_f_value(self.geo, F)

    def grad_ip(self, Fa: jets.Jet, Fb: jets.Jet) -> float:
        return operators.gradient_inner_value(self.geo, Fa, Fb)

    def rm(self, i, j, k, l) -> float:
        return ambient.curvature(self.model, self.frame, i, j, k, l)

    def rm_deriv(self, *idx) -> float:
        return ambient.curvature_derivative(self.model, self.frame, *idx)

    def ricf_deriv(self, *idx) -> float:
        return ambient.bakry_emery_ricci_derivative(self.model, self.frame, *idx)

    def ricf_X_nu(self) -> float:
        nu = self.n
        return float(sum(self.X_frame[i] * self.ricf[i, nu]
                         for i in range(self.n + 1)))


# -- residual formulas -------------------------------------------------------------

def _weight_terms(ctx: IdentityContext) -> float:
    n, nu = ctx.n, ctx.n
    t1 = 2.0 * sum(ctx.w_third[i, nu, i] for i in range(n))
    t2 = -sum(ctx.w_third[nu, i, i] for i in range(n))
    t3 = 2.0 * float(np.sum(ctx.a * ctx.w_hess[:n, :n]))
    return t1 + t2 + t3


def _curvature_terms(ctx: IdentityContext) -> float:
    n, nu = ctx.n, ctx.n
    a = ctx.a
    term_d = sum(a[i, j] * ctx.rm_deriv(i, nu, j, nu, nu)
                 for i in range(n) for j in range(n))
    term1 = -2.0 * sum(a[i, j] * a[i, k] * ctx.rm(j, nu, k, nu)
                       for i in range(n) for j in range(n) for k in range(n))
    term2 = -2.0 * sum(a[i, j] * a[l, k] * ctx.rm(i, l, j, k)
                       for i in range(n) for j in range(n)
                       for k in range(n) for l in range(n))
    return term_d + term1 + term2


def _res_flap_h(ctx):
    nu = ctx.n
    lhs = ctx.lap(ctx.geo.H)
    rhs = _weight_terms(ctx) - ctx.ricf[nu, nu] * ctx.H - ctx.A2 * ctx.H
    return lhs, rhs


def _res_lf_h(ctx):
    nu = ctx.n
    lhs = ctx.lap(ctx.geo.H) + (ctx.A2 + ctx.ricf[nu, nu]) * ctx.H
    return lhs, _weight_terms(ctx)


def _res_simons_full(ctx):
    n, nu = ctx.n, ctx.n
    a = ctx.a
    lhs = 0.5 * ctx.lap(ctx.geo.A2)
    rhs = ctx.gp.nablaA2
    rhs += 2.0 * sum(a[i, j] * a[i, k] * ctx.ricf[j, k]
                     for i in range(n) for j in range(n) for k in range(n))
    rhs += -ctx.ricf[nu, nu] * ctx.A2 - ctx.A2**2
    rhs += 2.0 * sum(a[i, j] * ctx.ricf_deriv(i, nu, j)
                     for i in range(n) for j in range(n))
    rhs += -sum(a[i, j] * ctx.ricf_deriv(i, j, nu)
                for i in range(n) for j in range(n))
    rhs += _curvature_terms(ctx)
    return lhs, rhs


def _res_simons_soliton(ctx):
    lhs = 0.5 * ctx.lap(ctx.geo.A2)
    rhs = ctx.gp.nablaA2 + ctx.C * ctx.A2 - ctx.A2**2 + _curvature_terms(ctx)
    return lhs, rhs


def _res_alpha_law(ctx):
    nu = ctx.n
    rxn = ctx.ricf_X_nu()
    lhs1 = ctx.lap(ctx.geo.alpha)
    rhs1 = rxn - ctx.A2 * ctx.alpha - ctx.ricf[nu, nu] * ctx.alpha
    lhs2 = lhs1 + (ctx.A2 + ctx.ricf[nu, nu]) * ctx.alpha
    rhs2 = rxn
    if abs(lhs2 - rhs2) > abs(lhs1 - rhs1):
        return lhs2, rhs2
    return lhs1, rhs1


def _res_alpha_soliton(ctx):
    nu = ctx.n
    lhs = ctx.lap(ctx.geo.alpha) + (ctx.A2 + ctx.ricf[nu, nu]) * ctx.alpha
    return lhs, ctx.C * ctx.alpha


def _res_cyl_dalpha2(ctx):
    al = ctx.geo.alpha
    lhs = 0.5 * ctx.lap(al * al)
    rhs = ctx.grad_ip(al, al) - ctx.A2 * ctx.alpha**2
    return lhs, rhs


def _res_cyl_dh2(ctx):
    Hj = ctx.geo.H
    a2j = ctx.geo.alpha * ctx.geo.alpha
    lhs = 0.5 * ctx.lap(Hj * Hj)
    rhs = ctx.grad_ip(Hj, Hj) - (ctx.A2 + ctx.C) * ctx.H**2 \
        + ctx.C * ctx.grad_ip(a2j, ctx.geo.f_field.truncate(a2j.order))
    return lhs, rhs


def _res_cyl_da2(ctx):
    kc = 1.0 / ctx.model.a**2
    al = ctx.geo.alpha
    a2j = al * al
    fj = ctx.geo.f_field
    fval = fj.value
    lhs = 0.5 * ctx.lap(ctx.geo.A2)
    rhs = ctx.gp.nablaA2 + ctx.A2 * (ctx.C - ctx.A2)
    rhs += -2.0 * kc * (ctx.grad_ip(al, al) - ctx.alpha**2 * ctx.A2)
    rhs += -2.0 * kc * (2.0 * ctx.C * fval * ctx.alpha**2
                        - ctx.grad_ip(a2j, fj.truncate(a2j.order)))
    return lhs, rhs


def _res_shrinker_h2(ctx):
    Hj = ctx.geo.H
    lhs = 0.5 * ctx.lap(Hj * Hj)
    rhs = ctx.grad_ip(Hj, Hj) + (0.5 - ctx.A2) * ctx.H**2
    return lhs, rhs


def _res_shrinker_a2(ctx):
    lhs = 0.5 * ctx.lap(ctx.geo.A2)
    rhs = ctx.gp.nablaA2 + (0.5 - ctx.A2) * ctx.A2
    return lhs, rhs


def _res_shrinker_lfh(ctx):
    nu = ctx.n
    lhs = ctx.lap(ctx.geo.H) + (ctx.A2 + ctx.ricf[nu, nu]) * ctx.H
    return lhs, ctx.H


def _res_height(ctx):
    tj = ctx.geo.t_field
    lhs = ctx.grad_ip(tj, tj)
    return lhs, 1.0 - ctx.alpha**2


def _res_deltaf_f(ctx):
    fj = ctx.geo.f_field
    lhs = ctx.lap(fj)
    rhs = ctx.C * (1.0 - ctx.alpha**2) - 2.0 * ctx.C * fj.value
    return lhs, rhs


_RESIDUALS = {
    "FLAP_H": _res_flap_h,
    "LF_H": _res_lf_h,
    "SIMONS_FULL": _res_simons_full,
    "SIMONS_SOLITON": _res_simons_soliton,
    "ALPHA_LAW": _res_alpha_law,
    "ALPHA_SOLITON": _res_alpha_soliton,
    "CYL_DALPHA2": _res_cyl_dalpha2,
    "CYL_DH2": _res_cyl_dh2,
    "CYL_DA2": _res_cyl_da2,
    "SHRINKER_H2": _res_shrinker_h2,
    "SHRINKER_A2": _res_shrinker_a2,
    "SHRINKER_LFH": _res_shrinker_lfh,
    "HEIGHT": _res_height,
    "DELTAF_F": _res_deltaf_f,
}


# -- reports -----------------------------------------------------------------------

@dataclass
class ResidualReport:
    identity: str
    statement: str
    chart_label: str
    tolerance: float
    samples: list = field(default_factory=list)  # (u, lhs, rhs, residual)
    max_residual: float = 0.0

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "statement": self.statement,
            "chart": self.chart_label,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "pass": self.passed,
            "samples": [
                {"u": list(map(float, u)), "lhs": lhs, "rhs": rhs, "residual": r}
                for (u, lhs, rhs, r) in self.samples
            ],
        }


def low_discrepancy_points(chart: ImmersionChart, count: int,
                           seed: int = 0) -> np.ndarray:
    """Scrambled Halton points mapped into the chart domain box; deterministic
    for a fixed seed."""
    if count < 1:
        raise ArgumentError("need at least one sample point")
    box = chart.sample_box()
    sampler = qmc.Halton(d=chart.dim, scramble=True, seed=seed)
    pts01 = sampler.random(count)
    return box[:, 0] + pts01 * (box[:, 1] - box[:, 0])


def check_many(names, chart: ImmersionChart, sample_points, tol: float = 1e-8,
               order: int = 4) -> list[ResidualReport]:
    """Check several identities on shared per-point contexts."""
    infos = []
    for name in names:
        if name not in CATALOG:
            raise ArgumentError(
                f"unknown identity {name!r}; known: {', '.join(IDENTITY_NAMES)}"
            )
        info = CATALOG[name]
        if not _compatible(info, chart.model):
            raise ArgumentError(
                f"identity {name} requires a {info.requires} model, chart "
                f"{chart.label!r} lives in {chart.model.label()}"
            )
        infos.append(info)
    if tol <= 0:
        raise ArgumentError("tolerance must be positive")
    pts = np.atleast_2d(np.asarray(sample_points, float))

    contexts = [IdentityContext(chart, u, order) for u in pts]
    worst_u, worst_hf = None, 0.0
    for ctx in contexts:
        hf = abs(ctx.geo.Hf.value)
        if hf > worst_hf:
            worst_hf, worst_u = hf, ctx.geo.u
    if worst_hf > _FMIN_SAMPLE_TOL:
        raise PreconditionError(
            f"chart {chart.label!r} is not weighted-minimal: |H_f| = "
            f"{worst_hf:.3e} at u = {np.asarray(worst_u).tolist()}"
        )

    reports = []
    for info in infos:
        fn = _RESIDUALS[info.name]
        rep = ResidualReport(identity=info.name, statement=info.statement,
                             chart_label=chart.label, tolerance=tol)
        for ctx in contexts:
            lhs, rhs = fn(ctx)
            res = abs(lhs - rhs)
            rep.samples.append((ctx.geo.u, float(lhs), float(rhs), float(res)))
            rep.max_residual = max(rep.max_residual, float(res))
        reports.append(rep)
    return reports


def check_identity(name: str, chart: ImmersionChart, sample_points,
                   tol: float = 1e-8) -> ResidualReport:
    """Residual report of one identity over the given sample points."""
    return check_many([name], chart, sample_points, tol)[0]


def compatible_identities(chart: ImmersionChart) -> list[str]:
    return [name for name, info in CATALOG.items()
            if _compatible(info, chart.model)]


def fd_crosscheck(name: str, chart: ImmersionChart, sample_points,
                  h: float = 1e-3) -> float:
    """Re-compute the drift Laplacian in the identity's left side by the
    divergence-form finite-difference route and return the worst deviation
    from the nested-jet value.  Identities without a Laplacian return 0."""
    info = CATALOG.get(name)
    if info is None:
        raise ArgumentError(f"unknown identity {name!r}")
    if info.laplacian_field is None:
        return 0.0
    fld = operators.field(info.laplacian_field)
    worst = 0.0
    for u in np.atleast_2d(np.asarray(sample_points, float)):
        jet_val = operators.weighted_laplacian(chart, fld, u)
        fd_val = operators.weighted_laplacian_fd(chart, fld, u, h)
        worst = max(worst, abs(jet_val - fd_val))
    return worst
