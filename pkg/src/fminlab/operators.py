"""Drift Laplacian and stability operator on scalar fields over a chart.

The drift (weighted) Laplacian is ``D_f u = Lap(u) - <grad f, grad u>`` with f
the ambient weight restricted to the hypersurface; the stability operator adds
the zeroth-order potential ``|A|^2 + Ric_f(nu, nu)``.

Fields whose definition itself consumes derivatives of the immersion (H,
|A|^2) are differentiated by nesting: evaluating the field through the jet
pipeline at a high enough order hands the Laplacian an order-2 jet of the
field, so there is a single differentiation mechanism and no finite-difference
noise.  The ``*_fd`` variant below recomputes the outer divergence by central
differences and exists purely as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import ambient, jets
from .errors import ArgumentError, CapabilityError
from .expressions import Expression
from .hypersurface import (
    GeometryJets,
    ImmersionChart,
    christoffels,
    evaluate_geometry_jets,
    geometry_at_point,
)


@dataclass(frozen=True)
class ScalarField:
    """A scalar field on a chart, evaluated through the geometry jets.

    ``depth`` counts how many immersion derivatives the field consumes; the
    drift Laplacian then needs immersion jets of order ``depth + 2``.
    """

    kind: str
    depth: int
    evaluate: Callable[[GeometryJets], jets.Jet]

    def min_order(self) -> int:
        return self.depth + 2


def _field_height(geo: GeometryJets) -> jets.Jet:
    if geo.t_field is None:
        raise ArgumentError("height field needs a cylinder-model chart")
    return geo.t_field


FIELDS: dict[str, ScalarField] = {
    "height_t": ScalarField("height_t", 0, _field_height),
    "alpha": ScalarField("alpha", 1, lambda geo: geo.alpha),
    "H": ScalarField("H", 2, lambda geo: geo.H),
    "H_squared": ScalarField("H_squared", 2, lambda geo: geo.H * geo.H),
    "A2": ScalarField("A2", 2, lambda geo: geo.A2),
    "alpha_squared": ScalarField("alpha_squared", 1,
                                 lambda geo: geo.alpha * geo.alpha),
    "f_restricted": ScalarField("f_restricted", 0, lambda geo: geo.f_field),
}


def field(kind: str) -> ScalarField:
    try:
        return FIELDS[kind]
    except KeyError:
        raise ArgumentError(
            f"unknown field {kind!r}; known: {', '.join(sorted(FIELDS))} "
            "or custom:<expression>"
        ) from None


def custom_field(expr: Expression | str) -> ScalarField:
    """A field given by an expression in the chart coordinates u1..uN."""
    if isinstance(expr, str):
        expr = Expression(expr)
    return ScalarField(f"custom:{expr.text}", 0, lambda geo: expr(geo.coords))


def constant_field(value: float) -> ScalarField:
    return ScalarField(f"const:{value:g}", 0,
                       lambda geo: jets.jet_constant(
                           value, geo.coords[0].n_vars, geo.coords[0].order))


# -- value-level assembly -----------------------------------------------------

def _unit(k: int, n: int) -> tuple[int, ...]:
    return tuple(1 if m == k else 0 for m in range(n))


def laplacian_f_value(geo: GeometryJets, F: jets.Jet) -> float:
    """Drift Laplacian of a field jet at the base point of ``geo``."""
    if F.order < 2:
        raise CapabilityError(
            f"field jet order {F.order} < 2; raise the immersion jet order"
        )
    n = geo.dim
    ginv = np.linalg.inv(geo.gval)
    Gam = christoffels(geo)
    dF = np.array([jets.extract_partial(F, _unit(k, n)) for k in range(n)])
    d2F = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            beta = tuple(
                (1 if m == i else 0) + (1 if m == j else 0) for m in range(n)
            )
            d2F[i, j] = d2F[j, i] = jets.extract_partial(F, beta)
    df = np.array([jets.extract_partial(geo.f_field, _unit(k, n))
                   for k in range(n)])
    lap = float(np.einsum("ij,ij->", ginv, d2F - np.einsum("kij,k->ij", Gam, dF)))
    drift = float(dF @ ginv @ df)
    return lap - drift


def gradient_inner_value(geo: GeometryJets, Fa: jets.Jet, Fb: jets.Jet) -> float:
    """<grad Fa, grad Fb> of two field jets at the base point."""
    n = geo.dim
    da = np.array([jets.extract_partial(Fa, _unit(k, n)) for k in range(n)])
    db = np.array([jets.extract_partial(Fb, _unit(k, n)) for k in range(n)])
    return float(da @ np.linalg.inv(geo.gval) @ db)


def stability_potential(geo: GeometryJets) -> float:
    """|A|^2 + Ric_f(nu, nu) at the base point, assembled from the ambient
    Ricci closed form plus the weight Hessian."""
    gp = geometry_at_point(geo)
    n = geo.dim
    ric_nn = ambient.bakry_emery_ricci(geo.model, gp.frame, n, n)
    return geo.A2.value + ric_nn


# -- public operator entry points ----------------------------------------------

def weighted_laplacian(chart: ImmersionChart, fld: ScalarField, u,
                       order: int | None = None) -> float:
    """Drift Laplacian of the field at a chart point."""
    need = fld.min_order()
    if order is None:
        order = need
    if order < need:
        raise CapabilityError(
            f"field {fld.kind!r} needs immersion jets of order {need}, got {order}"
        )
    if order > jets.MAX_ORDER:
        raise CapabilityError(
            f"field {fld.kind!r} needs jet order {order} > {jets.MAX_ORDER}"
        )
    geo = evaluate_geometry_jets(chart, u, order)
    return laplacian_f_value(geo, fld.evaluate(geo))


def lf_apply(chart: ImmersionChart, fld: ScalarField, u,
             order: int | None = None) -> float:
    """Stability operator: drift Laplacian plus (|A|^2 + Ric_f(nu,nu)) u."""
    need = fld.min_order()
    if order is None:
        order = need
    if order < need:
        raise CapabilityError(
            f"field {fld.kind!r} needs immersion jets of order {need}, got {order}"
        )
    geo = evaluate_geometry_jets(chart, u, order)
    F = fld.evaluate(geo)
    return laplacian_f_value(geo, F) + stability_potential(geo) * F.value


# -- finite-difference cross-check ----------------------------------------------

def weighted_laplacian_fd(chart: ImmersionChart, fld: ScalarField, u,
                          h: float = 1e-3) -> float:
    """Drift Laplacian recomputed in divergence form with a central-difference
    outer derivative:

        D_f u = (1/W) d_i ( W g^{ij} d_j u ),   W = sqrt(det g) e^{-f}.

    The flux at each stencil point uses exact jet gradients, so only the outer
    derivative carries O(h^2) error.  Used as an independent spot check of the
    nested-jet pathway.
    """
    u = np.asarray(u, float)
    n = chart.dim
    inner_order = max(2, fld.depth + 1)

    def flux(v: np.ndarray) -> np.ndarray:
        geo = evaluate_geometry_jets(chart, v, inner_order)
        F = fld.evaluate(geo)
        dF = np.array([jets.extract_partial(F, _unit(k, n)) for k in range(n)])
        ginv = np.linalg.inv(geo.gval)
        W = np.sqrt(np.linalg.det(geo.gval)) * np.exp(-geo.f_field.value)
        return W * (ginv @ dF), W

    div = 0.0
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fp, _ = flux(u + e)
        fm, _ = flux(u - e)
        div += (fp[i] - fm[i]) / (2 * h)
    _, W0 = flux(u)
    return div / W0
