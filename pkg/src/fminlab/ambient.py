"""Weighted ambient spaces.

Two models are supported, both gradient solitons (Ric + Hess(weight) is a
constant multiple of the metric):

* ``GaussianSpace(n)``: flat R^{n+1} with weight |x|^2/4 and soliton
  constant 1/2.
* ``SphereCylinder(n, a)``: the product S^n(a) x R, realized extrinsically in
  flat R^{n+2} as {(x, t): |x| = a}, with weight (n-1) t^2 / (2 a^2) and
  soliton constant (n-1)/a^2.  The default radius a = sqrt(2(n-1)) gives
  weight t^2/4 and soliton constant 1/2.

Curvature is served from the closed form of the product metric, never
differentiated numerically; the extrinsic projection construction used by the
hypersurface pipeline is cross-checked against it in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import ArgumentError, GeometryError

_POINT_TOL = 1e-12
_TANGENT_TOL = 1e-10
_FRAME_TOL = 1e-10


def default_cylinder_radius(n: int) -> float:
    return float(np.sqrt(2.0 * (n - 1)))


@dataclass(frozen=True)
class GaussianSpace:
    """Flat space with the Gaussian weight |x|^2/4."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ArgumentError("hypersurface dimension n must be >= 2")

    kind = "gaussian"

    @property
    def flat_dim(self) -> int:
        return self.n + 1

    @property
    def soliton_constant(self) -> float:
        return 0.5

    def label(self) -> str:
        return f"gaussian:{self.n}"

    # -- points and tangency ------------------------------------------------

    def check_point(self, p: np.ndarray) -> None:
        if len(p) != self.flat_dim:
            raise ArgumentError(f"point dimension {len(p)} != {self.flat_dim}")

    def tangent_projection(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, float)

    # -- weight --------------------------------------------------------------

    def weight(self, p: np.ndarray) -> float:
        p = np.asarray(p, float)
        return 0.25 * float(p @ p)

    def weight_gradient(self, p: np.ndarray) -> np.ndarray:
        return 0.5 * np.asarray(p, float)

    def weight_jet(self, X: list[jets.Jet]) -> jets.Jet:
        out = X[0] * X[0]
        for comp in X[1:]:
            out = out + comp * comp
        return out * 0.25

    def weight_gradient_jets(self, X: list[jets.Jet]) -> list[jets.Jet]:
        return [comp * 0.5 for comp in X]

    # -- curvature ------------------------------------------------------------

    def curvature_tensor(self, u, v, w, z) -> float:
        return 0.0

    def ricci(self, frame: "OrthonormalFrame", i: int, k: int) -> float:
        return 0.0

    def hessian_f(self, frame: "OrthonormalFrame", i: int, k: int) -> float:
        return 0.5 if i == k else 0.0

    def parallel_direction(self) -> np.ndarray:
        e = np.zeros(self.flat_dim)
        e[0] = 1.0
        return e


@dataclass(frozen=True)
class SphereCylinder:
    """S^n(a) x R embedded in flat R^{n+2}; last coordinate is the height t."""

    n: int
    a: float = 0.0  # 0 means "use the default radius"

    def __post_init__(self):
        if self.n < 2:
            raise ArgumentError("hypersurface dimension n must be >= 2")
        if self.a == 0.0:
            object.__setattr__(self, "a", default_cylinder_radius(self.n))
        if self.a <= 0:
            raise ArgumentError("sphere radius must be positive")

    kind = "cylinder"

    @property
    def flat_dim(self) -> int:
        return self.n + 2

    @property
    def soliton_constant(self) -> float:
        return (self.n - 1) / self.a**2

    def label(self) -> str:
        return f"cylinder:{self.n}:{self.a:g}"

    # -- points and tangency ------------------------------------------------

    def check_point(self, p: np.ndarray) -> None:
        p = np.asarray(p, float)
        if len(p) != self.flat_dim:
            raise ArgumentError(f"point dimension {len(p)} != {self.flat_dim}")
        r = np.linalg.norm(p[:-1])
        if abs(r - self.a) > _POINT_TOL * self.a:
            raise GeometryError(
                f"point off the cylinder: | |x| - a | = {abs(r - self.a):.3e}"
            )

    def radial_unit(self, p: np.ndarray) -> np.ndarray:
        out = np.zeros(self.flat_dim)
        out[:-1] = p[:-1] / np.linalg.norm(p[:-1])
        return out

    def tangent_projection(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        r = self.radial_unit(p)
        v = np.asarray(v, float)
        return v - (v @ r) * r

    # -- weight --------------------------------------------------------------

    @property
    def _half_hess(self) -> float:
        # weight = c t^2 with 2c equal to the soliton constant
        return 0.5 * self.soliton_constant

    def weight(self, p: np.ndarray) -> float:
        return self._half_hess * float(p[-1]) ** 2

    def weight_gradient(self, p: np.ndarray) -> np.ndarray:
        out = np.zeros(self.flat_dim)
        out[-1] = self.soliton_constant * float(p[-1])
        return out

    def weight_jet(self, X: list[jets.Jet]) -> jets.Jet:
        t = X[-1]
        return t * t * self._half_hess

    def weight_gradient_jets(self, X: list[jets.Jet]) -> list[jets.Jet]:
        zero = jets.jet_constant(0.0, X[0].n_vars, X[0].order)
        out = [zero] * (self.flat_dim - 1)
        out.append(X[-1] * self.soliton_constant)
        return out

    # -- curvature ------------------------------------------------------------

    def curvature_tensor(self, u, v, w, z) -> float:
        """R(u, v, w, z) of the product metric, multilinear in flat vectors."""
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        w = np.asarray(w, float)
        z = np.asarray(z, float)
        ut, vt, wt, zt = u[-1], v[-1], w[-1], z[-1]
        uw, vz, uz, vw = u @ w, v @ z, u @ z, v @ w
        return (
            uw * vz - uz * vw
            - vt * zt * uw - ut * wt * vz
            + vt * wt * uz + ut * zt * vw
        ) / self.a**2

    def ricci(self, frame: "OrthonormalFrame", i: int, k: int) -> float:
        ti = frame.t_component(i)
        tk = frame.t_component(k)
        c = (self.n - 1) / self.a**2
        return c * ((1.0 if i == k else 0.0) - ti * tk)

    def hessian_f(self, frame: "OrthonormalFrame", i: int, k: int) -> float:
        return self.soliton_constant * frame.t_component(i) * frame.t_component(k)

    def parallel_direction(self) -> np.ndarray:
        e = np.zeros(self.flat_dim)
        e[-1] = 1.0
        return e


AmbientModel = GaussianSpace | SphereCylinder


def parse_model(spec: str) -> AmbientModel:
    """Parse a model string: 'gaussian:n' or 'cylinder:n[:a]'."""
    parts = spec.split(":")
    try:
        if parts[0] == "gaussian" and len(parts) == 2:
            return GaussianSpace(int(parts[1]))
        if parts[0] == "cylinder" and len(parts) in (2, 3):
            a = float(parts[2]) if len(parts) == 3 else 0.0
            return SphereCylinder(int(parts[1]), a)
    except ValueError as exc:
        raise ArgumentError(f"bad model string {spec!r}: {exc}") from None
    raise ArgumentError(f"bad model string {spec!r}")


@dataclass
class OrthonormalFrame:
    """An ordered orthonormal basis of the ambient tangent space at a point.

    ``vectors`` has shape (n+1, flat_dim); when attached to a hypersurface
    point the last row is the unit normal.
    """

    model: AmbientModel
    point: np.ndarray
    vectors: np.ndarray
    _t_components: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.point = np.asarray(self.point, float)
        self.vectors = np.asarray(self.vectors, float)
        self._t_components = self.vectors[:, -1].copy()

    def size(self) -> int:
        return self.vectors.shape[0]

    def t_component(self, i: int) -> float:
        """< e_i, d/dt > for the cylinder; last-coordinate component otherwise."""
        return float(self._t_components[i])

    def validate(self) -> None:
        gram = self.vectors @ self.vectors.T
        if np.abs(gram - np.eye(self.size())).max() > _FRAME_TOL:
            raise GeometryError("frame is not orthonormal")
        if isinstance(self.model, SphereCylinder):
            self.model.check_point(self.point)
            r = self.model.radial_unit(self.point)
            if np.abs(self.vectors @ r).max() > _TANGENT_TOL:
                raise GeometryError("frame vector not tangent to the cylinder")


def random_frame(model: AmbientModel, point: np.ndarray, rng: np.random.Generator) -> OrthonormalFrame:
    """A Haar-ish random orthonormal frame of the ambient tangent space."""
    m = model.flat_dim
    k = model.n + 1
    if isinstance(model, SphereCylinder):
        basis = np.linalg.qr(
            np.column_stack([model.radial_unit(point),
                             rng.standard_normal((m, k))])
        )[0][:, 1:k + 1].T
    else:
        basis = np.linalg.qr(rng.standard_normal((m, k)))[0][:, :k].T
    return OrthonormalFrame(model, point, basis)


# -- spec-facing operation wrappers -----------------------------------------

def weight_derivatives(model: AmbientModel, p: np.ndarray, frame: OrthonormalFrame):
    """Weight value and its first three covariant derivatives in the frame.

    Returns (f, grad, hess, third) with shapes (), (n+1,), (n+1, n+1),
    (n+1, n+1, n+1); the third derivative vanishes identically for both
    models.
    """
    model.check_point(np.asarray(p, float))
    k = frame.size()
    gradient = model.weight_gradient(p)
    grad = frame.vectors @ gradient
    hess = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            hess[i, j] = model.hessian_f(frame, i, j)
    third = np.zeros((k, k, k))
    return model.weight(p), grad, hess, third


def curvature(model: AmbientModel, frame: OrthonormalFrame,
              i: int, j: int, k: int, l: int) -> float:
    """Frame component R(e_i, e_j, e_k, e_l) from the closed form."""
    v = frame.vectors
    return model.curvature_tensor(v[i], v[j], v[k], v[l])


def bakry_emery_ricci(model: AmbientModel, frame: OrthonormalFrame,
                      i: int, k: int) -> float:
    """Ricci plus weight Hessian; equals soliton_constant * delta_{ik}."""
    return model.ricci(frame, i, k) + model.hessian_f(frame, i, k)


def curvature_derivative(model: AmbientModel, frame: OrthonormalFrame,
                         *indices: int) -> float:
    """Covariant derivative of the curvature tensor; zero for both models
    (flat space, respectively a symmetric product metric)."""
    return 0.0


def bakry_emery_ricci_derivative(model: AmbientModel, frame: OrthonormalFrame,
                                 *indices: int) -> float:
    """Covariant derivative of the soliton tensor; identically zero because
    both models satisfy Ric_f = C g with constant C."""
    return 0.0


def parallel_field(model: AmbientModel) -> np.ndarray:
    """The distinguished unit parallel field: d/dt on the cylinder, the first
    coordinate direction on Gaussian space."""
    return model.parallel_direction()
