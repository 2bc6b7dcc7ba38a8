"""Immersion charts and the pointwise geometric package of a hypersurface.

A chart maps n coordinates into one of the ambient models; all geometric
quantities (induced metric, unit normal, second fundamental form and its
covariant derivative, mean and weighted mean curvature, the normal component
of the distinguished parallel field) are computed through jet arithmetic, so
every derived scalar is itself available as a jet and can be differentiated
again downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import ambient, jets
from .errors import ArgumentError, GeometryError
from .expressions import Expression, load_expression

_GRAM_DET_TOL = 1e-12
_ORIENT_TOL = 1e-9


@dataclass
class ImmersionChart:
    """A local parametrization of a hypersurface inside an ambient model.

    ``map_jets`` takes the n chart coordinates as jets and returns the
    flat-space Cartesian components of the image point as jets;
    ``orientation_ref`` returns, for a chart point, a reference ambient vector
    whose inner product with the unit normal must be positive.
    """

    model: ambient.AmbientModel
    dim: int
    label: str
    domain: np.ndarray
    map_jets: Callable[[list[jets.Jet]], list[jets.Jet]]
    orientation_ref: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __post_init__(self):
        self.domain = np.asarray(self.domain, float).reshape(self.dim, 2)

    def contains(self, u: np.ndarray, slack: float = 1e-9) -> bool:
        u = np.asarray(u, float)
        return bool(
            np.all(u >= self.domain[:, 0] - slack)
            and np.all(u <= self.domain[:, 1] + slack)
        )

    def sample_box(self) -> np.ndarray:
        return self.domain


# -- jet vector helpers ------------------------------------------------------

def _jdot(a: list[jets.Jet], b: list[jets.Jet]) -> jets.Jet:
    out = a[0] * b[0]
    for x, y in zip(a[1:], b[1:]):
        out = out + x * y
    return out


def _gram_schmidt_jets(vectors: list[list[jets.Jet]]) -> list[list[jets.Jet]]:
    out: list[list[jets.Jet]] = []
    for v in vectors:
        w = list(v)
        for q in out:
            c = _jdot(w, q)
            w = [wa - c * qa for wa, qa in zip(w, q)]
        n2 = _jdot(w, w)
        if n2.value <= 1e-24:
            raise GeometryError("degenerate vector in orthonormalization")
        nrm = jets.jet_sqrt(n2)
        out.append([wa / nrm for wa in w])
    return out


def _jet_matrix_inverse(G: list[list[jets.Jet]]) -> list[list[jets.Jet]]:
    """Invert a small jet-valued matrix by Gauss-Jordan with value pivoting."""
    n = len(G)
    nv, od = G[0][0].n_vars, G[0][0].order
    A = [[G[i][j] for j in range(n)] for i in range(n)]
    I = [[jets.jet_constant(1.0 if i == j else 0.0, nv, od) for j in range(n)]
         for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(A[r][col].value))
        if abs(A[piv][col].value) < 1e-14:
            raise GeometryError("singular metric (jet inverse)")
        if piv != col:
            A[piv], A[col] = A[col], A[piv]
            I[piv], I[col] = I[col], I[piv]
        pv = A[col][col]
        A[col] = [x / pv for x in A[col]]
        I[col] = [x / pv for x in I[col]]
        for r in range(n):
            if r == col:
                continue
            f = A[r][col]
            if abs(f.value) == 0.0 and not f.coeffs.any():
                continue
            A[r] = [x - f * y for x, y in zip(A[r], A[col])]
            I[r] = [x - f * y for x, y in zip(I[r], I[col])]
    return I


# -- sphere parametrization ---------------------------------------------------

def sphere_jets(radius: float, angles: list[jets.Jet]) -> list[jets.Jet]:
    """Hyperspherical embedding of S^k(radius) in R^{k+1} from k angle jets."""
    comps = []
    running = None
    for th in angles:
        c = jets.jet_cos(th)
        comps.append(c if running is None else running * c)
        s = jets.jet_sin(th)
        running = s if running is None else running * s
    comps.append(running)
    return [c * radius for c in comps]


def _angle_box(k: int) -> np.ndarray:
    """Domain box for k hyperspherical angles, clear of the poles."""
    box = [(0.35, np.pi - 0.35)] * max(k - 1, 0)
    box.append((0.2, 2 * np.pi - 0.2))
    return np.array(box)


# -- geometry containers -------------------------------------------------------

@dataclass
class GeometryJets:
    """Jet-valued geometry of a chart at one point.

    Orders: the immersion components carry the requested order p, tangents
    and the normal p-1, and second-fundamental-form quantities p-2.
    """

    chart: ImmersionChart
    u: np.ndarray
    order: int
    coords: list
    X: list
    Xval: np.ndarray
    T: list            # T[i][A], order p-1
    Tval: np.ndarray   # (n, M)
    g: list            # g[i][j], order p-1
    gval: np.ndarray
    nu: list           # normal components, order p-1
    nuval: np.ndarray
    h: list            # h[i][j] (coordinate basis), order p-2
    hval: np.ndarray
    ginv: list         # jets at order p-2
    ginv_val: np.ndarray
    H: jets.Jet
    A2: jets.Jet
    alpha: jets.Jet
    Hf: jets.Jet
    f_field: jets.Jet
    t_field: jets.Jet | None

    @property
    def model(self):
        return self.chart.model

    @property
    def dim(self) -> int:
        return self.chart.dim


@dataclass
class GeometryAtPoint:
    """Value-level geometric package at a chart point.

    Tensor components (``a``, ``nablaA``, gradients) are expressed in the
    orthonormalized tangent frame; ``frame`` bundles that frame with the unit
    normal in its last slot for ambient curvature calls.
    """

    chart: ImmersionChart
    u: np.ndarray
    point: np.ndarray
    tangent_frame: np.ndarray      # (n, M)
    normal: np.ndarray
    metric: np.ndarray             # chart-basis g_ij
    metric_inv: np.ndarray
    frame_coeffs: np.ndarray       # rows: frame vectors in the chart basis
    a: np.ndarray                  # (n, n)
    nablaA: np.ndarray | None      # (n, n, n), a_{ij,k}
    H: float
    Hf: float
    A2: float
    alpha: float
    gradH: np.ndarray | None
    grad_alpha: np.ndarray | None
    grad_t: np.ndarray | None
    frame: ambient.OrthonormalFrame
    jets: GeometryJets

    @property
    def nablaA2(self) -> float:
        if self.nablaA is None:
            raise ArgumentError("nablaA needs jet order >= 3")
        return float(np.sum(self.nablaA**2))


# -- the pipeline ----------------------------------------------------------------

def evaluate_geometry_jets(chart: ImmersionChart, u, order: int = 4) -> GeometryJets:
    n = chart.dim
    u = np.asarray(u, float)
    if len(u) != n:
        raise ArgumentError(f"chart point has {len(u)} coordinates, expected {n}")
    if not chart.contains(u):
        raise ArgumentError(f"point {u} outside the chart domain")
    if order < 2:
        raise ArgumentError("geometry needs jet order >= 2")

    model = chart.model
    M = model.flat_dim
    coords = [jets.jet_variable(u[i], i, n, order) for i in range(n)]
    X = chart.map_jets(coords)
    if len(X) != M:
        raise GeometryError(f"chart map returned {len(X)} components, expected {M}")
    Xval = np.array([x.value for x in X])
    model.check_point(Xval)

    T = [[X[A].partial_jet(i) for A in range(M)] for i in range(n)]
    Tval = np.array([[t.value for t in row] for row in T])

    g = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            gij = _jdot(T[i], T[j])
            g[i][j] = gij
            g[j][i] = gij
    gval = np.array([[g[i][j].value for j in range(n)] for i in range(n)])
    if np.linalg.det(gval) <= _GRAM_DET_TOL:
        raise GeometryError("degenerate induced metric (Gram determinant too small)")

    # unit normal: value-level null direction, oriented, then reproduced as a
    # jet by projecting that constant vector off the tangent (and radial) span
    rows = [Tval[i] for i in range(n)]
    is_cyl = isinstance(model, ambient.SphereCylinder)
    if is_cyl:
        rows.append(model.radial_unit(Xval))
    Qfull = np.linalg.qr(np.array(rows).T, mode="complete")[0]
    nu0 = Qfull[:, -1]
    ref = np.asarray(chart.orientation_ref(u, Xval), float)
    sgn = float(nu0 @ ref)
    if abs(sgn) < _ORIENT_TOL * (np.linalg.norm(ref) + 1e-30):
        raise GeometryError("orientation rule is ambiguous at this point")
    nu0 = np.sign(sgn) * nu0

    basis = [list(row) for row in T]
    if is_cyl:
        inv_a = 1.0 / model.a
        radial = [X[A].truncate(order - 1) * inv_a for A in range(M - 1)]
        radial.append(jets.jet_constant(0.0, n, order - 1))
        basis.append(radial)
    basis.append([jets.jet_constant(c, n, order - 1) for c in nu0])
    nu = _gram_schmidt_jets(basis)[-1]
    nuval = np.array([x.value for x in nu])

    # second fundamental form h_ij = -<nu, d_i d_j X> in the chart basis
    p2 = order - 2
    nu_t = [x.truncate(p2) for x in nu]
    h = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            d2 = [X[A].partial_jet(i).partial_jet(j) for A in range(M)]
            hij = -_jdot(nu_t, d2)
            h[i][j] = hij
            h[j][i] = hij
    hval = np.array([[h[i][j].value for j in range(n)] for i in range(n)])

    g_t = [[g[i][j].truncate(p2) for j in range(n)] for i in range(n)]
    ginv = _jet_matrix_inverse(g_t)
    ginv_val = np.array([[ginv[i][j].value for j in range(n)] for i in range(n)])

    hg = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = ginv[i][0] * h[0][j]
            for k in range(1, n):
                acc = acc + ginv[i][k] * h[k][j]
            hg[i][j] = acc
    H = hg[0][0]
    for i in range(1, n):
        H = H + hg[i][i]
    A2 = hg[0][0] * hg[0][0]
    first = True
    for i in range(n):
        for j in range(n):
            if i == 0 and j == 0:
                continue
            A2 = A2 + hg[i][j] * hg[j][i]
    del first

    pfield = ambient.parallel_field(model)
    alpha = nu[0] * float(pfield[0])
    for A in range(1, M):
        if pfield[A] != 0.0:
            alpha = alpha + nu[A] * float(pfield[A])

    f_field = model.weight_jet(X)
    wg = model.weight_gradient_jets(X)
    ip = wg[0].truncate(p2) * nu_t[0]
    for A in range(1, M):
        ip = ip + wg[A].truncate(p2) * nu_t[A]
    Hf = H - ip

    t_field = X[-1] if is_cyl else None

    return GeometryJets(
        chart=chart, u=u, order=order, coords=coords, X=X, Xval=Xval,
        T=T, Tval=Tval, g=g, gval=gval, nu=nu, nuval=nuval, h=h, hval=hval,
        ginv=ginv, ginv_val=ginv_val, H=H, A2=A2, alpha=alpha, Hf=Hf,
        f_field=f_field, t_field=t_field,
    )


def _frame_from_tangents(Tval: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic Gram-Schmidt of the chart tangents; returns the
    orthonormal frame rows E and the coefficient matrix B with E = B T."""
    n, M = Tval.shape
    E = np.zeros((n, M))
    B = np.zeros((n, n))
    for i in range(n):
        w = Tval[i].copy()
        c = np.zeros(n)
        c[i] = 1.0
        for j in range(i):
            proj = w @ E[j]
            w -= proj * E[j]
            c -= proj * B[j]
        nrm = np.linalg.norm(w)
        if nrm <= 1e-12:
            raise GeometryError("degenerate tangent basis")
        E[i] = w / nrm
        B[i] = c / nrm
    return E, B


def christoffels(geo: GeometryJets) -> np.ndarray:
    """Chart-basis Christoffel symbols Gamma[k, i, j] from first metric jets."""
    n = geo.dim
    dg = np.empty((n, n, n))
    for k in range(n):
        ek = tuple(1 if m == k else 0 for m in range(n))
        for i in range(n):
            for j in range(n):
                dg[k, i, j] = jets.extract_partial(geo.g[i][j], ek)
    ginv = np.linalg.inv(geo.gval)
    Gam = np.empty((n, n, n))
    for m in range(n):
        for i in range(n):
            for j in range(n):
                s = 0.0
                for l in range(n):
                    s += ginv[m, l] * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j])
                Gam[m, i, j] = 0.5 * s
    return Gam


def evaluate_geometry(chart: ImmersionChart, u, order: int = 4) -> GeometryAtPoint:
    """Full pointwise package; tensor components in the orthonormal frame."""
    geo = evaluate_geometry_jets(chart, u, order)
    return geometry_at_point(geo)


def geometry_at_point(geo: GeometryJets) -> GeometryAtPoint:
    n = geo.dim
    E, B = _frame_from_tangents(geo.Tval)
    a = B @ geo.hval @ B.T
    a = 0.5 * (a + a.T)

    nablaA = None
    gradH = None
    if geo.order >= 3:
        Gam = christoffels(geo)
        dh = np.empty((n, n, n))
        for k in range(n):
            ek = tuple(1 if m == k else 0 for m in range(n))
            for i in range(n):
                for j in range(n):
                    dh[k, i, j] = jets.extract_partial(geo.h[i][j], ek)
        hcov = np.empty((n, n, n))  # hcov[k, i, j] = h_{ij;k}
        for k in range(n):
            hcov[k] = dh[k] - np.einsum("mi,mj->ij", Gam[:, k, :], geo.hval) \
                - np.einsum("mj,im->ij", Gam[:, k, :], geo.hval)
        nablaA = np.einsum("ip,jq,kr,rpq->ijk", B, B, B, hcov)
        dH = np.array([
            jets.extract_partial(geo.H, tuple(1 if m == k else 0 for m in range(n)))
            for k in range(n)
        ])
        gradH = B @ dH

    dalpha = np.array([
        jets.extract_partial(geo.alpha, tuple(1 if m == k else 0 for m in range(n)))
        for k in range(n)
    ])
    grad_alpha = B @ dalpha

    grad_t = None
    if geo.t_field is not None:
        dt = np.array([
            jets.extract_partial(geo.t_field, tuple(1 if m == k else 0 for m in range(n)))
            for k in range(n)
        ])
        grad_t = B @ dt

    frame = ambient.OrthonormalFrame(
        geo.model, geo.Xval, np.vstack([E, geo.nuval])
    )

    return GeometryAtPoint(
        chart=geo.chart, u=geo.u, point=geo.Xval,
        tangent_frame=E, normal=geo.nuval,
        metric=geo.gval, metric_inv=geo.ginv_val, frame_coeffs=B,
        a=a, nablaA=nablaA,
        H=geo.H.value, Hf=geo.Hf.value, A2=geo.A2.value, alpha=geo.alpha.value,
        gradH=gradH, grad_alpha=grad_alpha, grad_t=grad_t,
        frame=frame, jets=geo,
    )


def fminimality_residual(chart: ImmersionChart, u, order: int = 2) -> float:
    """|H - <grad(weight), normal>| at a chart point; zero characterizes the
    hypersurfaces this package's identity layer applies to."""
    geo = evaluate_geometry_jets(chart, u, order)
    return abs(geo.Hf.value)


def codazzi_defect(gp: GeometryAtPoint) -> float:
    """max_{ijk} | a_{ik,j} - a_{ij,k} - R(nu, e_i, e_k, e_j) |."""
    if gp.nablaA is None:
        raise ArgumentError("codazzi_defect needs jet order >= 3")
    n = gp.chart.dim
    model = gp.chart.model
    fr = gp.frame
    worst = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                lhs = gp.nablaA[i, k, j] - gp.nablaA[i, j, k]
                rhs = ambient.curvature(model, fr, n, i, k, j)
                worst = max(worst, abs(lhs - rhs))
    return worst


def reparametrized(chart: ImmersionChart, center, Q) -> ImmersionChart:
    """Affine coordinate change v -> center + Q v; scalars are invariant under
    it while frames rotate, which the tests exploit."""
    center = np.asarray(center, float)
    Q = np.asarray(Q, float)
    n = chart.dim

    def map_jets(coords):
        nv, od = coords[0].n_vars, coords[0].order
        u_jets = []
        for i in range(n):
            acc = jets.jet_constant(center[i], nv, od)
            for j in range(n):
                if Q[i, j] != 0.0:
                    acc = acc + coords[j] * float(Q[i, j])
            u_jets.append(acc)
        return chart.map_jets(u_jets)

    def orientation_ref(v, Xval):
        return chart.orientation_ref(center + Q @ np.asarray(v, float), Xval)

    half = np.full(n, 10.0)
    return ImmersionChart(
        model=chart.model, dim=n, label=chart.label + "|reparam",
        domain=np.column_stack([-half, half]),
        map_jets=map_jets, orientation_ref=orientation_ref,
    )


# -- built-in charts ------------------------------------------------------------

def slice_chart(n: int, a: float = 0.0) -> ImmersionChart:
    """The totally geodesic sphere factor at height zero in the cylinder."""
    model = ambient.SphereCylinder(n, a)

    def map_jets(coords):
        X = sphere_jets(model.a, coords)
        X.append(jets.jet_constant(0.0, coords[0].n_vars, coords[0].order))
        return X

    def orientation_ref(u, Xval):
        return ambient.parallel_field(model)

    return ImmersionChart(model, n, f"slice:n={n}", _angle_box(n),
                          map_jets, orientation_ref)


def graph_chart(expr: Expression | str, n: int, a: float = 0.0,
                label: str | None = None) -> ImmersionChart:
    """Height graph t = phi(angles) over the sphere factor of the cylinder."""
    if isinstance(expr, str):
        expr = Expression(expr)
    model = ambient.SphereCylinder(n, a)

    def map_jets(coords):
        X = sphere_jets(model.a, coords)
        X.append(expr(coords))
        return X

    def orientation_ref(u, Xval):
        return ambient.parallel_field(model)

    return ImmersionChart(model, n, label or f"graph:n={n}:{expr.text}",
                          _angle_box(n), map_jets, orientation_ref)


def equator_cylinder_chart(n: int, a: float = 0.0) -> ImmersionChart:
    """The totally geodesic product of an equator sphere with the height line."""
    model = ambient.SphereCylinder(n, a)

    def map_jets(coords):
        angles, t = coords[:-1], coords[-1]
        X = sphere_jets(model.a, angles)        # S^{n-1}(a) in the first n slots
        X.append(jets.jet_constant(0.0, t.n_vars, t.order))
        X.append(t)
        return X

    def orientation_ref(u, Xval):
        ref = np.zeros(model.flat_dim)
        ref[model.flat_dim - 2] = 1.0           # the suppressed sphere direction
        return ref

    box = np.vstack([_angle_box(n - 1), [(-2.0, 2.0)]])
    return ImmersionChart(model, n, f"equator-cylinder:n={n}", box,
                          map_jets, orientation_ref)


def shrinker_sphere_chart(n: int) -> ImmersionChart:
    """The round sphere of radius sqrt(2n) in Gaussian space, outward normal."""
    model = ambient.GaussianSpace(n)
    radius = float(np.sqrt(2.0 * n))

    def map_jets(coords):
        return sphere_jets(radius, coords)

    def orientation_ref(u, Xval):
        return Xval

    return ImmersionChart(model, n, f"shrinker-sphere:n={n}", _angle_box(n),
                          map_jets, orientation_ref)


def shrinker_cylinder_chart(n: int) -> ImmersionChart:
    """S^{n-1}(sqrt(2(n-1))) x R in Gaussian space, outward horizontal normal."""
    model = ambient.GaussianSpace(n)
    radius = float(np.sqrt(2.0 * (n - 1)))

    def map_jets(coords):
        angles, z = coords[:-1], coords[-1]
        X = sphere_jets(radius, angles)
        X.append(z)
        return X

    def orientation_ref(u, Xval):
        ref = Xval.copy()
        ref[-1] = 0.0
        return ref

    box = np.vstack([_angle_box(n - 1), [(-2.0, 2.0)]])
    return ImmersionChart(model, n, f"shrinker-cylinder:n={n}", box,
                          map_jets, orientation_ref)


CHART_NAMES = ("slice", "equator-cylinder", "shrinker-sphere",
               "shrinker-cylinder", "graph:<file>", "profile:<file>")


def make_chart(spec: str, n: int = 2, a: float = 0.0) -> ImmersionChart:
    """Build a chart from its CLI name."""
    if spec == "slice":
        return slice_chart(n, a)
    if spec == "equator-cylinder":
        return equator_cylinder_chart(n, a)
    if spec == "shrinker-sphere":
        return shrinker_sphere_chart(n)
    if spec == "shrinker-cylinder":
        return shrinker_cylinder_chart(n)
    if spec.startswith("graph:"):
        return graph_chart(load_expression(spec[len("graph:"):]), n, a)
    if spec.startswith("profile:"):
        from . import rotsym

        curve = rotsym.load_profile(spec[len("profile:"):])
        return rotsym.profile_chart(curve)
    raise ArgumentError(
        f"unknown surface {spec!r}; available: {', '.join(CHART_NAMES)}"
    )
