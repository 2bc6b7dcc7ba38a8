"""Rotationally symmetric weighted-minimal hypersurfaces in the cylinder.

A profile is the arclength-parametrized curve (rho(s), t(s)) in the flat
coordinate strip [0, pi*a] x R, with tangent angle theta (rho' = cos theta,
t' = sin theta); rotating it through the orbit spheres of radius
a*sin(rho/a) sweeps out a hypersurface of S^n(a) x R.  With the unit normal
(-sin theta, cos theta) in the (rho, t) strip, the principal curvatures are

    kappa_prof = -theta'                    (profile direction, once)
    kappa_orb  = -(sin theta / a) cot(rho/a)   (orbit directions, n-1 times)

and weighted minimality H = C t cos(theta) (C the soliton constant) gives the
first-order system integrated here.  The theta-component of the right-hand
side vanishes on the slice (t = 0, theta = 0), so the slice is an exact
solution; the orbit term is singular on the rotation axes, where launches and
arrivals use the second-order Taylor expansion of the regular solution.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import useries as us
from .ambient import SphereCylinder
from .errors import (
    ArgumentError,
    GeometryError,
    IntegrationError,
    NumericError,
    PreconditionError,
)
from .hypersurface import ImmersionChart, _angle_box, fminimality_residual, sphere_jets
from . import jets

DENSE_ORDER = 4
_AXIS_EPS = 1e-9
_FMIN_TOL = 1e-7


def unit_sphere_area(k: int) -> float:
    """Surface area of the unit k-sphere."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


# -- the profile ODE -----------------------------------------------------------

def _rhs(state: np.ndarray, model: SphereCylinder) -> np.ndarray:
    rho, t, th = state
    n, a, C = model.n, model.a, model.soliton_constant
    sin_th, cos_th = math.sin(th), math.cos(th)
    sx = math.sin(rho / a)
    if abs(sx) < 1e-13:
        if abs(sin_th) < 1e-12:
            orb = 0.0
        else:
            raise IntegrationError("orbit curvature is singular at the axis")
    else:
        orb = -(n - 1) * sin_th * (math.cos(rho / a) / sx) / a
    return np.array([cos_th, sin_th, orb - C * t * cos_th])


def fmin_ode_step(state, model: SphereCylinder) -> tuple[float, float, float]:
    """Right-hand side (rho', t', theta') of the profile system.

    Valid for rho strictly inside (0, pi*a); axis points are handled by the
    series-regularized launch inside the integrators.
    """
    state = np.asarray(state, float)
    if not (0.0 < state[0] < math.pi * model.a):
        raise ArgumentError(
            "axis point: the ODE is singular there, use the regularized launch"
        )
    r = _rhs(state, model)
    return float(r[0]), float(r[1]), float(r[2])


def _rhs_series(y: np.ndarray, model: SphereCylinder) -> np.ndarray:
    n, a, C = model.n, model.a, model.soliton_constant
    rho, t, th = y[..., 0, :], y[..., 1, :], y[..., 2, :]
    sin_th, cos_th = us.u_sin(th), us.u_cos(th)
    x = rho / a
    sx, cx = us.u_sin(x), us.u_cos(x)
    cot = us.u_div(cx, sx)
    thp = us.u_mul(sin_th, cot) * (-(n - 1) / a) - us.u_mul(t, cos_th) * C
    return np.stack([cos_th, sin_th, thp], axis=-2)


def state_series(model: SphereCylinder, states, order: int = DENSE_ORDER) -> np.ndarray:
    """Taylor coefficients of the exact solution through each given state.

    ``states`` has shape (..., 3); the result has shape (..., 3, order+1).
    Iterating the integral form of the system fixes one more coefficient per
    pass, so ``order`` passes suffice.
    """
    states = np.asarray(states, float)
    if np.any(np.abs(np.sin(states[..., 0] / model.a)) < 1e-13):
        raise ArgumentError("state series requested at an axis point")
    y = np.zeros(states.shape[:-1] + (3, order + 1))
    y[..., 0] = states
    for _ in range(order):
        r = _rhs_series(y, model)
        ynew = np.zeros_like(y)
        ynew[..., 0] = states
        ynew[..., 1:] = r[..., :-1] / np.arange(1, order + 1)
        y = ynew
    return y


def _launch_coeffs(model: SphereCylinder, t0: float, near_axis: bool) -> np.ndarray:
    """Second-order expansion of the regular solution launched perpendicular
    from an axis; used as dense output over the first step."""
    c1 = -model.soliton_constant * t0 / model.n
    out = np.zeros((3, DENSE_ORDER + 1))
    if near_axis:
        out[0, 0] = 0.0
        out[0, 1] = 1.0
        out[0, 3] = -c1 * c1 / 6.0
        out[2, 1] = c1
    else:
        out[0, 0] = math.pi * model.a
        out[0, 1] = -1.0
        out[0, 3] = c1 * c1 / 6.0
        out[2, 0] = math.pi
        out[2, 1] = c1
    out[1, 0] = t0
    out[1, 2] = c1 / 2.0
    return out


def _rk4(state: np.ndarray, h: float, model: SphereCylinder) -> np.ndarray:
    k1 = _rhs(state, model)
    k2 = _rhs(state + 0.5 * h * k1, model)
    k3 = _rhs(state + 0.5 * h * k2, model)
    k4 = _rhs(state + h * k3, model)
    out = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state during integration")
    return out


# -- profile container ----------------------------------------------------------

@dataclass
class ProfileCurve:
    """Arclength samples of a profile plus dense Taylor output per sample.

    ``coeffs[k]`` are the (3, order+1) Taylor coefficients of the exact
    solution through sample k, valid over [s_k, s_{k+1}].  Samples sitting on
    a rotation axis carry the regularized launch expansion instead.
    """

    model: SphereCylinder
    s: np.ndarray
    states: np.ndarray
    coeffs: np.ndarray
    closed: bool
    step: float
    label: str = "profile"
    periodic: bool = False

    @property
    def rho(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def t(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def theta(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def widths(self) -> np.ndarray:
        return np.diff(self.s)

    def segment_of(self, sq) -> np.ndarray:
        sq = np.asarray(sq, float)
        k = np.searchsorted(self.s, sq, side="right") - 1
        return np.clip(k, 0, len(self.s) - 2)

    def state_at(self, sq) -> np.ndarray:
        """Dense state(s); shape (..., 3)."""
        sq = np.asarray(sq, float)
        k = self.segment_of(sq)
        ds = sq - self.s[k]
        c = self.coeffs[k]                      # (..., 3, K)
        return us.u_eval(c, ds[..., None])

    def end_states(self) -> tuple[np.ndarray, np.ndarray]:
        return self.states[0], self.states[-1]


def _is_axis(model: SphereCylinder, rho: float) -> bool:
    return rho <= _AXIS_EPS or rho >= math.pi * model.a - _AXIS_EPS


def _build_curve(model: SphereCylinder, s, states, closed: bool, step: float,
                 label: str) -> ProfileCurve:
    s = np.asarray(s, float)
    states = np.asarray(states, float)
    K = len(s)
    coeffs = np.zeros((K, 3, DENSE_ORDER + 1))
    axis_mask = np.array([_is_axis(model, r) for r in states[:, 0]])
    interior = ~axis_mask
    if interior.any():
        coeffs[interior] = state_series(model, states[interior])
    for k in np.flatnonzero(axis_mask):
        near = states[k, 0] <= _AXIS_EPS
        coeffs[k] = _launch_coeffs(model, states[k, 1], near)
        coeffs[k, 0, 0] = states[k, 0]
        coeffs[k, 1, 0] = states[k, 1]
        coeffs[k, 2, 0] = states[k, 2]
        if k == K - 1:
            # arrival side: dense output runs backwards, never used forward
            coeffs[k, :, 1:] = 0.0
    return ProfileCurve(model=model, s=s, states=states, coeffs=coeffs,
                        closed=closed, step=step, label=label)


def interior_indices(curve: ProfileCurve) -> np.ndarray:
    """Indices of samples strictly between the rotation axes, where the
    series recurrences are regular."""
    a = curve.model.a
    return np.flatnonzero(
        (curve.rho > _AXIS_EPS) & (curve.rho < math.pi * a - _AXIS_EPS)
    )


def slice_profile(model: SphereCylinder, step: float = 0.0) -> ProfileCurve:
    """The exact profile of the totally geodesic sphere factor at height 0."""
    a = model.a
    h = step if step > 0 else 1e-3 * a
    L = math.pi * a
    K = max(int(math.ceil(L / h)) + 1, 8)
    s = np.linspace(0.0, L, K)
    states = np.zeros((K, 3))
    states[:, 0] = s
    coeffs = np.zeros((K, 3, DENSE_ORDER + 1))
    coeffs[:, 0, 0] = s
    coeffs[:, 0, 1] = 1.0
    return ProfileCurve(model=model, s=s, states=states, coeffs=coeffs,
                        closed=True, step=L / (K - 1), label=f"slice-profile:n={model.n}")


# -- plain fixed-step integration -------------------------------------------------

def integrate_profile(initial, step: float, length: float,
                      model: SphereCylinder, label: str = "profile") -> ProfileCurve:
    """Classical fixed-step RK4 with per-sample dense Taylor output.

    ``initial`` is (rho0, t0, theta0); a start on the rotation axis (rho0 at 0
    or pi*a, theta0 at 0 resp. pi) is replaced by the regularized series over
    the first step.
    """
    if step <= 0:
        raise ArgumentError("step must be positive")
    if length <= 0:
        raise ArgumentError("length must be positive")
    a = model.a
    rho0, t0, th0 = (float(x) for x in initial)
    s_list: list[float] = []
    y_list: list[np.ndarray] = []

    if rho0 <= _AXIS_EPS or rho0 >= math.pi * a - _AXIS_EPS:
        near = rho0 <= _AXIS_EPS
        want = 0.0 if near else math.pi
        if abs(math.sin(th0 - want)) > 1e-9:
            raise ArgumentError("axis launches must be perpendicular")
        axis_state = np.array([0.0 if near else math.pi * a, t0, want])
        s_list.append(0.0)
        y_list.append(axis_state)
        c = _launch_coeffs(model, t0, near)
        y = us.u_eval(c, step)
        s = step
    else:
        y = np.array([rho0, t0, th0])
        s = 0.0
    s_list.append(s)
    y_list.append(np.asarray(y, float))

    while s < length - 1e-12:
        h = min(step, length - s)
        y = _rk4(np.asarray(y, float), h, model)
        s += h
        if y[0] < -1e-6 or y[0] > math.pi * a + 1e-6:
            raise IntegrationError("profile left the coordinate strip")
        s_list.append(s)
        y_list.append(y)

    return _build_curve(model, np.array(s_list), np.array(y_list),
                        closed=False, step=step, label=label)


# -- shooting for closed profiles ---------------------------------------------------

@dataclass
class ShootConfig:
    step: float = 0.0            # 0 -> a * 1e-3
    defect_tol: float = 1e-6
    polish_tol: float = 1e-10    # keep bisecting below defect_tol to here
    scan_radius: float = 0.75
    scan_count: int = 12         # scan points on each side of t_start
    max_bisect: int = 80
    max_length_factor: float = 8.0
    t_cap: float = 8.0
    zone_steps: int = 12         # refine once within zone_steps * step of an axis
    refine_factor: int = 50
    # The measuring section sits section_steps fine steps from the axis.  The
    # defect responds to the launch parameter like sigma_ref^{-(n-1)}, so a
    # section too close to the axis makes the closure tolerance unreachable
    # at float parameter resolution, while the second-order arrival model is
    # accurate to O(sigma_ref^3); 20 fine steps balances the two.
    section_steps: int = 20


@dataclass
class Shot:
    t_start: float
    outcome: str                 # section | turn | escape | maxlen | error
    defect: float                # signed closure defect
    axis: str | None             # near | far
    s: np.ndarray | None = None
    states: np.ndarray | None = None
    s_end: float = 0.0
    end_state: np.ndarray | None = None


@dataclass
class ShootResult:
    profile: ProfileCurve | None
    trace: list[tuple[float, float, str]]
    message: str = ""

    @property
    def found(self) -> bool:
        return self.profile is not None


def _closing_prediction(model: SphereCylinder, t_val: float, sigma: float) -> float:
    """sin(theta) of the regular (smoothly closing) solution at distance sigma
    from an axis it is about to meet."""
    return model.soliton_constant * t_val * sigma / model.n


def _single_shot(t0: float, model: SphereCylinder, cfg: ShootConfig) -> Shot:
    a = model.a
    L = math.pi * a
    h = cfg.step if cfg.step > 0 else 1e-3 * a
    s_max = cfg.max_length_factor * L
    zone = cfg.zone_steps * h
    turn_zone = 0.2 * L

    s_list = [0.0]
    y_list = [np.array([0.0, t0, 0.0])]
    y = us.u_eval(_launch_coeffs(model, t0, near_axis=True), h)
    s = h
    s_list.append(s)
    y_list.append(np.asarray(y, float))

    def shot(outcome, defect, axis=None, s_end=None, end_state=None):
        return Shot(t_start=t0, outcome=outcome, defect=defect, axis=axis,
                    s=np.array(s_list), states=np.array(y_list),
                    s_end=s_end if s_end is not None else s,
                    end_state=end_state if end_state is not None else np.asarray(y, float))

    prev_cos = math.cos(y[2])
    while True:
        rho, t, th = y
        cos_th, sin_th = math.cos(th), math.sin(th)
        if abs(t) > cfg.t_cap:
            return shot("escape", (3.0 + abs(t)) * (np.sign(sin_th) or 1.0))
        if s > s_max:
            return shot("maxlen", 3.0 * (np.sign(sin_th) or 1.0))
        sigma_near, sigma_far = rho, L - rho
        # blow-up turns near an axis carry the sign of the divergence and are
        # cheap signed events for the bisection; interior turns are legitimate
        if prev_cos * cos_th < 0.0:
            sigma = sigma_far if prev_cos > 0 else sigma_near
            if sigma < turn_zone:
                return shot("turn", 2.0 * (np.sign(sin_th) or 1.0))
        prev_cos = cos_th
        if sigma_far <= zone and cos_th > 0:
            return _refine_approach(t0, model, cfg, s_list, y_list, "far")
        if sigma_near <= zone and cos_th < 0 and s > 5 * h:
            return _refine_approach(t0, model, cfg, s_list, y_list, "near")
        try:
            y = _rk4(np.asarray(y, float), h, model)
        except IntegrationError:
            return shot("error", math.nan)
        s += h
        if y[0] < -1e-6 or y[0] > L + 1e-6:
            return shot("error", math.nan)
        s_list.append(s)
        y_list.append(y)


def _refine_approach(t0, model, cfg, s_list, y_list, axis: str) -> Shot:
    """Small-step approach to an axis; measures the closure defect on the
    section at distance sigma_ref, where the second-order expansion of the
    regular solution is accurate to O(sigma_ref^3)."""
    a = model.a
    L = math.pi * a
    h = cfg.step if cfg.step > 0 else 1e-3 * a
    hf = h / cfg.refine_factor
    sigma_ref = cfg.section_steps * hf
    target = 0.0 if axis == "near" else L
    direction = -1.0 if axis == "near" else 1.0

    def sigma_of(rho):
        return rho if axis == "near" else L - rho

    s = s_list[-1]
    y = np.asarray(y_list[-1], float)

    def mkshot(outcome, defect, s_end=None, end_state=None):
        return Shot(t_start=t0, outcome=outcome, defect=defect, axis=axis,
                    s=np.array(s_list), states=np.array(y_list),
                    s_end=s_end if s_end is not None else s,
                    end_state=end_state if end_state is not None else y)

    while True:
        rho, t, th = y
        cos_th, sin_th = math.cos(th), math.sin(th)
        if direction * cos_th <= 0.0:
            sigma = sigma_of(rho)
            dev = sin_th - _closing_prediction(model, t, sigma)
            return mkshot("turn", (2.0 + sigma) * (np.sign(dev) or 1.0))
        try:
            y_next = _rk4(y, hf, model)
        except IntegrationError:
            return mkshot("error", math.nan)
        if sigma_of(y_next[0]) <= sigma_ref:
            # locate the crossing on this step's dense output by bisection
            # (sigma(0) > sigma_ref >= sigma(hf) by the step test)
            c = state_series(model, y)
            lo_ds, hi_ds = 0.0, hf
            for _ in range(80):
                mid = 0.5 * (lo_ds + hi_ds)
                if sigma_of(us.u_eval(c, mid)[0]) > sigma_ref:
                    lo_ds = mid
                else:
                    hi_ds = mid
            ds = hi_ds
            st = us.u_eval(c, ds)
            s_m = s + ds
            sigma_m = sigma_of(st[0])
            defect = math.sin(st[2]) - _closing_prediction(model, st[1], sigma_m)
            s_list.append(s_m)
            y_list.append(np.asarray(st, float))
            return mkshot("section", defect, s_end=s_m, end_state=np.asarray(st, float))
        y = y_next
        s += hf
        s_list.append(s)
        y_list.append(y)
        if abs(y[1]) > cfg.t_cap:
            return mkshot("escape", (3.0 + abs(y[1])) * (np.sign(sin_th) or 1.0))


def _finalize_closed(shot: Shot, model: SphereCylinder, cfg: ShootConfig) -> ProfileCurve:
    a = model.a
    L = math.pi * a
    st = shot.end_state
    sigma_m = st[0] if shot.axis == "near" else L - st[0]
    ds_cap = sigma_m / max(abs(math.cos(st[2])), 0.5)
    t_axis = st[1] + 0.5 * ds_cap * math.sin(st[2])
    rho_axis = 0.0 if shot.axis == "near" else L
    # keep the accumulated winding of theta; perpendicular arrival means a
    # multiple of pi, not necessarily the canonical representative
    th_axis = math.pi * round(st[2] / math.pi)
    s = np.append(shot.s, shot.s_end + ds_cap)
    states = np.vstack([shot.states, [rho_axis, t_axis, th_axis]])
    h = cfg.step if cfg.step > 0 else 1e-3 * a
    curve = _build_curve(model, s, states, closed=True, step=h,
                         label=f"shot:n={model.n}:t0={shot.t_start:g}")
    defect = fminimality_defect(curve)
    if defect > _FMIN_TOL:
        raise NumericError(
            f"closed profile failed the weighted-minimality check: {defect:.3e}"
        )
    return curve


def _secant_polish(sh0: Shot, model: SphereCylinder, cfg: ShootConfig,
                   record) -> Shot:
    """Drive the closure defect of a hit toward polish_tol by secant steps;
    integral accuracy on the finished profile tracks this defect."""
    best = sh0
    if abs(sh0.defect) <= cfg.polish_tol:
        return best
    sh1 = _single_shot(sh0.t_start + 1e-5, model, cfg)
    record(sh1)
    if sh1.outcome == "section" and abs(sh1.defect) < abs(best.defect):
        best = sh1
    for _ in range(15):
        if sh0.outcome != "section" or sh1.outcome != "section":
            break
        dd = sh1.defect - sh0.defect
        if dd == 0.0 or not math.isfinite(dd):
            break
        t2 = sh1.t_start - sh1.defect * (sh1.t_start - sh0.t_start) / dd
        if not math.isfinite(t2):
            break
        sh2 = _single_shot(t2, model, cfg)
        record(sh2)
        if sh2.outcome == "section" and abs(sh2.defect) < abs(best.defect):
            best = sh2
        sh0, sh1 = sh1, sh2
        if abs(best.defect) <= cfg.polish_tol:
            break
    return best


def shoot_closed(t_start: float, model: SphereCylinder,
                 config: ShootConfig | None = None) -> ShootResult:
    """Search for a closed profile near the launch height ``t_start``.

    Launches perpendicular from the axis rho = 0, scans neighbouring launch
    heights for a sign change of the closure defect and bisects it.  Returns
    the closed profile when the defect drops below the tolerance, otherwise a
    not-found result carrying the monotone defect trace.
    """
    cfg = config or ShootConfig()
    trace: list[tuple[float, float, str]] = []

    def record(sh: Shot):
        trace.append((sh.t_start, sh.defect, sh.outcome))

    def done(sh: Shot) -> bool:
        return sh.outcome == "section" and abs(sh.defect) <= cfg.defect_tol

    first = _single_shot(t_start, model, cfg)
    record(first)
    if done(first):
        best = _secant_polish(first, model, cfg, record)
        return ShootResult(_finalize_closed(best, model, cfg), sorted(trace))

    delta = cfg.scan_radius / max(cfg.scan_count, 1)
    shots = {t_start: first}
    for k in range(1, cfg.scan_count + 1):
        for t0 in (t_start - k * delta, t_start + k * delta):
            sh = _single_shot(t0, model, cfg)
            shots[t0] = sh
            record(sh)
            if done(sh):
                best = _secant_polish(sh, model, cfg, record)
                return ShootResult(_finalize_closed(best, model, cfg),
                                   sorted(trace))

    params = sorted(shots)
    brackets = []
    for p, q in zip(params[:-1], params[1:]):
        dp, dq = shots[p].defect, shots[q].defect
        if not (math.isfinite(dp) and math.isfinite(dq)):
            continue
        if shots[p].outcome not in ("section", "turn"):
            continue
        if shots[q].outcome not in ("section", "turn"):
            continue
        if dp == 0.0 or dq == 0.0 or (dp < 0) != (dq < 0):
            brackets.append((abs(0.5 * (p + q) - t_start), p, q))
    brackets.sort()

    for _, lo, hi in brackets:
        dlo = shots[lo].defect
        best: Shot | None = None
        for _ in range(cfg.max_bisect):
            mid = 0.5 * (lo + hi)
            sh = _single_shot(mid, model, cfg)
            record(sh)
            if sh.outcome == "section" and (
                best is None or abs(sh.defect) < abs(best.defect)
            ):
                best = sh
            if not math.isfinite(sh.defect):
                break
            if best is not None and abs(best.defect) <= cfg.polish_tol:
                break
            if (sh.defect < 0) == (dlo < 0):
                lo = mid
                dlo = sh.defect
            else:
                hi = mid
            if hi - lo < 1e-15:
                break
        if best is not None and abs(best.defect) <= cfg.defect_tol:
            return ShootResult(_finalize_closed(best, model, cfg), sorted(trace))

    return ShootResult(None, sorted(trace), message="no closed profile found")


# -- weighted-minimality defect of stored samples ----------------------------------

def fminimality_defect(curve: ProfileCurve, oracle_points: int = 5) -> float:
    """How far the stored samples are from one weighted-minimal surface.

    Combines (a) the gluing defect between consecutive dense Taylor outputs,
    which catches samples that do not lie on a single solution (e.g. hand
    perturbations), and (b) the chart-evaluated weighted mean curvature at a
    few interior points, which checks the reduction to the ODE against the
    full geometric pipeline.  Segments touching an axis sample glue only to
    the closure tolerance of the shooting, not to integrator accuracy, so
    their mismatch enters with a 1e-2 weight: sample tampering still trips the
    threshold while a legitimately closed profile does not.
    """
    widths = curve.widths()
    axis_mask = np.array([_is_axis(curve.model, r) for r in curve.rho])
    cap = axis_mask[:-1] | axis_mask[1:]
    good = widths > 0
    pred = us.u_eval(curve.coeffs[:-1][good], widths[good][:, None])
    actual = curve.states[1:][good]
    scale = 1.0 + np.abs(actual).max(axis=1)
    mism = np.abs(pred - actual).max(axis=1) / scale
    mism[cap[good]] *= 1e-2
    cons = float(mism.max()) if len(mism) else 0.0

    orc = 0.0
    try:
        chart = profile_chart(curve)
        lo, hi = chart.domain[0]
        mid_angles = chart.domain[1:, :].mean(axis=1) if curve.model.n > 1 else []
        for sq in np.linspace(lo, hi, oracle_points):
            u = np.concatenate([[sq], mid_angles])
            orc = max(orc, fminimality_residual(chart, u))
    except GeometryError:
        pass  # profile too short for an interior chart window
    return max(cons, orc)


# -- profile charts ------------------------------------------------------------------

def _compose_poly(coefs: np.ndarray, shat: jets.Jet) -> jets.Jet:
    out = jets.jet_constant(float(coefs[-1]), shat.n_vars, shat.order)
    for c in coefs[-2::-1]:
        out = out * shat + float(c)
    return out


def profile_chart(curve: ProfileCurve, rho_margin: float = 0.0) -> ImmersionChart:
    """Chart (s, orbit angles) -> ambient cylinder for an integrated profile.

    The map rebuilds the exact solution through the dense state at each
    evaluation point, so the resulting local surface is weighted-minimal to
    machine precision whenever the ODE reduction is correct; the geometric
    pipeline therefore serves as an independent oracle for it.  The s-window
    keeps clear of the axis caps, where the orbit parametrization degenerates.
    """
    model = curve.model
    n, a = model.n, model.a
    if rho_margin <= 0:
        rho_margin = max(0.05 * a, 5.0 * curve.step)
    ok = (curve.rho >= rho_margin) & (curve.rho <= math.pi * a - rho_margin)
    idx = np.flatnonzero(ok)
    if len(idx) < 4:
        raise GeometryError("profile has no usable window away from the axes")
    s_lo, s_hi = curve.s[idx[0]], curve.s[idx[-1]]
    if s_hi - s_lo <= 10 * curve.step:
        raise GeometryError("profile window too short for a chart")

    def map_jets(coords):
        s_jet = coords[0]
        s_star = min(max(s_jet.value, s_lo), s_hi)
        state = curve.state_at(s_star)
        c = state_series(model, state)
        shat = s_jet - s_star
        rho_j = _compose_poly(c[0], shat)
        t_j = _compose_poly(c[1], shat)
        x = rho_j * (1.0 / a)
        w = jets.jet_sin(x) * a
        omega = sphere_jets(1.0, coords[1:])
        X = [w * om for om in omega]
        X.append(jets.jet_cos(x) * a)
        X.append(t_j)
        return X

    def orientation_ref(u, Xval):
        rho, t, th = curve.state_at(float(u[0]))
        x = rho / a
        w = a * math.sin(x)
        omega = Xval[:n] / w
        ref = np.zeros(n + 2)
        ref[:n] = -math.sin(th) * math.cos(x) * omega
        ref[n] = math.sin(th) * math.sin(x)
        ref[n + 1] = math.cos(th)
        return ref

    domain = np.vstack([[(s_lo, s_hi)], _angle_box(n - 1)])
    return ImmersionChart(model=model, dim=n, label=curve.label + "|chart",
                          domain=domain, map_jets=map_jets,
                          orientation_ref=orientation_ref)


# -- quantities along a profile -------------------------------------------------------

class ProfileQuantities:
    """Batched series (last axis = Taylor index) of the geometric quantities
    of the swept hypersurface along given profile states."""

    def __init__(self, model: SphereCylinder, states: np.ndarray,
                 order: int = DENSE_ORDER):
        self.model = model
        n, a = model.n, model.a
        y = state_series(model, states, order)
        self.rho = y[..., 0, :]
        self.t = y[..., 1, :]
        self.theta = y[..., 2, :]
        self.sin_theta = us.u_sin(self.theta)
        self.alpha = us.u_cos(self.theta)
        x = self.rho / a
        sx, cx = us.u_sin(x), us.u_cos(x)
        self.w = a * sx
        self.w_prime = us.u_deriv(self.w)
        self.kappa_orb = us.u_mul(self.sin_theta, us.u_div(cx, sx)) * (-1.0 / a)
        self.kappa_prof = -us.u_deriv(self.theta)
        self.H = self.kappa_prof + (n - 1) * self.kappa_orb
        self.A2 = us.u_mul(self.kappa_prof, self.kappa_prof) \
            + (n - 1) * us.u_mul(self.kappa_orb, self.kappa_orb)
        self.f = us.u_mul(self.t, self.t) * (0.5 * model.soliton_constant)

    # value and s-derivative extraction
    @staticmethod
    def value(series: np.ndarray) -> np.ndarray:
        return series[..., 0]

    @staticmethod
    def deriv(series: np.ndarray) -> np.ndarray:
        return series[..., 1]

    def nabla_A_squared(self) -> np.ndarray:
        """|grad A|^2 along the profile: the two principal-curvature rates
        plus the mixed components forced by the rotating frame."""
        n = self.model.n
        k1, k2 = self.value(self.kappa_prof), self.value(self.kappa_orb)
        dk1, dk2 = self.deriv(self.kappa_prof), self.deriv(self.kappa_orb)
        mix = self.value(self.w_prime) / self.value(self.w) * (k1 - k2)
        return dk1**2 + (n - 1) * dk2**2 + 2 * (n - 1) * mix**2


_FIELD_VALUES: dict[str, Callable[[ProfileQuantities], np.ndarray]] = {
    "one": lambda q: np.ones_like(q.value(q.t)),
    "height_t": lambda q: q.value(q.t),
    "alpha": lambda q: q.value(q.alpha),
    "alpha_squared": lambda q: q.value(q.alpha) ** 2,
    "H": lambda q: q.value(q.H),
    "H_squared": lambda q: q.value(q.H) ** 2,
    "A2": lambda q: q.value(q.A2),
    "f_restricted": lambda q: q.value(q.f),
}

_FIELD_SERIES: dict[str, Callable[[ProfileQuantities], np.ndarray]] = {
    "height_t": lambda q: q.t,
    "alpha": lambda q: q.alpha,
    "f_restricted": lambda q: q.f,
}


def _integrand_name(integrand) -> str:
    kind = getattr(integrand, "kind", integrand)
    if not isinstance(kind, str):
        raise ArgumentError("integrand must be a field, a field name, or a callable")
    return kind


@dataclass
class _QuadData:
    s: np.ndarray
    weights: np.ndarray        # includes the segment scaling, not the measure
    q: ProfileQuantities
    measure: np.ndarray        # e^{-f} w^{n-1} times the orbit-sphere area


def _quad_data(curve: ProfileCurve, nodes: int) -> _QuadData:
    """Quadrature nodes, weights, measure, and quantity series per node.

    The measure is evaluated at the true dense states.  On the axis cap
    segments the curvature formulas divide by the orbit radius and would
    amplify the dense polynomial's truncation error without bound, while the
    true cap contribution is only O(sigma^n); quantity series there are
    anchored at the cap's regular end sample instead, an approximation far
    below the quadrature tolerance.
    """
    x, wgt = np.polynomial.legendre.leggauss(nodes)
    x01 = 0.5 * (x + 1.0)
    w01 = 0.5 * wgt
    widths = curve.widths()
    good = np.flatnonzero(widths > 0)
    s_q = (curve.s[good][:, None] + widths[good][:, None] * x01[None, :]).ravel()
    w_q = (widths[good][:, None] * w01[None, :]).ravel()
    offs = widths[good][:, None] * x01[None, :]
    states = us.u_eval(curve.coeffs[good][:, None, :, :], offs[:, :, None])
    states = states.reshape(-1, 3)

    axis_mask = np.array([_is_axis(curve.model, r) for r in curve.rho])
    q_states = states.reshape(len(good), nodes, 3).copy()
    for row, seg in enumerate(good):
        if axis_mask[seg]:          # leading cap: anchor at its regular end
            q_states[row, :, :] = curve.states[seg + 1]
        elif axis_mask[seg + 1]:    # trailing cap: anchor at its regular start
            q_states[row, :, :] = curve.states[seg]
    q = ProfileQuantities(curve.model, q_states.reshape(-1, 3))

    n = curve.model.n
    rho_t, t_t = states[:, 0], states[:, 1]
    w_true = curve.model.a * np.sin(
        np.clip(rho_t, 0.0, math.pi * curve.model.a) / curve.model.a)
    f_true = 0.5 * curve.model.soliton_constant * t_t**2
    measure = (np.exp(-f_true) * np.maximum(w_true, 0.0) ** (n - 1)
               * unit_sphere_area(n - 1))
    return _QuadData(s_q, w_q, q, measure)


def weighted_integral(curve: ProfileCurve, integrand, nodes: int = 8) -> float:
    """Integral of a rotationally invariant scalar against the weighted area
    measure e^{-f} d(sigma), by composite Gauss-Legendre over the dense
    output segments.

    ``integrand`` is a field name (one, alpha, alpha_squared, height_t, H,
    H_squared, A2, f_restricted), a ScalarField of one of those kinds, or a
    callable mapping :class:`ProfileQuantities` to node values.
    """
    if not curve.closed:
        raise PreconditionError("weighted integrals need a closed profile")
    data = _quad_data(curve, nodes)
    if callable(integrand) and not hasattr(integrand, "kind"):
        vals = np.asarray(integrand(data.q), float)
    else:
        name = _integrand_name(integrand)
        try:
            fn = _FIELD_VALUES[name]
        except KeyError:
            raise ArgumentError(f"no profile formula for field {name!r}") from None
        vals = fn(data.q)
    return float(np.sum(data.weights * vals * data.measure))


def weighted_volume(curve: ProfileCurve, nodes: int = 8) -> float:
    return weighted_integral(curve, "one", nodes)


def divergence_check(curve: ProfileCurve, field_name: str, nodes: int = 8) -> float:
    """Integral of the drift Laplacian of an s-only field against the
    weighted measure; vanishes on closed profiles by the divergence theorem.
    Assembled in flux form so the axis caps stay finite."""
    if not curve.closed:
        raise PreconditionError("divergence checks need a closed profile")
    data = _quad_data(curve, nodes)
    try:
        series = _FIELD_SERIES[field_name](data.q)
    except KeyError:
        raise ArgumentError(
            f"divergence check supports height_t, alpha, f_restricted; got {field_name!r}"
        ) from None
    q = data.q
    n = curve.model.n
    u1 = q.deriv(series)
    u2 = 2.0 * series[..., 2]
    wv = q.value(q.w)
    wp = q.deriv(q.w)
    fp = q.deriv(q.f)
    ef = np.exp(-q.value(q.f))
    area = unit_sphere_area(n - 1)
    integrand = (u2 * wv ** (n - 1) + (n - 1) * wp * wv ** (n - 2) * u1
                 - fp * u1 * wv ** (n - 1)) * ef * area
    return float(np.sum(data.weights * integrand))


def lemA_residuals(curve: ProfileCurve, nodes: int = 8) -> tuple[float, float, float]:
    """The three integral identities every closed weighted-minimal profile
    satisfies; each residual is |LHS| of the corresponding balance law.

    At the default radius (soliton constant 1/2) these read

        int |grad alpha|^2 - int alpha^2 |A|^2                        = 0
        -int |grad H|^2 + int H^2 |A|^2 + 1/4 int alpha^2(1-alpha^2)  = 0
        int |grad A|^2 + int |A|^2 (1/2 - |A|^2)
            - 1/(2(n-1)) int alpha^2 (1 - alpha^2)                    = 0

    all against the weighted measure; a general radius rescales the constants
    through the soliton constant.
    """
    if not curve.closed:
        raise PreconditionError("integral identities need a closed profile")
    defect = fminimality_defect(curve)
    if defect > _FMIN_TOL:
        raise PreconditionError(
            f"profile is not weighted-minimal: defect {defect:.3e} exceeds {_FMIN_TOL:g}"
        )
    model = curve.model
    n, a, C = model.n, model.a, model.soliton_constant
    data = _quad_data(curve, nodes)
    q = data.q

    def integral(vals: np.ndarray) -> float:
        return float(np.sum(data.weights * vals * data.measure))

    alpha = q.value(q.alpha)
    dalpha = q.deriv(q.alpha)
    A2 = q.value(q.A2)
    H = q.value(q.H)
    dH = q.deriv(q.H)
    aa = alpha**2 * (1.0 - alpha**2)

    r1 = abs(integral(dalpha**2) - integral(alpha**2 * A2))
    r2 = abs(-integral(dH**2) + integral(H**2 * A2) + C**2 * integral(aa))
    r3 = abs(integral(q.nabla_A_squared()) + integral(A2 * (C - A2))
             - (2.0 * C / a**2) * integral(aa))
    return r1, r2, r3


# -- pinching band ---------------------------------------------------------------------

@dataclass(frozen=True)
class PinchingBand:
    n: int
    alpha: float
    lo: float
    hi: float


def pinching_band(n: int, alpha: float) -> PinchingBand:
    """The closed interval of |A|^2 values within which a closed rotational
    profile is forced to be the zero-height slice (n >= 3)."""
    if n < 3:
        raise ArgumentError("the pinching band needs n >= 3")
    if abs(alpha) > 1.0 + 1e-12:
        raise ArgumentError("alpha must lie in [-1, 1]")
    a2 = min(alpha * alpha, 1.0)
    disc = 1.0 - (8.0 / (n - 1)) * a2 * (1.0 - a2)
    if disc < -1e-12:
        raise ArgumentError("negative discriminant")
    root = math.sqrt(max(disc, 0.0))
    return PinchingBand(n=n, alpha=float(alpha),
                        lo=0.25 * (1.0 - root), hi=0.25 * (1.0 + root))


def corollary_band(n: int) -> tuple[float, float]:
    """The alpha-free band: the intersection over all alpha of the pinching
    bands, attained at alpha^2 = 1/2."""
    if n < 3:
        raise ArgumentError("the band needs n >= 3")
    root = math.sqrt(1.0 - 2.0 / (n - 1))
    return 0.25 * (1.0 - root), 0.25 * (1.0 + root)


@dataclass
class BandReport:
    label: str
    n: int
    holds_everywhere: bool
    checked_points: int
    min_margin: float
    first_violation: dict | None


def band_verdict(curve: ProfileCurve, nodes: int = 4) -> BandReport:
    """Sample |A|^2 and alpha along a closed profile and report whether the
    pinching hypothesis lo(alpha) <= |A|^2 <= hi(alpha) holds everywhere."""
    if curve.model.n < 3:
        raise ArgumentError("the pinching band needs n >= 3")
    data = _quad_data(curve, nodes)
    q = data.q
    alpha = q.value(q.alpha)
    A2 = q.value(q.A2)
    a2c = np.clip(alpha**2, 0.0, 1.0)
    disc = np.clip(1.0 - (8.0 / (curve.model.n - 1)) * a2c * (1.0 - a2c), 0.0, None)
    lo = 0.25 * (1.0 - np.sqrt(disc))
    hi = 0.25 * (1.0 + np.sqrt(disc))
    margin = np.minimum(A2 - lo, hi - A2)
    tol = 1e-12
    inside = margin >= -tol
    holds = bool(np.all(inside))
    first = None
    if not holds:
        k = int(np.argmin(margin))
        first = {"s": float(data.s[k]), "A2": float(A2[k]),
                 "alpha": float(alpha[k]), "lo": float(lo[k]), "hi": float(hi[k])}
    return BandReport(label=curve.label, n=curve.model.n,
                      holds_everywhere=holds, checked_points=len(alpha),
                      min_margin=float(margin.min()), first_violation=first)


# -- profile files -----------------------------------------------------------------------

PROFILE_FORMAT = "fminlab-profile/1"


def save_profile(curve: ProfileCurve, path: str) -> None:
    payload = {
        "format": PROFILE_FORMAT,
        "model": {"kind": "cylinder", "n": curve.model.n, "a": curve.model.a},
        "step": curve.step,
        "closed": curve.closed,
        "periodic": curve.periodic,
        "label": curve.label,
        "samples": [
            [float(sv), float(st[0]), float(st[1]), float(st[2])]
            for sv, st in zip(curve.s, curve.states)
        ],
    }
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_profile(path: str) -> ProfileCurve:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != PROFILE_FORMAT:
        raise ArgumentError(f"not a profile file: {path!r}")
    m = payload["model"]
    if m.get("kind") != "cylinder":
        raise ArgumentError("profile files describe cylinder-model surfaces")
    model = SphereCylinder(int(m["n"]), float(m["a"]))
    samples = np.asarray(payload["samples"], float)
    if samples.ndim != 2 or samples.shape[1] != 4 or len(samples) < 2:
        raise ArgumentError("malformed profile samples")
    curve = _build_curve(model, samples[:, 0], samples[:, 1:],
                         closed=bool(payload["closed"]),
                         step=float(payload.get("step", 0.0)),
                         label=str(payload.get("label", "profile")))
    curve.periodic = bool(payload.get("periodic", False))
    return curve
