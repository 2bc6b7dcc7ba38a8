"""Batch orchestration: verify identities, compute spectra, generate
profiles, run integral checks, and emit machine-readable reports.

Exit codes: 0 all checks passed, 1 a check failed (or a documented
precondition was violated), 2 usage error, 3 numeric/geometric failure.
Config precedence: command-line flags over config-file values over built-in
defaults.  FMINLAB_THREADS caps worker parallelism.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import identities, reporting, rotsym, spectral
from .ambient import SphereCylinder, parse_model
from .errors import (
    ArgumentError,
    FminlabError,
    PreconditionError,
)
from .hypersurface import make_chart

COMMANDS = ("verify", "spectrum", "generate", "integrals", "report")


@dataclass
class RunConfig:
    command: str = ""
    surface: str = "slice"
    model: str = ""               # optional "gaussian:n" / "cylinder:n[:a]"
    n: int = 2
    a: float = 0.0
    identity: list[str] = field(default_factory=lambda: ["all"])
    samples: int = 100
    tol: float = 1e-8
    itol: float = 1e-6
    grid: int = 2000
    step: float = 0.0
    m_max: int = 10
    k_max: int = 10
    nodes: int = 8
    seed: int = 0
    shoot: bool = False
    tstart: float = 0.0
    initial: list[float] | None = None
    length: float = 0.0
    sweep: list[float] | None = None   # lo hi count
    profile: str = ""
    out: str = ""
    csv: str = ""
    out_dir: str = "report"
    timestamp: bool = True
    threads: int = 0

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ArgumentError(f"unknown command {self.command!r}")
        if self.tol <= 0 or self.itol <= 0:
            raise ArgumentError("tolerances must be positive")
        if self.samples < 1:
            raise ArgumentError("samples must be >= 1")
        for name in self.identity:
            if name != "all" and name not in identities.CATALOG:
                raise ArgumentError(
                    f"unknown identity {name!r}; known: "
                    f"{', '.join(identities.IDENTITY_NAMES)} or 'all'"
                )


def resolve_threads(cfg: RunConfig) -> int:
    cap = os.environ.get("FMINLAB_THREADS", "")
    cap_n = int(cap) if cap.strip().isdigit() else 0
    want = cfg.threads if cfg.threads > 0 else (cap_n or 1)
    if cap_n > 0:
        want = min(want, cap_n)
    return max(want, 1)


def _emit(cfg: RunConfig, payload: dict) -> None:
    if cfg.out:
        reporting.write_json(cfg.out, payload, timestamp=cfg.timestamp)
    else:
        doc = dict(payload)
        print(json.dumps(doc, indent=1, sort_keys=True))


def _cylinder_model(cfg: RunConfig) -> SphereCylinder:
    if cfg.model:
        model = parse_model(cfg.model)
        if not isinstance(model, SphereCylinder):
            raise ArgumentError("profiles and spectra need a cylinder model")
        return model
    return SphereCylinder(cfg.n, cfg.a)


def _load_profile_arg(cfg: RunConfig) -> rotsym.ProfileCurve:
    path = cfg.profile
    if not path and cfg.surface.startswith("profile:"):
        path = cfg.surface[len("profile:"):]
    if path:
        return rotsym.load_profile(path)
    if cfg.surface == "slice":
        return rotsym.slice_profile(_cylinder_model(cfg), cfg.step)
    raise ArgumentError(
        f"surface {cfg.surface!r} has no rotational profile; use 'slice' or "
        "'profile:<file>'"
    )


# -- commands ---------------------------------------------------------------------

def _run_verify(cfg: RunConfig) -> int:
    chart = make_chart(cfg.surface, cfg.n, cfg.a)
    requested = list(identities.IDENTITY_NAMES) if "all" in cfg.identity \
        else list(dict.fromkeys(cfg.identity))
    compatible = set(identities.compatible_identities(chart))
    run_ids = [i for i in requested if i in compatible]
    skipped = [
        {"identity": i,
         "reason": f"requires a {identities.CATALOG[i].requires} model"}
        for i in requested if i not in compatible
    ]
    pts = identities.low_discrepancy_points(chart, cfg.samples, cfg.seed)
    reports = identities.check_many(run_ids, chart, pts, cfg.tol)
    all_pass = all(r.passed for r in reports)
    payload = {
        "command": "verify",
        "surface": cfg.surface,
        "chart": chart.label,
        "model": chart.model.label(),
        "samples": cfg.samples,
        "seed": cfg.seed,
        "tolerance": cfg.tol,
        "identities": [r.to_dict() for r in reports],
        "skipped": skipped,
        "all_pass": all_pass,
    }
    _emit(cfg, payload)
    if cfg.csv:
        header, rows = reporting.identity_csv_rows(reports)
        reporting.write_csv(cfg.csv, header, rows)
    for r in reports:
        mark = "pass" if r.passed else "FAIL"
        print(f"[{mark}] {r.identity:15s} {chart.label}  "
              f"max residual {r.max_residual:.3e}", file=sys.stderr)
        if not r.passed:
            worst = max(r.samples, key=lambda s: s[3])
            print(f"       worst point u = {np.asarray(worst[0]).tolist()}",
                  file=sys.stderr)
    return 0 if all_pass else 1


def _run_spectrum(cfg: RunConfig) -> int:
    profile = _load_profile_arg(cfg)
    spec = spectral.sturm_liouville_spectrum(
        profile, m_max=cfg.m_max, grid=cfg.grid,
        per_mode=max(cfg.k_max + 2 - 0, 2), threads=resolve_threads(cfg),
    )
    payload = spec.to_dict()
    payload.update({
        "command": "spectrum",
        "surface": cfg.surface,
        "grid": cfg.grid,
        "m_max": cfg.m_max,
    })
    if cfg.surface == "slice":
        closed = spectral.slice_spectrum_closed_form(profile.model.n, cfg.k_max)
        payload["closed_form"] = closed.to_dict()
    _emit(cfg, payload)
    if cfg.csv:
        header, rows = reporting.spectrum_csv_rows(spec)
        reporting.write_csv(cfg.csv, header, rows)
    print(f"index = {spec.index}; lowest mu = {spec.sorted_entries()[0].mu:.9f}",
          file=sys.stderr)
    return 0


def _run_generate(cfg: RunConfig) -> int:
    """Generate profiles; --out names the profile file, the run report goes
    to stdout (and to <out>.report.json when a profile file is written)."""
    model = _cylinder_model(cfg)
    shoot_cfg = rotsym.ShootConfig(step=cfg.step)

    def emit_report(payload: dict, anchor: str = "") -> None:
        print(json.dumps(payload, indent=1, sort_keys=True))
        if anchor:
            reporting.write_json(anchor + ".report.json", payload,
                                 timestamp=cfg.timestamp)

    if cfg.sweep:
        lo, hi, count = cfg.sweep
        outcomes = []
        found_files = []
        for i, t0 in enumerate(np.linspace(lo, hi, int(count))):
            res = rotsym.shoot_closed(float(t0), model, shoot_cfg)
            rec = {"t_start": float(t0), "found": res.found,
                   "trace": [[float(t), float(d), o] for t, d, o in res.trace]}
            if res.found:
                path = (cfg.out or "profile") + f".sweep{i}.json"
                rotsym.save_profile(res.profile, path)
                rec["profile"] = path
                found_files.append(path)
            outcomes.append(rec)
        payload = {"command": "generate", "mode": "sweep",
                   "model": model.label(), "outcomes": outcomes,
                   "found": found_files}
        emit_report(payload)
        return 0
    if cfg.shoot:
        res = rotsym.shoot_closed(cfg.tstart, model, shoot_cfg)
        payload = {
            "command": "generate",
            "mode": "shoot",
            "model": model.label(),
            "t_start": cfg.tstart,
            "found": res.found,
            "trace": [[float(t), float(d), o] for t, d, o in res.trace],
        }
        if res.found:
            path = cfg.out or f"profile_t{cfg.tstart:g}.json"
            rotsym.save_profile(res.profile, path)
            payload["profile"] = path
            payload["length"] = res.profile.length
            emit_report(payload, anchor=path)
            print(f"closed profile written to {path}", file=sys.stderr)
            return 0
        emit_report(payload)
        print("no closed profile found", file=sys.stderr)
        return 1
    if cfg.initial:
        if len(cfg.initial) != 3:
            raise ArgumentError("--initial needs rho0 t0 theta0")
        length = cfg.length or math.pi * model.a
        step = cfg.step or 1e-3 * model.a
        curve = rotsym.integrate_profile(tuple(cfg.initial), step, length, model)
        path = cfg.out or "profile_arc.json"
        rotsym.save_profile(curve, path)
        print(f"open profile written to {path}", file=sys.stderr)
        return 0
    raise ArgumentError("generate needs --shoot, --sweep, or --initial")


def _run_integrals(cfg: RunConfig) -> int:
    profile = _load_profile_arg(cfg)
    r1, r2, r3 = rotsym.lemA_residuals(profile, nodes=cfg.nodes)
    volume = rotsym.weighted_volume(profile, nodes=cfg.nodes)
    div = {name: rotsym.divergence_check(profile, name, nodes=cfg.nodes)
           for name in ("alpha", "height_t", "f_restricted")}
    ray = spectral.rayleigh_quotient(profile, "alpha", nodes=cfg.nodes)
    ok = max(r1, r2, r3) <= cfg.itol
    payload = {
        "command": "integrals",
        "profile": profile.label,
        "closed": profile.closed,
        "weighted_volume": volume,
        "integral_residuals": {"alpha_balance": r1, "mean_curvature_balance": r2,
                               "second_form_balance": r3},
        "divergence_checks": div,
        "rayleigh_alpha": ray,
        "tolerance": cfg.itol,
        "all_pass": ok,
    }
    _emit(cfg, payload)
    if cfg.csv:
        reporting.write_csv(cfg.csv,
                            ["profile", "volume", "r1", "r2", "r3",
                             "rayleigh_alpha", "pass"],
                            [[profile.label, repr(volume), repr(r1), repr(r2),
                              repr(r3), repr(ray), int(ok)]])
    for name, val in (("alpha balance", r1), ("mean curvature balance", r2),
                      ("second form balance", r3)):
        mark = "pass" if val <= cfg.itol else "FAIL"
        print(f"[{mark}] {name}: {val:.3e}", file=sys.stderr)
    return 0 if ok else 1


def _run_report(cfg: RunConfig) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    profile = _load_profile_arg(cfg)
    model = profile.model

    idx = rotsym.interior_indices(profile)
    q = rotsym.ProfileQuantities(model, profile.states[idx])
    rows = [
        [repr(float(sv)), repr(float(st[0])), repr(float(st[1])),
         repr(float(st[2])), repr(float(al)), repr(float(a2)), repr(float(hh))]
        for sv, st, al, a2, hh in zip(
            profile.s[idx], profile.states[idx], q.value(q.alpha),
            q.value(q.A2), q.value(q.H))
    ]
    reporting.write_csv(os.path.join(cfg.out_dir, "profile.csv"),
                        ["s", "rho", "t", "theta", "alpha", "A2", "H"], rows)
    reporting.save_profile_figure(profile, os.path.join(cfg.out_dir, "profile.png"))

    spec = spectral.sturm_liouville_spectrum(
        profile, m_max=cfg.m_max, grid=cfg.grid, threads=resolve_threads(cfg))
    header, srows = reporting.spectrum_csv_rows(spec)
    reporting.write_csv(os.path.join(cfg.out_dir, "spectrum.csv"), header, srows)
    reporting.save_spectrum_figure(spec, os.path.join(cfg.out_dir, "spectrum.png"))

    summary = {
        "command": "report",
        "profile": profile.label,
        "model": model.label(),
        "index": spec.index,
        "weighted_volume": rotsym.weighted_volume(profile),
        "files": ["profile.csv", "profile.png", "spectrum.csv", "spectrum.png"],
    }
    if model.n >= 3:
        reporting.save_band_figure(profile, os.path.join(cfg.out_dir, "band.png"))
        verdict = rotsym.band_verdict(profile)
        summary["band"] = {
            "holds_everywhere": verdict.holds_everywhere,
            "min_margin": verdict.min_margin,
        }
        summary["files"].append("band.png")
    if profile.closed:
        r1, r2, r3 = rotsym.lemA_residuals(profile)
        summary["integral_residuals"] = [r1, r2, r3]
    reporting.write_json(os.path.join(cfg.out_dir, "summary.json"), summary,
                         timestamp=cfg.timestamp)
    print(f"report written to {cfg.out_dir}/", file=sys.stderr)
    return 0


def run(cfg: RunConfig) -> int:
    """Execute a validated run configuration; returns the process exit code."""
    cfg.validate()
    if cfg.command == "verify":
        return _run_verify(cfg)
    if cfg.command == "spectrum":
        return _run_spectrum(cfg)
    if cfg.command == "generate":
        return _run_generate(cfg)
    if cfg.command == "integrals":
        return _run_integrals(cfg)
    if cfg.command == "report":
        return _run_report(cfg)
    raise ArgumentError(f"unknown command {cfg.command!r}")  # pragma: no cover


# -- argument parsing ------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fminlab",
        description="Numerics for weighted-minimal hypersurfaces: identity "
                    "verification, rotational profiles, stability spectra.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--surface", default=None,
                        help="slice | equator-cylinder | shrinker-sphere | "
                             "shrinker-cylinder | graph:<file> | profile:<file>")
        sp.add_argument("--model", default=None,
                        help="gaussian:n or cylinder:n[:a]")
        sp.add_argument("--n", type=int, default=None, help="hypersurface dimension")
        sp.add_argument("--a", type=float, default=None,
                        help="cylinder sphere radius (0 = default)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="JSON report path")
        sp.add_argument("--csv", default=None, help="CSV summary path")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp field from JSON reports")

    sp = sub.add_parser("verify", help="check identities pointwise")
    common(sp)
    sp.add_argument("--identity", action="append", default=None,
                    help="identity name or 'all' (repeatable)")
    sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)

    sp = sub.add_parser("spectrum", help="stability spectrum and index")
    common(sp)
    sp.add_argument("--kmax", dest="k_max", type=int, default=None)
    sp.add_argument("--mmax", dest="m_max", type=int, default=None)
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--step", type=float, default=None)
    sp.add_argument("--profile", default=None, help="profile JSON file")

    sp = sub.add_parser("generate", help="generate rotational profiles")
    common(sp)
    sp.add_argument("--shoot", action="store_true", default=None)
    sp.add_argument("--tstart", type=float, default=None)
    sp.add_argument("--initial", type=float, nargs=3, default=None,
                    metavar=("RHO0", "T0", "THETA0"))
    sp.add_argument("--length", type=float, default=None)
    sp.add_argument("--step", type=float, default=None)
    sp.add_argument("--sweep", type=float, nargs=3, default=None,
                    metavar=("LO", "HI", "COUNT"))

    sp = sub.add_parser("integrals", help="closed-profile integral identities")
    common(sp)
    sp.add_argument("--profile", default=None, help="profile JSON file")
    sp.add_argument("--itol", type=float, default=None)
    sp.add_argument("--nodes", type=int, default=None)
    sp.add_argument("--step", type=float, default=None)

    sp = sub.add_parser("report", help="figures plus delimited summaries")
    common(sp)
    sp.add_argument("--profile", default=None)
    sp.add_argument("--out-dir", dest="out_dir", default=None)
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--mmax", dest="m_max", type=int, default=None)
    sp.add_argument("--step", type=float, default=None)
    return p


def config_from_args(argv=None) -> RunConfig:
    ns = _build_parser().parse_args(argv)
    raw = vars(ns)
    cfg_fields = {f.name for f in fields(RunConfig)}

    merged: dict = {}
    config_path = raw.pop("config", None)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - cfg_fields
        if unknown:
            raise ArgumentError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)

    no_ts = raw.pop("no_timestamp", False)
    for key, val in raw.items():
        if val is None:
            continue
        merged[key] = val
    if no_ts:
        merged["timestamp"] = False
    cfg = RunConfig(**{k: v for k, v in merged.items() if k in cfg_fields})
    return cfg


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except ArgumentError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return 1
    except FminlabError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
