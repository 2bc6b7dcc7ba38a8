"""Report serialization: canonical JSON, lossy CSV summaries, and figures.

JSON is the canonical format (nested per-point records); CSV is a flat
summary.  All files are written atomically (temp file in the target directory
plus rename).  Figures are rendered to files with the Agg backend next to the
delimited output; they are a convenience view, not part of the canonical
report.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from datetime import datetime, timezone

import numpy as np

from .errors import ArgumentError


def _atomic_write(path: str, data: str | bytes) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, payload: dict, timestamp: bool = True) -> None:
    payload = dict(payload)
    if timestamp:
        payload["generated_at"] = datetime.now(timezone.utc).isoformat()
    _atomic_write(path, json.dumps(payload, indent=1, sort_keys=True) + "\n")


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    _atomic_write(path, buf.getvalue())


def identity_csv_rows(reports) -> tuple[list[str], list[list]]:
    header = ["identity", "chart", "samples", "max_residual", "tolerance", "pass"]
    rows = [
        [r.identity, r.chart_label, len(r.samples),
         f"{r.max_residual:.3e}", f"{r.tolerance:g}", int(r.passed)]
        for r in reports
    ]
    return header, rows


def spectrum_csv_rows(spec) -> tuple[list[str], list[list]]:
    header = ["mode", "k_in_mode", "mu", "multiplicity"]
    rows = [[e.mode, e.k_in_mode, repr(e.mu), e.multiplicity]
            for e in spec.sorted_entries()]
    return header, rows


# -- figures -------------------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def save_profile_figure(curve, path: str) -> None:
    """Profile curve in the (rho, t) strip plus the swept quantities."""
    from . import rotsym

    plt = _pyplot()
    idx = rotsym.interior_indices(curve)
    q = rotsym.ProfileQuantities(curve.model, curve.states[idx])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(curve.rho, curve.t, lw=1.2)
    ax1.axvline(0.0, color="0.6", lw=0.8)
    ax1.axvline(np.pi * curve.model.a, color="0.6", lw=0.8)
    ax1.set_xlabel(r"$\rho$")
    ax1.set_ylabel("t")
    ax1.set_title(curve.label)
    s = curve.s[idx]
    ax2.plot(s, q.value(q.alpha), label=r"$\alpha$", lw=1.0)
    ax2.plot(s, q.value(q.A2), label=r"$|A|^2$", lw=1.0)
    ax2.plot(s, q.value(q.H), label="H", lw=1.0)
    ax2.set_xlabel("arclength s")
    ax2.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_spectrum_figure(spec, path: str) -> None:
    """Eigenvalue ladder colored by orbit mode."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.6))
    entries = spec.sorted_entries()
    modes = sorted({e.mode for e in entries})
    cmap = plt.get_cmap("viridis", max(len(modes), 2))
    for i, m in enumerate(modes):
        mus = [e.mu for e in entries if e.mode == m]
        ax.scatter([m] * len(mus), mus, s=14, color=cmap(i))
    ax.axhline(0.0, color="0.4", lw=0.8)
    ax.set_xlabel("orbit mode m")
    ax.set_ylabel(r"$\mu$")
    ax.set_title(f"{spec.label}  (index {spec.index})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_band_figure(curve, path: str) -> None:
    """Pinching band versus the sampled squared second fundamental form."""
    from . import rotsym

    plt = _pyplot()
    n = curve.model.n
    if n < 3:
        raise ArgumentError("band figures need n >= 3")
    idx = rotsym.interior_indices(curve)
    q = rotsym.ProfileQuantities(curve.model, curve.states[idx])
    s = curve.s[idx]
    alpha = q.value(q.alpha)
    A2 = q.value(q.A2)
    a2c = np.clip(alpha**2, 0.0, 1.0)
    disc = np.clip(1.0 - (8.0 / (n - 1)) * a2c * (1.0 - a2c), 0.0, None)
    lo = 0.25 * (1.0 - np.sqrt(disc))
    hi = 0.25 * (1.0 + np.sqrt(disc))
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.fill_between(s, lo, hi, alpha=0.25, label="pinching band")
    ax.plot(s, A2, lw=1.2, label=r"$|A|^2$")
    ax.set_xlabel("arclength s")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(curve.label)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
