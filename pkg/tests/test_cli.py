"""CLI contracts: subcommands, exit codes, report files, determinism."""

import json
import math
import os
import subprocess
import sys

import pytest

from fminlab import cli
from fminlab.errors import ArgumentError

RUN = [sys.executable, "-m", "fminlab.cli"]


def run_cli(args, cwd):
    return subprocess.run(RUN + args, cwd=cwd, capture_output=True, text=True)


def test_verify_slice_all(tmp_path):
    out = tmp_path / "verify.json"
    csv = tmp_path / "verify.csv"
    r = run_cli(["verify", "--surface", "slice", "--identity", "all",
                 "--samples", "50", "--tol", "1e-8",
                 "--out", str(out), "--csv", str(csv)], tmp_path)
    assert r.returncode == 0, r.stderr
    doc = json.loads(out.read_text())
    assert doc["all_pass"] is True
    ran = {rec["identity"] for rec in doc["identities"]}
    skipped = {rec["identity"] for rec in doc["skipped"]}
    assert len(ran) + len(skipped) == 14
    assert {"SHRINKER_A2", "SHRINKER_H2", "SHRINKER_LFH"} <= skipped
    assert all(rec["statement"] for rec in doc["identities"])
    assert csv.read_text().startswith("identity,chart,")


def test_verify_failure_exit_code(tmp_path):
    # an impossible tolerance cannot make exact residuals fail, so use a
    # non-minimal chart to exercise the precondition path (exit 1)
    expr = tmp_path / "phi.expr"
    expr.write_text("1\n")
    r = run_cli(["verify", "--surface", f"graph:{expr}", "--identity", "HEIGHT",
                 "--samples", "5"], tmp_path)
    assert r.returncode == 1
    assert "not weighted-minimal" in r.stderr


def test_usage_errors(tmp_path):
    r = run_cli(["verify", "--surface", "klein-bottle"], tmp_path)
    assert r.returncode == 2
    r = run_cli(["verify", "--surface", "slice", "--identity", "BOGUS"],
                tmp_path)
    assert r.returncode == 2
    r = run_cli(["verify", "--surface", "slice", "--tol", "-1"], tmp_path)
    assert r.returncode == 2


def test_spectrum_slice_csv(tmp_path):
    out = tmp_path / "spec.json"
    csv = tmp_path / "spec.csv"
    r = run_cli(["spectrum", "--surface", "slice", "--n", "2", "--kmax", "10",
                 "--grid", "2000", "--out", str(out), "--csv", str(csv)],
                tmp_path)
    assert r.returncode == 0, r.stderr
    lines = csv.read_text().splitlines()
    assert lines[0] == "mode,k_in_mode,mu,multiplicity"
    first = lines[1].split(",")
    assert float(first[2]) == pytest.approx(-0.5, abs=1e-6)
    doc = json.loads(out.read_text())
    assert doc["index"] == 1
    assert doc["closed_form"]["index"] == 1


def test_generate_and_integrals_roundtrip(tmp_path):
    prof = tmp_path / "slice3.json"
    r = run_cli(["generate", "--shoot", "--tstart", "0", "--n", "3",
                 "--out", str(prof)], tmp_path)
    assert r.returncode == 0, r.stderr
    assert prof.exists()
    rep = json.loads((tmp_path / "slice3.json.report.json").read_text())
    assert rep["found"] is True

    out = tmp_path / "integrals.json"
    r = run_cli(["integrals", "--profile", str(prof), "--out", str(out)],
                tmp_path)
    assert r.returncode == 0, r.stderr
    doc = json.loads(out.read_text())
    res = doc["integral_residuals"]
    assert max(res.values()) <= 1e-6
    assert doc["rayleigh_alpha"] == pytest.approx(-0.5, abs=1e-8)
    assert doc["weighted_volume"] == pytest.approx(2 * math.pi**2 * 8,
                                                   rel=1e-9)


def test_generate_arc(tmp_path):
    prof = tmp_path / "arc.json"
    r = run_cli(["generate", "--initial", "0.5", "0.3", "0.1", "--length", "1.0",
                 "--n", "2", "--out", str(prof)], tmp_path)
    assert r.returncode == 0, r.stderr
    doc = json.loads(prof.read_text())
    assert doc["closed"] is False


def test_report_files(tmp_path):
    rep = tmp_path / "rep"
    r = run_cli(["report", "--surface", "slice", "--n", "3", "--grid", "600",
                 "--mmax", "4", "--out-dir", str(rep)], tmp_path)
    assert r.returncode == 0, r.stderr
    for name in ("profile.csv", "profile.png", "spectrum.csv", "spectrum.png",
                 "band.png", "summary.json"):
        assert (rep / name).exists(), name
    summary = json.loads((rep / "summary.json").read_text())
    assert summary["index"] == 1
    assert summary["band"]["holds_everywhere"] is True


def test_determinism_modulo_timestamp(tmp_path):
    args = ["verify", "--surface", "shrinker-sphere", "--n", "2",
            "--identity", "all", "--samples", "12", "--seed", "5",
            "--no-timestamp"]
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    assert run_cli(args + ["--out", str(p1)], tmp_path).returncode == 0
    assert run_cli(args + ["--out", str(p2)], tmp_path).returncode == 0
    assert p1.read_bytes() == p2.read_bytes()


def test_config_file_precedence(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"samples": 7, "seed": 3}))
    cfg = cli.config_from_args(["verify", "--config", str(cfgfile),
                                "--surface", "slice", "--seed", "9"])
    assert cfg.samples == 7     # from the file
    assert cfg.seed == 9        # flag wins
    assert cfg.surface == "slice"

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"samplez": 7}))
    with pytest.raises(ArgumentError):
        cli.config_from_args(["verify", "--config", str(bad)])


def test_threads_env_cap(monkeypatch):
    cfg = cli.config_from_args(["spectrum", "--surface", "slice"])
    monkeypatch.setenv("FMINLAB_THREADS", "2")
    cfg.threads = 8
    assert cli.resolve_threads(cfg) == 2
    monkeypatch.delenv("FMINLAB_THREADS")
    assert cli.resolve_threads(cfg) == 8


def test_atomic_write_leaves_no_droppings(tmp_path):
    out = tmp_path / "v.json"
    r = run_cli(["verify", "--surface", "slice", "--identity", "HEIGHT",
                 "--samples", "5", "--out", str(out)], tmp_path)
    assert r.returncode == 0
    leftovers = [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]
    assert not leftovers
