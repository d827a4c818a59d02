"""Command-line surface: exit codes, output files, determinism."""

import json

import numpy as np
import pytest

from trapped_pressure.cli import EXIT_INVALID, EXIT_OK, EXIT_QUALITY, main


def run(*argv):
    return main(list(argv))


def test_horizons_json(capsys):
    assert run("horizons", "--system", "kerr", "--spin", "0.9",
               "--lambda", "0.02") == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    roots = out["roots"]
    assert roots["r_cauchy"] < roots["r_event"] < roots["r_cosmo"]
    assert out["config"]["spin"] == 0.9


def test_horizons_rejects_superextremal(capsys):
    assert run("horizons", "--spin", "1.5") == EXIT_INVALID
    assert "error" in capsys.readouterr().err.lower()


def test_unknown_set_key_is_invalid():
    assert run("horizons", "--set", "spacetime.masss=2") == EXIT_INVALID


def test_photon_region_schwarzschild(capsys):
    assert run("photon-region", "--system", "schwarzschild", "--rows", "5") == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["bounds"][0] == pytest.approx(3.0, abs=1e-9)
    assert out["bounds"][1] == pytest.approx(3.0, abs=1e-9)
    assert all(row["carter_ratio"] == pytest.approx(27.0, abs=1e-9)
               for row in out["rows"])


def test_orbit_writes_csv_and_drifts(tmp_path, capsys):
    assert run("orbit", "--system", "schwarzschild", "--T", "20",
               "--out-dir", str(tmp_path)) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    drifts = out["drifts"]
    assert all(abs(v) < 1e-8 for v in drifts.values())
    rows = np.genfromtxt(out["csv"], delimiter=",", names=True)
    assert rows["s"][-1] == pytest.approx(20.0)   # affine parameter
    assert str(tmp_path) in out["csv"]


def test_lyapunov_table(tmp_path, capsys):
    assert run("lyapunov", "--system", "toy", "--T", "30", "--count", "4",
               "--out-dir", str(tmp_path)) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    top = [spec["exponents"][0] for spec in out["spectra"]]
    assert all(abs(e - 0.5) < 1e-9 for e in top)


def test_nh_check_toy(tmp_path, capsys):
    assert run("nh-check", "--system", "toy", "--T", "40", "--count", "4",
               "--out-dir", str(tmp_path)) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["r_star"] == out["r_cap"] == 10


def test_pressure_toy_end_to_end(tmp_path, capsys):
    code = run("pressure", "--system", "toy", "--samples", "100",
               "--T-grid", "2 4 6 8", "--eps", "0.2 0.3 0.45",
               "--s", "0.0 1.0", "--out-dir", str(tmp_path))
    assert code == EXIT_OK
    out = capsys.readouterr().out
    files = sorted(p.name for p in tmp_path.iterdir())
    assert any(f.endswith(".json") for f in files)
    assert any(f.endswith(".csv") for f in files)
    assert "P_hat" in out or "pressure" in out.lower()


def test_pressure_deterministic_across_workers(tmp_path, monkeypatch):
    argv = ["pressure", "--system", "toy", "--samples", "64",
            "--T-grid", "2 4", "--eps", "0.2 0.3 0.45", "--s", "0.5"]
    d1, d2 = tmp_path / "w1", tmp_path / "w2"
    assert run(*argv, "--workers", "1", "--out-dir", str(d1)) == EXIT_OK
    monkeypatch.setenv("TRAPPED_PRESSURE_WORKERS", "3")
    assert run(*argv, "--out-dir", str(d2)) == EXIT_OK
    for p1 in sorted(d1.glob("*.json")):
        p2 = d2 / p1.name
        assert p1.read_bytes() == p2.read_bytes()


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("system = kerr\nspacetime.spin = 0.5\nspacetime.lambda = 0.02\n")
    assert run("horizons", "--config", str(cfg), "--spin", "0.9") == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["config"]["spin"] == 0.9         # flag wins
    assert out["config"]["lam"] == 0.02         # file still applies


def test_validate_passes_and_env_tightening(capsys, monkeypatch):
    assert run("validate") == EXIT_OK
    text = capsys.readouterr().out
    assert text.count("pass") >= 8
    monkeypatch.setenv("TRAPPED_PRESSURE_TOL_CONSERVED_DRIFT", "1e-30")
    assert run("validate") == EXIT_QUALITY
    assert "FAIL" in capsys.readouterr().out
