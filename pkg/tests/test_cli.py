import json

import numpy as np
import pytest

from critlab import __version__
from critlab.cli import run


@pytest.fixture
def out(tmp_path):
    return str(tmp_path / "runs")


def _files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.name != "manifest.json"}


def test_catastrophe_json(out, tmp_path, capsys):
    assert run(["catastrophe", "--datum", "sech2:1", "--outdir", out, "--label", "a"]) == 0
    d = json.loads((tmp_path / "runs" / "catastrophe" / "a" / "catastrophe.json").read_text())
    assert abs(d["t_c"] - 0.216506) < 1e-6
    assert abs(d["u_c"] + 2 / 3) < 1e-10


def test_hierarchy_prints_kdv2(capsys):
    assert run(["hierarchy", "--m", "2", "--no-write"]) == 0
    text = capsys.readouterr().out
    for term in ("30", "20", "10"):
        assert term in text


def test_invalid_flag_writes_nothing(out, tmp_path, capsys):
    assert run(["hopf", "--tt", "1", "--outdir", out]) == 2
    assert run(["hopf", "--t", "-1", "--outdir", out]) == 2
    assert run(["evolve", "--n", "1000", "--outdir", out]) == 2
    assert run(["frobnicate"]) == 2
    assert not (tmp_path / "runs").exists()
    assert "error" in capsys.readouterr().err


def test_numerical_failure_exit_3(out, tmp_path, capsys):
    assert run(["hopf", "--t", "0.3", "--outdir", out]) == 3
    assert not (tmp_path / "runs").exists()
    assert "MultivaluedError" in capsys.readouterr().err


def test_existing_output_refused(out):
    assert run(["catastrophe", "--outdir", out, "--label", "a"]) == 0
    assert run(["catastrophe", "--outdir", out, "--label", "a"]) == 2
    assert run(["catastrophe", "--outdir", out, "--label", "../x"]) == 2


@pytest.mark.parametrize("argv", [
    ["hopf", "--t", "0.1", "--n", "41"],
    ["hierarchy", "--m", "3"],
    ["painleve-u", "--T", "0.5", "--xmax", "50", "--n", "2000"],
    ["painleve-q", "--samples", "101", "--continue-angle", "3.1416", "--max-len", "5"],
    ["rh-check", "--problem", "kdv_M", "--eps", "0.1", "--x", "-1.5", "--t", "0.2"],
    ["phi", "--points", "7"],
    ["evolve", "--eq", "gkdv_2", "--n", "128", "--dt", "1e-3", "--t-end", "0.02", "--snap",
     "0.01", "--eps", "0.3"],
    ["evolve", "--eq", "nls_defocusing", "--n", "128", "--dt", "1e-3", "--t-end", "0.05",
     "--snap", "0.025", "--eps", "0.2"],
])
def test_determinism_and_manifest_rerun(argv, tmp_path, capsys):
    out = str(tmp_path / "runs")
    assert run(argv + ["--outdir", out, "--label", "a"]) == 0
    assert run(argv + ["--outdir", out, "--label", "b"]) == 0
    base = tmp_path / "runs" / argv[0]
    assert _files(base / "a") == _files(base / "b")
    man = json.loads((base / "a" / "manifest.json").read_text())
    assert man["version"] == __version__ and man["config"]["command"] == argv[0]
    assert sorted(man["files"]) == sorted(_files(base / "a"))
    assert man["wall_time"] >= 0 and "diagnostics" in man
    # the resolved config in the manifest re-runs to the same bytes
    assert run([argv[0], "--config", str(base / "a" / "manifest.json"), "--label", "c"]) == 0
    assert _files(base / "c") == _files(base / "a")


def test_flags_override_config_file(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CRITLAB_CONFIG_DIR", str(tmp_path))
    (tmp_path / "h.yaml").write_text("command: hopf\nt: 0.05\nn: 5\nxmin: -1\nxmax: 1\n")
    out = str(tmp_path / "runs")
    assert run(["hopf", "--config", "h", "--n", "3", "--outdir", out, "--label", "a"]) == 0
    rows = (tmp_path / "runs" / "hopf" / "a" / "hopf.csv").read_text().splitlines()
    assert rows[0] == "x,u" and len(rows) == 4
    assert run(["phi", "--config", "h", "--no-write"]) == 2


def test_csv_shortest_repr(tmp_path, capsys):
    out = str(tmp_path / "runs")
    assert run(["hopf", "--t", "0", "--n", "3", "--xmin", "0", "--xmax", "1", "--outdir", out,
                "--label", "a"]) == 0
    rows = (tmp_path / "runs" / "hopf" / "a" / "hopf.csv").read_text().splitlines()
    x, u = rows[2].split(",")
    assert x == "0.5" and float(u) == pytest.approx(-1 / np.cosh(0.5) ** 2, abs=2e-16)
    assert u == repr(float(u))


def test_timestamp_label(tmp_path, capsys):
    out = tmp_path / "runs"
    assert run(["catastrophe", "--outdir", str(out)]) == 0
    (d,) = list((out / "catastrophe").iterdir())
    assert d.name.endswith("Z") and (d / "manifest.json").is_file()


@pytest.mark.slow
def test_universality_parallel_matches_serial(tmp_path, capsys):
    out = str(tmp_path / "runs")
    argv = ["universality", "--eps", "0.3,0.2", "--n", "512", "--dt", "1e-4", "--pn", "2000",
            "--outdir", out]
    assert run(argv + ["--label", "serial"]) == 0
    assert run(argv + ["--label", "pool", "--workers", "2"]) == 0
    base = tmp_path / "runs" / "universality"
    assert _files(base / "serial") == _files(base / "pool")
    rep = json.loads((base / "serial" / "report.json").read_text())
    assert [e["eps"] for e in rep["errors"]] == [0.3, 0.2] and rep["fit"] is None
    assert run(argv + ["--label", "x", "--window", "1,2"]) == 2
