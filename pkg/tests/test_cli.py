import json

import numpy as np
import pytest

from magspec.cli import _parse_range, main


def _write(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture()
def disk_json(tmp_path):
    return _write(tmp_path / "dom.json", {"type": "disk", "radius": 1.0})


@pytest.fixture()
def field_json(tmp_path):
    return _write(tmp_path / "field.json", {"type": "linear", "b0": [0, 0, 1.0]})


def test_parse_range():
    assert _parse_range("1:4:4") == [1.0, 2.0, 3.0, 4.0]
    assert _parse_range("10:99:1") == [10.0]
    with pytest.raises(ValueError):
        _parse_range("1:2:0")


def test_degennes_command(tmp_path):
    out = tmp_path / "dg.json"
    curve_out = tmp_path / "curve.csv"
    rc = main([
        "degennes", "--tol", "1e-5", "--h", "5e-3", "--T", "15",
        "--out", str(out), "--curve=-1:0:3", "--curve-out", str(curve_out),
    ])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["theta0"] == pytest.approx(0.5901061, abs=1e-4)
    assert payload["xi0"] == pytest.approx(-0.7681836, abs=1e-3)
    assert payload["tail_table"]["5.0"] < 1e-8
    lines = curve_out.read_text().strip().splitlines()
    assert lines[0] == "xi,mu"
    assert len(lines) == 4


def test_eig_then_agmon_pipeline(tmp_path, disk_json, field_json):
    eig_out = tmp_path / "eig.json"
    vec_out = tmp_path / "vec.bin"
    rc = main([
        "eig", "--domain", disk_json, "--field", field_json, "--q", "30",
        "--h", "0.06", "--out", str(eig_out), "--vec-out", str(vec_out),
    ])
    assert rc == 0
    eig = json.loads(eig_out.read_text())
    assert eig["converged"]
    assert 0.3 < eig["eigenvalue"] / 30.0 < 1.0
    idx = json.loads((tmp_path / "vec.bin.index.json").read_text())
    assert idx["n_nodes"] == eig["n_nodes"]
    flat = np.fromfile(vec_out, dtype="<f8")
    assert len(flat) == 2 * eig["n_nodes"]

    agmon_out = tmp_path / "agmon.csv"
    rc = main(["agmon", "--eig", str(eig_out), "--out", str(agmon_out)])
    assert rc == 0  # weighted norm within the bound
    lines = agmon_out.read_text().strip().splitlines()
    assert lines[0] == "d_shell,max_abs_u,log_max,fitted_slope,theoretical_rate"
    assert len(lines) > 10


def test_eig_dirichlet_exceeds_neumann(tmp_path, disk_json, field_json):
    vals = {}
    for bc in ("neumann", "dirichlet"):
        out = tmp_path / f"{bc}.json"
        main([
            "eig", "--domain", disk_json, "--field", field_json, "--q", "16",
            "--h", "0.08", "--bc", bc, "--out", str(out),
        ])
        vals[bc] = json.loads(out.read_text())["eigenvalue"]
    assert vals["dirichlet"] > vals["neumann"]


def test_quasimode_command(tmp_path, disk_json, field_json):
    out = tmp_path / "qm.json"
    rc = main([
        "quasimode", "--domain", disk_json, "--field", field_json,
        "--q", "40", "--h", "0.05", "--mode", "band", "--out", str(out),
    ])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert 0.4 < payload["certificate_over_q"] < 0.7


def test_scan_helical_command(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    out = tmp_path / "hel.csv"
    rc = main([
        "scan-helical", "--qtau", "30:30:1", "--x", "0.0", "--c0", "0.3",
        "--rotations", "2", "--out", str(out),
    ])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("q,tau_or_R,lambda")
    assert len(lines) == 2


def test_scan_domain_command(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    out = tmp_path / "dom.csv"
    rc = main([
        "scan-domain", "--q", "10", "--R", "1:2:2", "--h", "0.1",
        "--out", str(out),
    ])
    assert rc == 0
    assert len(out.read_text().strip().splitlines()) == 3


def test_run_command_and_dry_run(tmp_path, capsys):
    cfg = {
        "scenario": "asymptotic", "qs": [12.0],
        "out_csv": str(tmp_path / "s.csv"),
        "out_manifest": str(tmp_path / "m.json"),
    }
    cfg_path = _write(tmp_path / "cfg.json", cfg)
    rc = main(["run", "--config", cfg_path, "--dry-run"])
    assert rc == 0
    assert not (tmp_path / "s.csv").exists()
    capsys.readouterr()
    rc = main(["run", "--config", cfg_path])
    assert rc == 0
    assert (tmp_path / "s.csv").exists()
    manifest = json.loads((tmp_path / "m.json").read_text())
    assert manifest["jobs"][0]["status"] == "ok"
