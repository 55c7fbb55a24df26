import json
import math

import numpy as np
import pytest

from hypermin import cli


def run(argv):
    return cli.main(argv)


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [l.split(",") for l in lines[1:] if not l.startswith("#")]
    return header, rows


def test_check_helicoid_passes(tmp_path, capsys):
    out = tmp_path / "check.json"
    assert run(["check", "--surface", "helicoid", "--a", "2.0",
                "--out", str(out)]) == cli.EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    names = {c["check"] for c in doc["checks"]}
    assert {"hyperboloid_constraint", "mean_curvature",
            "model_round_trip", "helicoid_first_form"} <= names
    for c in doc["checks"]:
        assert c["measured"] < c["tolerance"]


def test_check_catenoid_profile_identity(tmp_path):
    out = tmp_path / "check.json"
    assert run(["check", "--surface", "cat-spherical", "--atilde", "1.0",
                "--out", str(out)]) == cli.EXIT_OK
    doc = json.loads(out.read_text())
    assert any(c["check"] == "profile_identity" and c["pass"]
               for c in doc["checks"])


def test_check_detects_injected_fault(tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERMIN_FAULT", "roundtrip")
    out = tmp_path / "check.json"
    assert run(["check", "--surface", "helicoid", "--a", "1.0",
                "--out", str(out)]) == cli.EXIT_CHECK_FAILED
    doc = json.loads(out.read_text())
    assert doc["passed"] is False
    bad = [c for c in doc["checks"] if not c["pass"]]
    assert [c["check"] for c in bad] == ["model_round_trip"]


def test_sample_obj_ball(tmp_path):
    out = tmp_path / "mesh.obj"
    assert run(["sample", "--surface", "helicoid", "--a", "2.0",
                "--model", "ball", "--grid", "12,16", "--rulings", "3",
                "--out", str(out)]) == cli.EXIT_OK
    lines = out.read_text().splitlines()
    verts = [l for l in lines if l.startswith("v ")]
    faces = [l for l in lines if l.startswith("f ")]
    rules = [l for l in lines if l.startswith("l ")]
    assert len(verts) == 12 * 16 + 3 * 12
    assert len(faces) == 2 * 11 * 15
    assert len(rules) == 3
    coords = np.array([[float(t) for t in l.split()[1:]] for l in verts])
    assert coords.shape[1] == 3
    assert np.all(np.linalg.norm(coords, axis=1) < 1.0)   # inside the ball
    # face indices must stay in range
    idx = [int(t) for l in faces for t in l.split()[1:]]
    assert min(idx) == 1 and max(idx) <= 12 * 16


def test_sample_csv_hyperboloid(tmp_path):
    out = tmp_path / "pts.csv"
    assert run(["sample", "--surface", "helicoid", "--a", "1.0",
                "--model", "hyperboloid", "--grid", "5,5", "--format", "csv",
                "--out", str(out)]) == cli.EXIT_OK
    header, rows = read_csv(out)
    assert header == ["u", "v", "c0", "c1", "c2", "c3"]
    assert len(rows) == 25
    x = np.array([[float(c) for c in r[2:]] for r in rows])
    q = -x[:, 0] ** 2 + np.sum(x[:, 1:] ** 2, axis=1)
    # cells carry 12 significant digits, so the constraint holds to ~1e-8
    assert np.max(np.abs(q + 1.0)) < 1e-8


def test_sample_json(tmp_path):
    out = tmp_path / "pts.json"
    assert run(["sample", "--surface", "cat-ball", "--abar", "0.5",
                "--domain=-1,1,0,6.283", "--grid", "6,6",
                "--format", "json", "--out", str(out)]) == cli.EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["grid"] == [6, 6]
    assert len(doc["vertices"]) == 36


def test_lambda1_csv(tmp_path):
    out = tmp_path / "lam.csv"
    assert run(["lambda1", "--surface", "helicoid", "--a", "1.0",
                "--domain=-3,3,-3,3", "--spacing", "0.1",
                "--out", str(out)]) == cli.EXIT_OK
    header, rows = read_csv(out)
    assert header[:2] == ["surface", "param"]
    row = dict(zip(header, rows[0]))
    assert row["surface"] == "helicoid"
    assert float(row["lambda1"]) == pytest.approx(2.2193, abs=0.02)
    assert row["classification"] == "stable"
    assert int(row["index"]) == 0
    assert float(row["residual"]) < 1e-8


def test_sweep_csv_and_svg(tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERMIN_THREADS", "2")
    out = tmp_path / "sweep.csv"
    svg = tmp_path / "sweep.svg"
    assert run(["sweep", "--a-values", "1.0,3.0", "--ks", "1,2",
                "--spacing", "0.1", "--out", str(out),
                "--svg", str(svg)]) == cli.EXIT_OK
    header, rows = read_csv(out)
    assert header == ["a", "k", "lambda1", "index", "residual"]
    assert len(rows) == 4
    by_key = {(float(r[0]), float(r[1])): float(r[2]) for r in rows}
    assert by_key[(1.0, 1.0)] > by_key[(1.0, 2.0)]     # domain monotonicity
    assert by_key[(3.0, 2.0)] < 0
    idx = {(float(r[0]), float(r[1])): int(r[3]) for r in rows}
    assert idx[(3.0, 2.0)] >= 1
    text = svg.read_text()
    assert text.startswith("<svg") and "polyline" in text
    assert "zero crossing" in text                     # sign change marked


def test_critical_trace(tmp_path):
    out = tmp_path / "crit.csv"
    assert run(["critical", "--domain=-3,3,-3,3", "--spacing", "0.1",
                "--bracket", "1,4", "--bisect-tol", "0.05",
                "--out", str(out)]) == cli.EXIT_OK
    header, rows = read_csv(out)
    assert header == ["step", "a", "lambda1"]
    assert rows[-1][0] == "final"
    a_c = float(rows[-1][1])
    assert 1.0 < a_c < 4.0
    # trace brackets the crossing
    lams = [float(r[2]) for r in rows[:-1]]
    assert min(lams) < 0 < max(lams)


def test_critical_bad_bracket_is_config_error(tmp_path):
    out = tmp_path / "crit.csv"
    assert run(["critical", "--domain=-3,3,-3,3", "--spacing", "0.1",
                "--bracket", "0.1,0.2", "--bisect-tol", "0.05",
                "--out", str(out)]) == cli.EXIT_CONFIG
    assert "# error:" in out.read_text()


def test_profile_csv(tmp_path):
    out = tmp_path / "prof.csv"
    assert run(["profile", "--surface", "cat-ball", "--abar", "0.6",
                "--out", str(out)]) == cli.EXIT_OK
    header, rows = read_csv(out)
    assert header == ["t", "x_plus", "x_minus"]
    assert float(rows[0][0]) == pytest.approx(0.6)
    assert float(rows[0][1]) == 0.0
    xs = [float(r[1]) for r in rows]
    assert all(b >= a for a, b in zip(xs, xs[1:]))


def test_profile_requires_catenoid():
    assert run(["profile", "--surface", "helicoid"]) == cli.EXIT_CONFIG


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"surface": "helicoid", "a": 9.0,
                               "grid": [5, 5], "model": "hyperboloid",
                               "format": "csv"}))
    out = tmp_path / "pts.csv"
    # flag --a overrides the file value; file supplies grid/model/format
    assert run(["sample", "--config", str(cfg), "--a", "0.0",
                "--out", str(out)]) == cli.EXIT_OK
    header, rows = read_csv(out)
    assert len(rows) == 25
    # pitch 0 surface lies in x4 = 0
    assert all(abs(float(r[5])) < 1e-15 for r in rows)


def test_config_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"surfce": "helicoid"}))
    assert run(["sample", "--config", str(cfg)]) == cli.EXIT_CONFIG


def test_config_malformed_json_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert run(["sample", "--config", str(cfg)]) == cli.EXIT_CONFIG


def test_invalid_surface_parameter_is_config_error():
    assert run(["sample", "--surface", "cat-spherical",
                "--atilde", "0.3"]) == cli.EXIT_CONFIG


def test_conjugacy_fast(tmp_path, monkeypatch):
    import hypermin.stability as stability
    full = stability.conjugacy_crosscheck
    # shrink the schedules: this test covers CLI plumbing, not convergence
    monkeypatch.setattr(
        stability, "conjugacy_crosscheck",
        lambda a: full(a, helicoid_ks=(1, 2, 3), helicoid_spacing=0.1,
                       catenoid_ws=(0.8, 1.1, 1.4),
                       catenoid_spacing=(0.04, 2 * math.pi / 64)))
    out = tmp_path / "conj.csv"
    assert run(["conjugacy", "--a-values", "1.5",
                "--out", str(out)]) == cli.EXIT_OK
    header, rows = read_csv(out)
    row = dict(zip(header, rows[0]))
    assert float(row["abar"]) == pytest.approx(
        0.5 * math.log(2.5 / 0.5), abs=1e-12)
    assert row["helicoid_class"] == row["catenoid_class"] == "stable"
    assert row["agree"] == "true"
