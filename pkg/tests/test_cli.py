from __future__ import annotations

import csv
import json
import re

import pytest

from krein_spectra import cli
from krein_spectra.errors import NumericalError

SQUARE = '{"kind":"rectangle","width":1,"height":1}'
LSHAPE = '{"kind":"lshape","outer":1,"notch":0.5}'
DISK = '{"kind":"disk","radius":1}'


def run(tmp_path, command, *overrides, config=None, name="out"):
    argv = [command, "--out", str(tmp_path / name)]
    if config is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(config))
        argv += ["--config", str(path)]
    for o in overrides:
        argv += ["--override", o]
    code = cli.main(argv)
    out = tmp_path / name
    doc = json.loads((out / "results.json").read_text()) if code == 0 else None
    return code, doc, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_eigs_single_node(tmp_path):
    code, doc, out = run(tmp_path, "eigs", f"shape={SQUARE}", "h=0.5")
    assert code == 0
    rows = read_csv(out / "spectrum.csv")
    header = rows[0]
    assert header[:3] == ["index [-]", "lambda_krein [1/L^2]", "lambda_dirichlet [1/L^2]"]
    assert float(rows[1][1]) == pytest.approx(20.0, rel=1e-14)
    assert float(rows[1][2]) == pytest.approx(16.0, rel=1e-14)
    assert doc["summary"]["lambda1_krein"] == pytest.approx(20.0)
    assert doc["summary"]["krein_ge_dirichlet"] is True


def test_eigs_disk(tmp_path):
    code, doc, _ = run(tmp_path, "eigs", f"shape={DISK}", "h=0.03125", "n_eigs=5", "solver=iterative")
    assert code == 0
    s = doc["summary"]
    assert s["lambda1_neumann"] is None
    assert abs(s["lambda1_krein"] - 14.682) / 14.682 <= 0.10
    assert abs(s["relative_error_vs_bessel"][0]) <= 0.10


def test_eigs_neumann_column(tmp_path):
    code, doc, out = run(tmp_path, "eigs", f"shape={LSHAPE}", "h=0.125", "n_eigs=4", "solver=iterative")
    assert code == 0
    rows = read_csv(out / "spectrum.csv")
    assert abs(float(rows[1][3])) < 1e-8
    assert float(rows[2][3]) > 0


def test_invalid_shape_names_key(tmp_path, capsys):
    code, _, _ = run(tmp_path, "eigs", 'shape={"kind":"rectangle","width":1}')
    assert code == 1
    assert "height" in capsys.readouterr().err
    code, _, _ = run(tmp_path, "eigs", 'shape={"kind":"rectangle","width":-1,"height":1}')
    assert code == 1
    assert "width" in capsys.readouterr().err


@pytest.mark.parametrize("override,key", [
    ("h=-0.5", "h"), ("n_eigs=0", "n_eigs"), ("theta=1.5", "theta"), ("solver=magic", "solver"),
    ("bogus=1", "bogus"), ("window=[5,1]", "window"),
])
def test_config_validation(tmp_path, capsys, override, key):
    code, _, _ = run(tmp_path, "eigs", override)
    assert code == 1
    assert key in capsys.readouterr().err


def test_malformed_inputs(tmp_path, capsys):
    assert cli.main(["eigs", "--override", "novalue", "--out", str(tmp_path / "x")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["eigs", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    assert cli.main(["eigs", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x")]) == 1


def test_weyl_synthetic(tmp_path):
    code, doc, out = run(tmp_path, "weyl", "synthetic=true")
    assert code == 0
    for mode in ("one_term", "two_term"):
        assert doc["fits"][mode]["relative_error"] <= 1e-10
    assert doc["remainder_exponent_validated"] is False
    assert doc["dirichlet_control"]["relative_error"] <= 0.10
    for name in ("counting.csv", "remainder.csv", "spectrum.csv"):
        header = read_csv(out / name)[0]
        assert all(re.search(r"\[.+\]", h) for h in header)


def test_weyl_window_beyond_reliability(tmp_path, capsys):
    code, _, _ = run(tmp_path, "weyl", "h=0.0625")
    assert code == 1
    assert "WindowBeyondReliability" in capsys.readouterr().err


def test_weyl_small_grid(tmp_path):
    code, doc, out = run(tmp_path, "weyl", "h=0.03125", "window=[40, 250]")
    assert code == 0
    assert doc["fits"]["two_term"]["n_points"] >= 10
    assert len(read_csv(out / "remainder.csv")) > 10


def test_dtn_check(tmp_path):
    code, doc, out = run(tmp_path, "dtn-check", f"shape={SQUARE}", "h=0.5")
    assert code == 0
    rows = read_csv(out / "spectrum.csv")
    assert float(rows[1][2]) <= 1e-12
    code, doc, out = run(tmp_path, "dtn-check", f"shape={LSHAPE}", "h=0.125", "n_eigs=5", name="l")
    assert code == 0
    rows = read_csv(out / "spectrum.csv")[1:]
    assert len(rows) == 5 and all(float(r[2]) <= 1e-8 for r in rows)
    assert all(v <= 1e-10 for v in doc["dtn_symmetry_error"].values())
    assert doc["m0_constant_annihilation"] <= 1e-10
    assert doc["converse_inclusion"]["implication_holds"] is True
    assert doc["disjointness"]["edges"]["projector_distance"] < 1e-10


def test_dtn_check_disk(tmp_path, capsys):
    code, _, _ = run(tmp_path, "dtn-check", f"shape={DISK}", "h=0.25")
    assert code == 1
    assert "UnsupportedShape" in capsys.readouterr().err


def test_convergence_square(tmp_path):
    code, doc, out = run(tmp_path, "convergence", f"shape={SQUARE}", "h_list=[0.125,0.0625,0.03125]", "n_eigs=3")
    assert code == 0
    first = doc["extrapolation"][0]
    assert first["observed_order"] > 0
    # continuum clamped-plate buckling value is about 52.34
    assert abs(first["limit_assumed_order"] - 52.34) / 52.34 < 0.02
    assert all(r <= 0.7 for r in doc["trace_residual_ratios"])
    assert (out / "convergence.csv").exists()


def test_convergence_disk(tmp_path):
    code, doc, _ = run(tmp_path, "convergence", f"shape={DISK}", "h_list=[0.125,0.0625,0.03125]", "n_eigs=3",
                       "solver=iterative", "workers=3")
    assert code == 0
    first = doc["extrapolation"][0]
    assert first["limit_assumed_order_error"] <= 0.02
    assert first["error_monotone"] is True


@pytest.mark.parametrize("h_list", ["[0.25]", "[0.25,0.125]", "[0.25,0.125,0.1]"])
def test_convergence_bad_list(tmp_path, h_list):
    code, _, _ = run(tmp_path, "convergence", f"h_list={h_list}")
    assert code == 1


@pytest.mark.parametrize("n", [2, 3])
def test_kozlov(tmp_path, n):
    code, doc, _ = run(tmp_path, "kozlov", f"n={n}", "volume=1")
    assert code == 0
    assert doc["relative_difference"] <= 1e-6


def test_kozlov_bad_dimension(tmp_path):
    code, _, _ = run(tmp_path, "kozlov", "n=4")
    assert code == 1


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(cfg):
        raise NumericalError("synthetic failure")

    monkeypatch.setitem(cli.HANDLERS, "eigs", boom)
    code, _, _ = run(tmp_path, "eigs")
    assert code == 2
    assert "synthetic failure" in capsys.readouterr().err


def _strip_timestamp(text):
    doc = json.loads(text)
    doc["provenance"].pop("timestamp")
    return json.dumps(doc, indent=2)


def test_determinism(tmp_path):
    cfg = {"shape": json.loads(LSHAPE), "h": 0.125, "solver": "iterative", "n_eigs": 6, "seed": 7}
    for command in ("eigs", "dtn-check"):
        _, _, a = run(tmp_path, command, config=cfg, name=f"{command}_a")
        _, _, b = run(tmp_path, command, config=cfg, name=f"{command}_b")
        ta = (a / "results.json").read_text()
        tb = (b / "results.json").read_text()
        assert _strip_timestamp(ta) == _strip_timestamp(tb)
        no_ts = re.compile(r'"timestamp": \{[^}]*\}', re.S)
        assert no_ts.sub("", ta) == no_ts.sub("", tb)
        assert (a / "spectrum.csv").read_bytes() == (b / "spectrum.csv").read_bytes()


def test_config_echo_and_round_trip(tmp_path):
    code, doc, out = run(tmp_path, "eigs", "h=0.25", config={"n_eigs": 3})
    assert code == 0
    echoed = doc["provenance"]["config"]
    assert set(echoed) == set(cli.DEFAULTS)
    assert echoed["n_eigs"] == 3 and echoed["h"] == 0.25
    assert echoed["shape"]["origin"] == [0.0, 0.0]
    assert doc["provenance"]["artifact_version"]
    text = (out / "results.json").read_text()
    assert json.loads(json.dumps(json.loads(text))) == json.loads(text)
    for row in read_csv(out / "spectrum.csv")[1:]:
        lam = float(row[1])
        assert repr(lam) == row[1]


def test_workers_do_not_change_results(tmp_path):
    args = (f"shape={SQUARE}", "h_list=[0.25,0.125,0.0625]", "n_eigs=3")
    _, a, _ = run(tmp_path, "convergence", *args, "workers=1", name="w1")
    _, b, _ = run(tmp_path, "convergence", *args, "workers=3", name="w3")
    assert a["points"] == b["points"]


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "krein_spectra", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "kozlov" in r.stdout
