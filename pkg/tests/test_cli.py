import json
import subprocess
import sys

import pytest

from attrakt import data_path
from attrakt.certificate import EraCertificate
from attrakt.cli import main

TOY = "vars: x1 x2\ndot x1 = -x1 + 0.5*x2\ndot x2 = -x2\n"
TOY3 = "vars: a b c\ndot a = -a\ndot b = -b + a\ndot c = -c\n"
TOY_CFG = "deg_VN = 2\ngamma_hi = 4\nmax_outer_iters = 3\n"


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "toy.sys").write_text(TOY)
    (tmp_path / "toy3.sys").write_text(TOY3)
    (tmp_path / "toy.cfg").write_text(TOY_CFG)
    return tmp_path


@pytest.fixture
def toy_cert_file(workdir):
    assert main(["era", "toy.sys", "-c", "toy.cfg", "-o", "toy.cert.json"]) == 0
    return workdir / "toy.cert.json"


def test_era_unstable(capsys):
    assert main(["era", str(data_path("unstable.sys"))]) == 2
    assert "origin not certifiably stable" in capsys.readouterr().err


def test_missing_file(workdir, capsys):
    assert main(["era", "nope.sys"]) == 4
    assert main(["check", "toy.sys", "nope.json"]) == 4
    assert "cannot read" in capsys.readouterr().err


def test_parse_error_exit_code(workdir, capsys):
    (workdir / "bad.sys").write_text("vars: x1\ndot x1 = -x1 +\n")
    assert main(["era", "bad.sys"]) == 4
    assert "line 2" in capsys.readouterr().err


def test_era_check_round_trip(workdir, capsys):
    assert main(["era", "toy.sys", "-c", "toy.cfg", "-o", "toy.cert.json"]) == 0
    out = capsys.readouterr().out
    assert "iter" in out and "rational Lyapunov function: found" in out and "certificate written" in out
    assert main(["check", "toy.sys", "toy.cert.json"]) == 0
    assert capsys.readouterr().out.strip().endswith("PASS")


def test_default_output_name(workdir):
    assert main(["era", "toy.sys", "-c", "toy.cfg", "--no-rational"]) == 0
    assert (workdir / "toy.cert.json").exists()


def test_tampered_certificate_fails(toy_cert_file):
    d = json.loads(toy_cert_file.read_text())
    d["gamma"] *= 10
    toy_cert_file.write_text(json.dumps(d))
    assert main(["check", "toy.sys", str(toy_cert_file)]) == 1


def test_malformed_certificate(workdir):
    (workdir / "junk.json").write_text("{not json")
    assert main(["check", "toy.sys", "junk.json"]) == 4


def test_dimension_mismatch(toy_cert_file):
    assert main(["check", "toy3.sys", str(toy_cert_file)]) == 5


def test_contour_needs_two_variables(workdir):
    assert main(["era", "toy3.sys", "-c", "toy.cfg", "-o", "toy3.cert.json", "--no-rational"]) == 0
    assert main(["contour", "toy3.sys", "toy3.cert.json"]) == 5
    assert main(["simulate", "toy3.sys", "toy3.cert.json", "--grid", "4", "--T", "5"]) == 0
    assert (workdir / "toy3.traj.csv").exists()


def test_contour_and_simulate(toy_cert_file, workdir, capsys):
    assert main(["contour", "toy.sys", str(toy_cert_file), "--svg", "toy.svg", "--levels", "2"]) == 0
    rows = (workdir / "toy.contour.csv").read_text().splitlines()
    assert rows[0] == "x1,x2,polyline_id"
    assert {r.rsplit(",", 1)[1] for r in rows[1:]} == {"0", "1", "2"}
    assert (workdir / "toy.svg").exists()
    assert main(["simulate", "toy.sys", str(toy_cert_file), "--grid", "5", "--T", "20"]) == 0
    out = capsys.readouterr().out
    assert "converging: 25" in out
    rows = (workdir / "toy.traj.csv").read_text().splitlines()
    assert rows[0] == "t,x1,x2,status"


def test_era_is_deterministic(workdir):
    assert main(["era", "toy.sys", "-c", "toy.cfg", "-o", "a.json"]) == 0
    assert main(["era", "toy.sys", "-c", "toy.cfg", "-o", "b.json"]) == 0
    assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()


def test_era_pieces_x1x2_system(workdir, capsys):
    sys_file = str(data_path("ex3.sys"))
    args = ["era", sys_file, "-c", str(data_path("ex3.cfg")), "--pieces", str(data_path("ex3.pieces")),
            "-o", "ex3.cert.json"]
    assert main(args) == 0
    cert = EraCertificate.loads((workdir / "ex3.cert.json").read_text())
    assert cert.piecewise and 0 < cert.gamma < 4


def test_flag_overrides(workdir):
    assert main(["era", "toy.sys", "--deg-vn", "2", "--gamma-hi", "3", "--no-rational", "-o", "c.json"]) == 0
    cert = EraCertificate.loads((workdir / "c.json").read_text())
    assert cert.config["deg_VN"] == 2 and cert.gamma <= 3.0


def test_invalid_override(workdir):
    assert main(["era", "toy.sys", "--deg-vn", "3"]) == 4


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "attrakt", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("era", "check", "simulate", "contour"):
        assert cmd in res.stdout
