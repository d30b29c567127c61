import csv
import subprocess
import sys

import numpy as np
import pytest

from conftori import read_immersion
from conftori.cli import load_config, main, UsageError


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def report(text):
    return dict(line.split(" = ", 1) for line in text.splitlines() if " = " in line)


@pytest.fixture
def files(tmp_path, capsys):
    paths = {}
    for name, args in {"clifford": ["clifford"], "cmc": ["flat-cmc", "--a", 0.6],
                       "hopf": ["hopf-circle", "--kappa", 1.0]}.items():
        p = tmp_path / f"{name}.ctl"
        assert run(["gen", *args, "--n", 64, "-o", p], capsys)[0] == 0
        paths[name] = p
    return paths


def test_gen_roundtrip(files):
    phi = read_immersion(files["cmc"])
    assert phi.grid.shape == (64, 64) and phi.conformal
    meta = files["cmc"].with_name("cmc.ctl.meta").read_text()
    assert "family = flat-cmc" in meta


def test_gen_domain_error(tmp_path, capsys):
    code, _, err = run(["gen", "flat-cmc", "--a", 1.5, "-o", tmp_path / "x.ctl"], capsys)
    assert code == 2 and "0 < a < 1" in err


def test_gen_needs_parameter(tmp_path, capsys):
    assert run(["gen", "hopf-circle", "-o", tmp_path / "x.ctl"], capsys)[0] == 2


def test_gen_odd_resolution(tmp_path, capsys):
    assert run(["gen", "clifford", "--n", 31, "-o", tmp_path / "x.ctl"], capsys)[0] == 2


def test_gen_hopf_curve(tmp_path, capsys):
    th = np.linspace(0, 2 * np.pi, 129)[:-1]
    r = np.pi / 4 + 0.05 * np.cos(3 * th)
    pts = np.stack([np.sin(r) * np.cos(th), np.sin(r) * np.sin(th), np.cos(r)], 1)
    np.savetxt(tmp_path / "c.csv", pts, delimiter=",")
    out = tmp_path / "w.ctl"
    code, _, _ = run(["gen", "hopf-curve", "--curve", tmp_path / "c.csv", "--n", 128, "--n2", 32,
                      "-o", out], capsys)
    assert code == 0
    code, text, _ = run(["classify", out], capsys)
    assert code == 0 and report(text)["bucket"] == "constrained_only"


def test_hopf_geom_has_flat_metric(files, capsys):
    code, text, _ = run(["geom", files["hopf"]], capsys)
    rep = report(text)
    assert code == 0
    assert abs(float(rep["lam_min"])) < 1e-10 and abs(float(rep["lam_max"])) < 1e-10


def test_classify_clifford(files, capsys):
    code, text, _ = run(["classify", files["clifford"]], capsys)
    assert code == 0 and report(text)["bucket"] == "minimal"
    assert run(["classify", files["clifford"], "--expect", "flat_cmc"], capsys)[0] == 1


def test_vc_clifford(files, capsys):
    code, text, _ = run(["vc", files["clifford"]], capsys)
    assert code == 0 and float(report(text)["vc"]) == pytest.approx(2 * np.pi ** 2, abs=1e-6)


def test_mobius_check(files, capsys, tmp_path):
    code, text, _ = run(["mobius-check", files["hopf"], "--a", "0.3,0,0,0", "--csv",
                         tmp_path / "m.csv", "--report", tmp_path / "m.txt"], capsys)
    rep = report(text)
    assert code == 0
    assert float(rep["weingarten_discrepancy"]) <= 1e-6
    assert float(rep["mean_curvature_discrepancy"]) <= 1e-6
    rows = list(csv.reader(open(tmp_path / "m.csv")))
    assert rows[0][-1] == "status" and rows[1][-1] == "pass"
    assert (tmp_path / "m.txt").read_text() == text


def test_mobius_check_bad_parameter(files, capsys):
    assert run(["mobius-check", files["hopf"], "--a", "0.9,0.9,0,0"], capsys)[0] == 2
    assert run(["mobius-check", files["hopf"], "--a", "0.1,0"], capsys)[0] == 2


def test_threshold_failure_exit_code(files, capsys):
    code, text, _ = run(["mobius-check", files["hopf"], "--tol", 1e-20], capsys)
    assert code == 1 and report(text)["status"] == "fail"


def test_secondvar(files, capsys):
    code, text, _ = run(["secondvar", files["clifford"]], capsys)
    assert code == 0
    assert float(report(text)["second_variation"]) == pytest.approx(-8 * np.pi ** 2, abs=1e-8)
    code, text, _ = run(["secondvar", files["hopf"], "--field", "random", "--seed", 3], capsys)
    rep = report(text)
    assert code == 0 and rep["run.seed"] == "3"
    assert float(rep["second_variation"]) == pytest.approx(float(rep["unreduced"]), rel=1e-8)


def test_fitq_hopf(files, capsys):
    code, text, _ = run(["fitq", files["hopf"]], capsys)
    rep = report(text)
    assert code == 0 and rep["ellipticity"] == "strictly_elliptic"
    assert float(rep["two_Q_norm_max"]) == pytest.approx(2 ** -0.5, abs=1e-9)


def test_plotdata(files, capsys, tmp_path):
    out = tmp_path / "h.csv"
    assert run(["plotdata", files["cmc"], "H", "-o", out], capsys)[0] == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["x1", "x2", "H"] and len(rows) == 64 * 64 + 1
    assert np.allclose([float(r[2]) for r in rows[1:]], 0.2916666666666667, atol=1e-9)
    code, text, _ = run(["plotdata", files["hopf"], "two_Q_norm"], capsys)
    vals = [float(line.split(",")[2]) for line in text.splitlines()[1:]]
    assert code == 0 and np.allclose(vals, 2 ** -0.5, atol=1e-9)


def test_plotdata_bogus(files, capsys):
    assert run(["plotdata", files["cmc"], "bogus"], capsys)[0] == 2


def test_descent(tmp_path, capsys):
    p = tmp_path / "c.ctl"
    run(["gen", "flat-cmc", "--a", 0.6, "--n", 192, "--n2", 256, "-o", p], capsys)
    code, text, _ = run(["descent", p, "--x0", "1,1", "--epsilon", 0.2], capsys)
    rep = report(text)
    assert code == 0 and float(rep["rel_err"]) < 0.1 and float(rep["F_chi"]) > 0


def test_config_file(files, tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nseed = 7\n[mobius-check]\na = 0.1,0.2,0,0\ntol = 1e-5\n")
    code, text, _ = run(["mobius-check", files["hopf"], "--config", cfg], capsys)
    rep = report(text)
    assert code == 0 and rep["mobius-check.a"] == "0.1,0.2,0,0" and rep["run.seed"] == "7"
    # flags override the file
    code, text, _ = run(["mobius-check", files["hopf"], "--config", cfg, "--tol", 2e-5], capsys)
    assert report(text)["mobius-check.tol"] == "2e-05"


@pytest.mark.parametrize("body", ["[grid]\nbogus = 1\n", "[nosuch]\nn = 8\n", "[grid]\nn = eight\n",
                                  "no section\n"])
def test_config_rejects_unknown(tmp_path, body):
    p = tmp_path / "bad.ini"
    p.write_text(body)
    with pytest.raises(UsageError):
        load_config(p)


@pytest.mark.parametrize("flag", [["--tol", -1], ["--tol", 0], ["--n", 6]])
def test_usage_validation(files, capsys, flag):
    assert run(["classify", files["clifford"], *flag], capsys)[0] == 2


def test_missing_and_malformed_input(tmp_path, files, capsys):
    assert run(["geom", tmp_path / "none.ctl"], capsys)[0] == 2
    bad = tmp_path / "bad.ctl"
    bad.write_bytes(files["clifford"].read_bytes()[:200])
    code, _, err = run(["geom", bad], capsys)
    assert code == 2 and "CTL" in err


def test_usage_error_from_argparse(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "torus"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    p = tmp_path / "c.ctl"
    r = subprocess.run([sys.executable, "-m", "conftori", "gen", "clifford", "--n", "16", "-o", str(p)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and p.exists()


def test_reports_are_deterministic(files, capsys):
    a = run(["vc", files["hopf"]], capsys)[1]
    b = run(["vc", files["hopf"]], capsys)[1]
    assert a == b
