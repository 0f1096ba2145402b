"""Tests for the command line front end."""

import csv
import json
import math

import numpy as np
import pytest

import floqcert
from floqcert import cli


def run(tmp_path, *args, config=None):
    argv = list(args) + ["--out", str(tmp_path)]
    if config is not None:
        tmp_path.mkdir(parents=True, exist_ok=True)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        argv += ["--config", str(path)]
    code = cli.main(argv)
    report = None
    if (tmp_path / "report.json").exists():
        report = json.loads((tmp_path / "report.json").read_text())
    return code, report


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestSolve:
    def test_example1(self, tmp_path):
        code, rep = run(tmp_path, "solve", "--problem", "example1", "--n", "16")
        assert code == 0
        cert = rep["certificate"]
        assert cert["method"] == "constant-coefficient"
        assert rep["actual_error"] <= cert["err_sup"] <= 10 * rep["actual_error"]
        rows = read_csv(tmp_path / "solution.csv")
        assert rows[0] == ["t", "re_y1", "im_y1"]
        assert len(rows) == 18 and float(rows[1][0]) == 1.0

    def test_zero(self, tmp_path):
        code, rep = run(tmp_path, "solve", "--problem", "zero")
        assert code == 0 and rep["certificate"]["err_sup"] == 0.0

    def test_rotation(self, tmp_path):
        code, rep = run(tmp_path, "solve", "--problem", "rotation", "--n", "32")
        assert code == 0
        assert rep["actual_error"] < 1e-10
        assert rep["certificate"]["err_sup"] >= rep["actual_error"]
        assert read_csv(tmp_path / "solution.csv")[0] == ["t", "re_y1", "im_y1", "re_y2", "im_y2"]

    def test_doubling_to_tolerance(self, tmp_path):
        code, rep = run(tmp_path, "solve", "--problem", "example4", "--n", "8",
                        config={"tol": 1e-8})
        assert code == 0 and rep["tol_met"]
        assert rep["N"] > 8 and rep["certificate"]["err_sup"] < 1e-8
        assert rep["certificate"]["C_A_provenance"] == "quadrature"

    def test_user_bound(self, tmp_path):
        code, rep = run(tmp_path, "solve", "--problem", "example4",
                        config={"bounds": {"C_A": 3.0}})
        assert rep["certificate"]["C_A"] == 3.0
        assert rep["certificate"]["C_A_provenance"] == "user-supplied"

    def test_report_metadata(self, tmp_path):
        _, rep = run(tmp_path, "solve", "--problem", "example2", "--param", "a=-10")
        assert rep["command"] == "solve"
        assert rep["config"]["params"] == {"a": -10.0}
        assert rep["versions"]["floqcert"] == floqcert.__version__
        assert {"numpy", "scipy", "python"} <= set(rep["versions"])


class TestCertify:
    def test_intro(self, tmp_path):
        code, rep = run(tmp_path, "certify", "--problem", "intro_dde", "--n", "184",
                        "--delta", "0.2", "--ellipse-s", "0.5")
        assert code == 0
        c = rep["certification"]
        assert c["verdict"] == "stable" and 0.02 <= c["radius"] <= 0.09
        assert c["lambda1_abs"] == pytest.approx(0.9369, abs=5e-4)
        assert c["provenance"]["ellipse_data"]["provenance"] == "user-supplied"
        assert c["provenance"]["ellipse_data_source"] == "closed-form"
        assert c["provenance"]["C_A"]["provenance"] == "quadrature"
        assert len(c["omega"]) == 184

    def test_delayed_mathieu_report(self, tmp_path):
        code, rep = run(tmp_path, "certify", "--problem", "delayed_mathieu", "--n", "73",
                        "--delta", "0.3")
        assert code == 0
        c = rep["certification"]
        assert c["n_above_delta"] == 2
        assert c["lambda1_abs"] == pytest.approx(0.5858, abs=5e-4)
        boot = c["provenance"]["C_A"]
        assert boot["provenance"] == "bootstrap"
        assert boot["value"] == pytest.approx(5.12, rel=0.05)
        assert c["verdict"] in ("stable", "inconclusive")

    def test_trivial_not_stable(self, tmp_path):
        code, rep = run(tmp_path, "certify", "--problem", "scalar_constant", "--n", "16",
                        "--param", "a0=0", "--param", "b0=0")
        assert code == 0
        c = rep["certification"]
        assert c["lambda1_abs"] == pytest.approx(1.0, abs=1e-12)
        assert c["verdict"] == "inconclusive" and not c["stable"]

    def test_sampled_ellipse_tagged(self, tmp_path):
        code, rep = run(tmp_path, "certify", "--problem", "intro_dde", "--n", "100",
                        config={"ellipse_estimate": True})
        assert code == 0
        prov = rep["certification"]["provenance"]
        assert prov["ellipse_data"]["provenance"] == "numeric-estimate"
        assert prov["ellipse_data_source"] == "sampled"

    def test_rescaling_invariance(self, tmp_path):
        p = {"a0": -0.8, "a1": 0.3, "a2": -0.2, "b0": 0.4, "b1": 0.2, "b2": 0.1}
        T = 3.0
        _, a = run(tmp_path / "a", "certify", "--problem", "trig_dde", "--n", "40",
                   config={"params": p, "period": T})
        _, b = run(tmp_path / "b", "certify", "--problem", "trig_dde", "--n", "40",
                   config={"params": {k: T / 2 * v for k, v in p.items()}})
        ea, eb = a["certification"]["eigenvalues"], b["certification"]["eigenvalues"]
        assert len(ea) == len(eb)
        for x, y in zip(ea, eb):
            assert abs(x["re"] - y["re"]) < 1e-10 and abs(x["im"] - y["im"]) < 1e-10


INTRO_CHART = {
    "problem": "intro_dde",
    "N": 24,
    "chart": {"x": {"name": "a", "min": -3.0, "max": 3.0, "n": 5},
              "y": {"name": "b", "min": -2.0, "max": 4.0, "n": 4}},
}


def chart_rows(path):
    rows = read_csv(path)
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


class TestChart:
    def test_outputs(self, tmp_path):
        code, rep = run(tmp_path, "chart", "--workers", "1", config=INTRO_CHART)
        assert code == 0
        header, rows = chart_rows(tmp_path / "chart.csv")
        assert header == ["x", "y", "rho"] and len(rows) == 20
        data = (tmp_path / "chart.pgm").read_bytes()
        assert data.startswith(b"P5\n5 4\n255\n") and len(data) == len(b"P5\n5 4\n255\n") + 20
        assert rep["chart"]["failed_pixels"] == 0

    def test_reference_pixels_stable(self, tmp_path):
        cfg = dict(INTRO_CHART, N=32, chart={"x": {"name": "a", "min": -1.1, "max": 1.0, "n": 2},
                                            "y": {"name": "b", "min": 1.0, "max": 3.0, "n": 2}})
        run(tmp_path / "intro", "chart", "--workers", "1", config=cfg)
        _, rows = chart_rows(tmp_path / "intro" / "chart.csv")
        assert rows[0][:2] == [-1.1, 1.0] and rows[0][2] < 1
        cfg = {"problem": "delayed_mathieu", "N": 40,
               "chart": {"x": {"name": "b", "min": 0.5, "max": 4.0, "n": 2},
                         "y": {"name": "c", "min": 1.0, "max": 3.0, "n": 2}}}
        run(tmp_path / "dm", "chart", "--workers", "1", config=cfg)
        _, rows = chart_rows(tmp_path / "dm" / "chart.csv")
        assert rows[0][:2] == [0.5, 1.0] and rows[0][2] < 1

    def test_trivial_pixel(self, tmp_path):
        cfg = {"problem": "scalar_constant", "N": 16,
               "chart": {"x": {"name": "a0", "min": 0.0, "max": 1.0, "n": 2},
                         "y": {"name": "b0", "min": 0.0, "max": 1.0, "n": 2}}}
        run(tmp_path, "chart", "--workers", "1", config=cfg)
        _, rows = chart_rows(tmp_path / "chart.csv")
        assert rows[0][:2] == [0.0, 0.0] and rows[0][2] == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_across_workers(self, tmp_path):
        run(tmp_path / "one", "chart", "--workers", "1", config=INTRO_CHART)
        run(tmp_path / "two", "chart", "--workers", "2", config=INTRO_CHART)
        run(tmp_path / "again", "chart", "--workers", "1", config=INTRO_CHART)
        for name in ("chart.csv", "chart.pgm"):
            ref = (tmp_path / "one" / name).read_bytes()
            assert (tmp_path / "two" / name).read_bytes() == ref
            assert (tmp_path / "again" / name).read_bytes() == ref

    def test_failed_pixel_is_nan(self, tmp_path, monkeypatch):
        real = cli.build_monodromy

        def flaky(system, N):
            if np.isclose(np.asarray(system.A(np.array([0.0]))).ravel()[0], 0.0):
                raise floqcert.SingularSystem("forced")
            return real(system, N)

        monkeypatch.setattr(cli, "build_monodromy", flaky)
        cfg = dict(INTRO_CHART, chart={"x": {"name": "a", "min": -1.0, "max": 1.0, "n": 3},
                                       "y": {"name": "b", "min": 0.0, "max": 1.0, "n": 2}})
        code, rep = run(tmp_path, "chart", "--workers", "1", config=cfg)
        assert code == 0 and rep["chart"]["failed_pixels"] == 2
        _, rows = chart_rows(tmp_path / "chart.csv")
        assert all(math.isnan(r[2]) == (r[0] == 0.0) for r in rows)

    def test_gray_levels(self):
        g = cli.gray_levels(np.array([0.01, 0.5, 0.999, 1.0, 2.0, 100.0, np.nan]))
        assert g[0] == 255 and g[3] == 127 and g[5] == 0 and g[6] == 0
        assert 128 <= g[1] <= 255 and g[2] >= 128 and g[4] < 127

    def test_image_orientation(self, tmp_path):
        levels = np.array([[1, 2], [3, 4]], dtype=np.uint8)
        cli.write_pgm(tmp_path / "x.pgm", levels)
        assert (tmp_path / "x.pgm").read_bytes()[-4:] == bytes([1, 2, 3, 4])

    def test_worker_count(self, monkeypatch):
        monkeypatch.setenv("FLOQCERT_WORKERS", "3")
        assert cli.worker_count({}) == 3
        assert cli.worker_count({"workers": 2}) == 2
        monkeypatch.delenv("FLOQCERT_WORKERS")
        assert cli.worker_count({}) >= 1


class TestBound:
    def test_stiff_mathieu(self, tmp_path):
        code, rep = run(tmp_path, "bound", "--problem", "stiff_mathieu", "--n", "50")
        assert code == 0
        assert rep["bound"]["value"] == pytest.approx(19.587, rel=0.02)
        assert rep["apriori"] == pytest.approx(3.5387e16, rel=1e-4)
        assert rep["bound"]["history"][0] == rep["apriori"]

    def test_zero(self, tmp_path):
        code, rep = run(tmp_path, "bound", "--problem", "zero", "--n", "8")
        assert code == 0 and rep["bound"]["value"] == pytest.approx(1.0, abs=1e-10)

    def test_delayed_mathieu(self, tmp_path):
        code, rep = run(tmp_path, "bound", "--problem", "delayed_mathieu", "--n", "73")
        assert code == 0 and rep["bound"]["value"] == pytest.approx(5.12, rel=0.05)


class TestErrors:
    def test_missing_problem(self, tmp_path, capsys):
        assert cli.main(["solve", "--out", str(tmp_path)]) == 2
        assert "configuration error" in capsys.readouterr().err

    @pytest.mark.parametrize("args", [
        ["solve", "--problem", "nope"],
        ["solve", "--problem", "intro_dde"],
        ["certify", "--problem", "example1"],
        ["certify", "--problem", "intro_dde", "--delta", "1.5"],
        ["certify", "--problem", "intro_dde", "--ellipse-s", "0"],
        ["solve", "--problem", "example1", "--n", "0"],
        ["solve", "--problem", "example1", "--param", "zz=1"],
        ["solve", "--problem", "example1", "--param", "y0"],
        ["chart", "--problem", "intro_dde"],
    ])
    def test_config_errors(self, tmp_path, args):
        assert cli.main(args + ["--out", str(tmp_path)]) == 2
        assert not (tmp_path / "report.json").exists()

    def test_bad_chart_axis(self, tmp_path):
        cfg = dict(INTRO_CHART, chart={"x": {"name": "a", "min": 0, "max": 1, "n": 1},
                                       "y": {"name": "b", "min": 0, "max": 1, "n": 2}})
        code, _ = run(tmp_path, "chart", config=cfg)
        assert code == 2

    def test_stage_error(self, tmp_path, capsys):
        code, rep = run(tmp_path, "bound", "--problem", "stiff_mathieu", "--n", "12")
        assert code == 1 and rep is None
        assert "bootstrap failed" in capsys.readouterr().err

    def test_flags_override_file(self, tmp_path):
        code, rep = run(tmp_path, "solve", "--n", "12", "--param", "y0=0.5",
                        config={"problem": "example1", "N": 40, "params": {"y0": 0.1}})
        assert code == 0
        assert rep["config"]["N"] == 12 and rep["N"] == 12
        assert rep["config"]["params"]["y0"] == 0.5

    def test_module_entry_point(self):
        import subprocess
        import sys

        out = subprocess.run([sys.executable, "-m", "floqcert", "--version"],
                             capture_output=True, text=True, check=True)
        assert floqcert.__version__ in out.stdout
