import cmath
import csv
import json
import math
import subprocess
import sys

import pytest

from delayadmit.cli import RunConfig, main, region_boundary
from delayadmit.systems import dump_spec, heat_reciprocal_spec, symbol_sampled_spec


@pytest.fixture
def heat10(tmp_path):
    p = tmp_path / "heat10.json"
    dump_spec(heat_reciprocal_spec(10), p)
    return p


@pytest.fixture
def unstable(tmp_path):
    p = tmp_path / "unstable.json"
    dump_spec(symbol_sampled_spec([-2.0], 1.0, [1.0]), p)
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_defaults(self, tmp_path):
        cfg = RunConfig("analyze", tmp_path / "s.json", tmp_path)
        assert cfg.rel_tol == 1e-6 and cfg.dt_divisor == 64 and cfg.N == 1000

    @pytest.mark.parametrize("field, value", [("rel_tol", 0.0), ("rel_tol", 1.0), ("dt_divisor", 8), ("N", 0)])
    def test_invalid(self, tmp_path, field, value):
        with pytest.raises(ValueError):
            RunConfig("analyze", tmp_path / "s.json", tmp_path, **{field: value})

    def test_region_needs_tau(self, tmp_path):
        with pytest.raises(ValueError):
            RunConfig("region", None, tmp_path)

    def test_cli_reports_bad_divisor(self, heat10, tmp_path, capsys):
        assert main(["verify", "--spec", str(heat10), "--out", str(tmp_path), "--dt-divisor", "8"]) == 1
        assert "dt-divisor" in capsys.readouterr().err


class TestAnalyze:
    def test_heat_all_members(self, heat10, tmp_path):
        out = tmp_path / "fresh" / "nested"
        assert main(["analyze", "--spec", str(heat10), "--out", str(out)]) == 0
        rows = read_csv(out / "modes.csv")
        assert len(rows) == 10 and all(r["member"] == "1" for r in rows)
        report = json.loads((out / "report.json").read_text())
        assert report["all_members"] is True

    def test_unstable(self, unstable, tmp_path):
        assert main(["analyze", "--spec", str(unstable), "--out", str(tmp_path)]) == 1
        row = read_csv(tmp_path / "modes.csv")[0]
        assert row["member"] == "0" and float(row["spectral_abscissa"]) > 0

    def test_bad_spec(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text('{"tau": 1, "modes": [{"index": 1, "lambda": [0.5, 0], "b": [1, 0]}]}')
        assert main(["analyze", "--spec", str(p), "--out", str(tmp_path)]) == 1
        assert "modes[0].lambda" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["analyze", "--spec", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1


class TestRegion:
    def test_rows(self, tmp_path):
        assert main(["region", "--tau", "1", "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "boundary.csv")
        assert len(rows) == 1024
        pi_row = next(r for r in rows if r["arc"] == "upper" and float(r["arg"]) == math.pi)
        assert float(pi_row["radius"]) == pytest.approx(math.pi / 2)

    def test_scaling(self):
        a, b = region_boundary(1.0), region_boundary(2.0)
        for ra, rb in zip(a, b):
            assert rb[2] == pytest.approx(ra[2] / 2, rel=1e-14)

    def test_apsides(self):
        tau = 1.5
        re = [r[3] for r in region_boundary(tau)]
        assert min(re) == pytest.approx(-math.pi / (2 * tau), rel=1e-12)
        assert max(re) == pytest.approx(0.0, abs=1e-4)

    def test_points_lie_on_boundary(self):
        for arc, arg, radius, re, im in region_boundary(0.7)[::37]:
            lam = complex(re, im)
            assert abs(lam) == pytest.approx(radius)
            assert abs(lam) * 0.7 == pytest.approx(abs(cmath.phase(lam)) - math.pi / 2, abs=1e-12)


class TestRoots:
    def test_unit_mode(self, tmp_path):
        p = tmp_path / "one.json"
        dump_spec(symbol_sampled_spec([-1.0], 1.0, [1.0]), p)
        assert main(["roots", "--spec", str(p), "--K", "4", "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "roots.csv")
        assert len(rows) == 9
        first = complex(float(rows[0]["re"]), float(rows[0]["im"]))
        assert abs(first - complex(-0.318131505, 1.337235701)) < 1e-8


class TestSimulate:
    @pytest.mark.parametrize("kind", ["none", "pulse", "random"])
    def test_trajectories(self, heat10, tmp_path, kind):
        args = ["simulate", "--spec", str(heat10), "--out", str(tmp_path), "--max-modes", "2", "--input", kind]
        assert main(args + ["--T", "5"]) == 0
        rows = read_csv(tmp_path / "trajectory_1.csv")
        assert len(rows) == 5 * 64 + 1
        assert (tmp_path / "trajectory_2.csv").exists()
        assert not (tmp_path / "trajectory_3.csv").exists()
        if kind == "none":
            assert float(rows[0]["re_z"]) == 1.0


class TestVerify:
    def test_heat_passes_and_is_deterministic(self, heat10, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["verify", "--spec", str(heat10), "--out", str(a), "--seed", "7"]) == 0
        assert main(["verify", "--spec", str(heat10), "--out", str(b), "--seed", "7"]) == 0
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
        assert (a / "modes.csv").read_bytes() == (b / "modes.csv").read_bytes()
        report = json.loads((a / "report.json").read_text())
        for m in report["modes"]:
            assert m["status"] == "pass"
            assert m["paley_wiener_rel"] <= 1e-3
            assert m["empirical_ratio_sq"] <= 1.05
            assert m["empirical_ratio"] == pytest.approx(math.sqrt(m["empirical_ratio_sq"]))

    def test_boundary_flagged_skipped(self, tmp_path):
        p = tmp_path / "edge.json"
        lam = (math.pi / 4 - 1e-11) * cmath.exp(3j * math.pi / 4)
        dump_spec(symbol_sampled_spec([-1.0, lam], 1.0, [1.0, 1.0]), p)
        with pytest.warns(UserWarning, match="skipped"):
            code = main(["verify", "--spec", str(p), "--out", str(tmp_path), "--inputs", "2"])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert [m["status"] for m in report["modes"]] == ["pass", "skipped"]

    def test_outside_region_fails(self, unstable, tmp_path, capsys):
        assert main(["verify", "--spec", str(unstable), "--out", str(tmp_path)]) == 1
        assert "mode 1" in capsys.readouterr().err


    def test_failed_comparison_exit_code(self, heat10, tmp_path, monkeypatch):
        import delayadmit.cli as cli

        monkeypatch.setattr(cli, "EMPIRICAL_SLACK", 0.0)
        assert main(["verify", "--spec", str(heat10), "--out", str(tmp_path), "--max-modes", "1", "--inputs", "1"]) == 2
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["modes"][0]["checks"]["empirical_le_certificate"] is False


class TestCertify:
    def test_summable(self, heat10, tmp_path):
        assert main(["certify", "--spec", str(heat10), "--out", str(tmp_path), "--N", "1000"]) == 0
        doc = json.loads((tmp_path / "certificate.json").read_text())
        assert doc["tail_verdict"] == "proven-summable-by-ratio"
        assert doc["N"] == 1000
        assert len(read_csv(tmp_path / "certificate.csv")) == 1000

    def test_not_summable(self, tmp_path):
        p = tmp_path / "q1.json"
        with pytest.warns(UserWarning):
            dump_spec(heat_reciprocal_spec(10, q=1.0), p)
        assert main(["certify", "--spec", str(p), "--out", str(tmp_path)]) == 1
        doc = json.loads((tmp_path / "report.json").read_text())
        assert doc["summable"] is False

    def test_outside_region(self, unstable, tmp_path):
        assert main(["certify", "--spec", str(unstable), "--out", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "delayadmit", "region", "--tau", "2", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert (tmp_path / "boundary.csv").exists()
