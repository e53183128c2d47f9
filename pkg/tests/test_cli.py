import csv
import io
import json

import numpy as np
import pytest

from balmet import DiagonalMetric, build_trajectory
from balmet.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(v) for v in row] for row in rows[1:]]


class TestIterate:
    def test_tk_benchmark_rows(self, capsys):
        code, out, _ = run_cli(capsys, "iterate", "--op", "TK", "--k", "2",
                               "--coeffs", "1,17,36", "--steps", "5",
                               "--normalize", "balanced")
        assert code == 0
        header, rows = parse_csv(out)
        assert header[:4] == ["r", "a0", "a1", "a2"]
        assert len(rows) == 6
        want = (0.9738, 12.6377, 35.0561, 0.0640, 0.3027)
        assert np.allclose(rows[1][1:6], want, atol=1e-4)

    def test_round_metric_constant(self, capsys):
        code, out, _ = run_cli(capsys, "iterate", "--op", "Tnu", "--k", "3",
                               "--family", "round", "--steps", "2")
        assert code == 0
        _, rows = parse_csv(out)
        coeffs = np.array([row[1:5] for row in rows])
        assert np.allclose(coeffs, coeffs[0], rtol=1e-9)

    def test_cpn_class_run_has_sigma_column(self, capsys):
        code, out, _ = run_cli(capsys, "iterate", "--op", "Tnu", "--n", "3",
                               "--k", "4", "--class-coeffs", "1,20,30,40,50",
                               "--steps", "8", "--normalize", "first")
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["r", "a1", "a2", "a5", "a6", "a15", "err", "bnd",
                          "sigma_tilde"]
        assert rows[8][header.index("sigma_tilde")] == pytest.approx(0.1667, abs=5e-4)
        assert rows[1][2] == pytest.approx(4.3071170, abs=1e-4)

    def test_csv_round_trip_is_exact(self, capsys):
        code, out, _ = run_cli(capsys, "iterate", "--op", "TK", "--k", "2",
                               "--coeffs", "1,17,36", "--steps", "3")
        assert code == 0
        _, rows = parse_csv(out)
        traj = build_trajectory("TK", DiagonalMetric(np.array([1.0, 17.0, 36.0])),
                                steps=3)
        shown = traj.display_iterates()
        for r, row in enumerate(rows):
            assert row[1:4] == [float(v) for v in shown[r].coeffs]
            assert row[4] == traj.err[r]

    def test_json_schema(self, capsys, tmp_path):
        out_path = tmp_path / "run.json"
        code, _, _ = run_cli(capsys, "iterate", "--op", "Tnu", "--k", "3",
                             "--coeffs", "1,25,0.07,13", "--steps", "2",
                             "--format", "json", "--out", str(out_path))
        assert code == 0
        payload = json.loads(out_path.read_text())
        assert payload["meta"]["operator"] == "Tnu"
        assert payload["meta"]["n"] == 1
        assert payload["meta"]["k"] == 3
        assert payload["meta"]["normalization"] == "balanced"
        assert "tolerances" in payload["meta"]
        assert len(payload["rows"]) == 3
        row0 = payload["rows"][0]
        assert set(row0) == {"r", "coeffs", "err", "sigma_tilde", "bnd"}
        assert row0["sigma_tilde"] is None
        assert len(row0["coeffs"]) == 4

    def test_deterministic_output(self, capsys):
        args = ("iterate", "--op", "T", "--k", "2", "--coeffs", "1,17,36",
                "--steps", "3")
        _, out1, _ = run_cli(capsys, *args)
        _, out2, _ = run_cli(capsys, *args)
        assert out1 == out2


class TestValidationErrors:
    def test_wrong_coeff_count(self, capsys):
        code, _, err = run_cli(capsys, "iterate", "--op", "T", "--k", "2",
                               "--coeffs", "1,2", "--steps", "1")
        assert code == 1
        assert "expected 3" in err

    def test_nonpositive_coeff(self, capsys):
        code, _, _ = run_cli(capsys, "iterate", "--op", "T", "--k", "2",
                             "--coeffs", "1,-2,3", "--steps", "1")
        assert code == 1

    def test_tk_odd_degree(self, capsys):
        code, _, _ = run_cli(capsys, "iterate", "--op", "TK", "--k", "3",
                             "--coeffs", "1,2,2,1", "--steps", "1")
        assert code == 1

    def test_unknown_operator(self, capsys):
        code, _, _ = run_cli(capsys, "iterate", "--op", "Q", "--k", "2",
                             "--coeffs", "1,2,1", "--steps", "1")
        assert code == 1

    def test_usage_error_exits_1(self, capsys):
        code, _, _ = run_cli(capsys, "iterate", "--op", "T")
        assert code == 1

    def test_numerical_failure_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "sigma", "--op", "T", "--k", "6",
                               "--coeffs", "1,6000,150000,2e10,150000,6000,1",
                               "--max-iter", "2")
        assert code == 2
        assert "numerical failure" in err


class TestSigmaCommand:
    def test_predicted_value_T6(self, capsys):
        # no explicit start: the command generates a seeded random metric
        code, out, _ = run_cli(capsys, "sigma", "--op", "T", "--k", "6",
                               "--err-floor", "1e-8")
        assert code == 0
        report = dict(line.split(": ", 1) for line in out.strip().splitlines())
        assert float(report["sigma_predicted"]) == pytest.approx(60 / 72, rel=1e-12)
        assert float(report["sigma_hat"]) == pytest.approx(60 / 72, abs=0.01)
        assert int(report["iterations_used"]) > 3

    def test_cpn_symmetric_prediction(self, capsys):
        code, out, _ = run_cli(capsys, "sigma", "--op", "Tnu", "--n", "2",
                               "--k", "2", "--symmetric", "true",
                               "--err-floor", "1e-8", "--format", "json")
        assert code == 0
        report = json.loads(out)
        assert report["sigma_predicted"] == pytest.approx(1 / 15, rel=1e-12)
        assert report["regime"] == "generally symmetric"
        assert abs(report["abs_difference"]) < 0.01

    def test_cpn_generic_prediction(self, capsys):
        code, out, _ = run_cli(capsys, "sigma", "--op", "Tnu", "--n", "2",
                               "--k", "3", "--symmetric", "false",
                               "--err-floor", "1e-7", "--format", "json")
        assert code == 0
        report = json.loads(out)
        assert report["sigma_predicted"] == pytest.approx(0.50, rel=1e-12)
        assert report["regime"] == "generic"
        assert abs(report["abs_difference"]) < 0.01


class TestReproduceCommand:
    def test_tk_table_passes(self, capsys, tmp_path):
        out_path = tmp_path / "tk.csv"
        code, out, _ = run_cli(capsys, "reproduce", "tk-k2", "--out", str(out_path))
        assert code == 0
        assert "RESULT: PASS" in out
        header, rows = parse_csv(out_path.read_text())
        assert header == ["r", "a0", "a1", "a2", "dist", "bnd"]
        assert len(rows) == 6

    def test_unknown_table(self, capsys):
        code, _, _ = run_cli(capsys, "reproduce", "nope")
        assert code == 1

    def test_mismatch_exits_3(self, capsys, monkeypatch):
        import balmet.tables as tables

        bad = [list(r) for r in tables.golden_table("tk-k2").rows]
        bad[0][1] += 0.5  # corrupt one golden cell

        real = tables.golden_table

        def fake(table_id):
            t = real(table_id)
            if table_id == "tk-k2":
                return tables.GoldenTable(t.table_id, t.description, t.columns,
                                          tuple(tuple(r) for r in bad),
                                          t.runtime_budget_s)
            return t

        monkeypatch.setattr(tables, "golden_table", fake)
        monkeypatch.setattr("balmet.cli.golden_table", fake)
        code, out, _ = run_cli(capsys, "reproduce", "tk-k2")
        assert code == 3
        assert "RESULT: FAIL" in out


class TestProfileCommand:
    def test_writes_one_file_per_iterate(self, capsys, tmp_path):
        out_path = tmp_path / "prof.csv"
        code, _, _ = run_cli(capsys, "profile", "--op", "T", "--k", "4",
                             "--coeffs", "1,300,300,300,1", "--steps", "4",
                             "--out", str(out_path), "--x-count", "32")
        assert code == 0
        files = sorted(tmp_path.glob("prof_r*.csv"))
        assert [f.name for f in files] == [f"prof_r{r}.csv" for r in range(5)]
        for f in files:
            _, rows = parse_csv(f.read_text())
            assert len(rows) == 32
            assert all(row[1] >= 0 for row in rows)

    def test_stdout_long_format(self, capsys):
        code, out, _ = run_cli(capsys, "profile", "--op", "Tnu", "--k", "1",
                               "--coeffs", "1,1", "--x-count", "5")
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["r", "x", "rho"]
        assert len(rows) == 5

    def test_round_profile_inversion_symmetric(self, capsys):
        code, out, _ = run_cli(capsys, "profile", "--op", "Tnu", "--k", "4",
                               "--family", "round",
                               "--xs", "0.25,4.0")
        assert code == 0
        _, rows = parse_csv(out)
        # rho(1/x) = x^2 rho(x) pairs the two sample points
        assert rows[1][2] == pytest.approx(rows[0][2] / 16.0, rel=1e-11)

    def test_rejects_cpn(self, capsys):
        code, _, _ = run_cli(capsys, "profile", "--op", "Tnu", "--n", "2",
                             "--k", "2", "--family", "round")
        assert code == 1
