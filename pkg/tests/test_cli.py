import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from qeforge.cli import format_float, json_dumps, main

GOLDEN = Path(__file__).parent / "golden"


def run_cli(*argv, capsys=None):
    """Invoke the CLI in-process and capture stdout."""
    code = main(list(argv))
    out, err = capsys.readouterr() if capsys else ("", "")
    return code, out, err


def normalize_floats(text: str, sig: int = 12) -> str:
    """Re-round every float literal inside a JSON document to sig digits."""
    obj = json.loads(text)

    def walk(o):
        if isinstance(o, float):
            return float(f"{o:.{sig}g}")
        if isinstance(o, dict):
            return {k: walk(v) for k, v in o.items()}
        if isinstance(o, list):
            return [walk(v) for v in o]
        return o

    return json_dumps(walk(obj), sig=sig)


class TestJsonWriter:
    def test_sorted_keys_and_compact(self):
        assert json_dumps({"b": 1, "a": [True, None]}) == '{"a":[true,null],"b":1}'

    def test_float_formatting(self):
        assert format_float(0.1, 17) == "0.10000000000000001"
        assert format_float(1.0, 6) == "1"

    def test_round_trip(self):
        obj = {"x": 1.0 / 3.0, "y": [1e-300, 2.5]}
        assert json.loads(json_dumps(obj))["x"] == 1.0 / 3.0


class TestVerifyCommand:
    def test_pass_exit_zero(self, capsys):
        code, out, _ = run_cli("verify", "--scenario", "flat_sanity",
                               "--points", "3", capsys=capsys)
        assert code == 0
        assert "PASS" in out

    def test_verification_failure_exit_one(self, capsys):
        # wrong mu breaks the quasi-Einstein residual
        code, out, _ = run_cli("verify", "--scenario", "thm13_case1_skappa",
                               "--kappa", "1", "--mu", "4.0", "--points", "3",
                               capsys=capsys)
        assert code == 1

    def test_parse_error_exit_two(self, tmp_path, capsys):
        spec = {"scenario": "walker_distribution",
                "params": {"a": {"11": "2*/x1"}}}
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(spec))
        code, _, err = run_cli("verify", "--scenario-file", str(path),
                               capsys=capsys)
        assert code == 2
        assert "offset" in err

    def test_singularity_exit_three(self, tmp_path, capsys):
        # log of a negative argument inside the sampling box
        spec = {"scenario": "walker_distribution",
                "params": {"a": {"11": "log(x1-10)"}}}
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(spec))
        code, _, err = run_cli("verify", "--scenario-file", str(path),
                               capsys=capsys)
        assert code == 3

    def test_unknown_scenario_exit_two(self, capsys):
        code, _, err = run_cli("verify", "--scenario", "bogus", capsys=capsys)
        assert code == 2

    def test_json_report_to_file(self, tmp_path, capsys):
        out_path = tmp_path / "report.json"
        code, _, _ = run_cli("verify", "--scenario", "flat_sanity",
                             "--points", "3", "--json", str(out_path),
                             capsys=capsys)
        assert code == 0
        report = json.loads(out_path.read_text())
        assert report["scenario"] == "flat_sanity"
        assert report["aggregate"] is True
        assert {"point", "residuals", "verdicts"} <= set(report["points"][0])

    def test_asd_report_w_plus_column(self, tmp_path, capsys):
        out_path = tmp_path / "asd.json"
        code, _, _ = run_cli("verify", "--scenario", "asd_nilpotent",
                             "--points", "3", "--json", str(out_path),
                             capsys=capsys)
        assert code == 0
        report = json.loads(out_path.read_text())
        assert all(rec["residuals"]["w_plus"] <= 1e-8
                   for rec in report["points"])
        assert all(rec["residuals"]["w_minus"] >= 1e-4
                   for rec in report["points"])

    def test_byte_identical_reports(self, tmp_path, capsys):
        texts = []
        for name in ("a.json", "b.json"):
            path = tmp_path / name
            code, _, _ = run_cli("verify", "--scenario", "thm13_case2",
                                 "--seed", "7", "--points", "3",
                                 "--json", str(path), capsys=capsys)
            assert code == 0
            texts.append(path.read_bytes())
        assert texts[0] == texts[1]


class TestGoldenReports:
    @pytest.mark.parametrize("sid,params,fname", [
        ("flat_sanity", {}, "flat_sanity.json"),
        ("thm13_case1_skappa", {"kappa": 1.0}, "case1_skappa.json"),
    ])
    def test_schema_stable(self, sid, params, fname):
        from qeforge.verifier import run_scenario

        report = run_scenario(sid, params, points=4, seed=42)
        current = normalize_floats(json_dumps(report.to_dict()))
        golden = normalize_floats((GOLDEN / fname).read_text())
        assert current == golden


class TestEigdimCommand:
    def test_s2_scan(self, tmp_path, capsys):
        path = tmp_path / "surface.json"
        path.write_text(json.dumps({"type": "s_kappa",
                                    "params": {"kappa": 2.0}}))
        code, out, _ = run_cli("eigdim", "--surface", str(path),
                               "--mu-range=-2:4:0.5", capsys=capsys)
        assert code == 0
        dims = {}
        for line in out.splitlines():
            m = re.match(r"\s*(-?[\d.]+)\s+(\d)\s+\d", line)
            if m:
                dims[float(m.group(1))] = int(m.group(2))
        assert dims[0.0] == 1 and dims[3.0] == 1
        assert all(d == 0 for mu, d in dims.items() if mu not in (0.0, 3.0))
        assert dims[-1.0] == 0

    def test_flat_scan_all_three(self, tmp_path, capsys):
        path = tmp_path / "flat.json"
        path.write_text(json.dumps({"type": "type_A", "Gamma": {}}))
        code, out, _ = run_cli("eigdim", "--surface", str(path),
                               "--mu-range=-1:2:1", capsys=capsys)
        assert code == 0
        assert all(int(m.group(1)) == 3 for m in
                   re.finditer(r"\s+(\d)\s+\d+\s+\[", out))

    def test_zero_step_exit_two(self, tmp_path, capsys):
        path = tmp_path / "surface.json"
        path.write_text(json.dumps({"type": "s_kappa",
                                    "params": {"kappa": 2.0}}))
        code, _, err = run_cli("eigdim", "--surface", str(path),
                               "--mu-range=1:2:0", capsys=capsys)
        assert code == 2
        assert "step" in err


class TestOdeCommand:
    def test_csv_row_count(self, tmp_path, capsys):
        path = tmp_path / "traj.csv"
        code, _, _ = run_cli("ode", "--ode", "e26", "--mu", "2",
                             "--t0", "1", "--t1", "2", "--init", "1,2,2",
                             "--steps", "64", "--csv", str(path),
                             capsys=capsys)
        assert code == 0
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1 + 65  # header + steps + 1
        assert lines[0] == "t,y0,y1,y2"

    def test_power_solution_values(self, capsys):
        code, out, _ = run_cli("ode", "--ode", "e26", "--mu", "3",
                               "--t0", "1", "--t1", "2", "--init", "1,3,6",
                               "--steps", "128", capsys=capsys)
        assert code == 0
        last = out.strip().splitlines()[-1].split(",")
        assert float(last[0]) == pytest.approx(2.0)
        assert float(last[1]) == pytest.approx(8.0, abs=1e-7)

    def test_singular_abort_with_location(self, capsys):
        code, _, err = run_cli("ode", "--ode", "e26", "--mu", "2",
                               "--t0", "1", "--t1", "2",
                               "--init", "1,1,1e-12", "--steps", "64",
                               capsys=capsys)
        assert code == 3
        assert "t = " in err

    def test_fhat_needs_two_initial_values(self, capsys):
        code, _, err = run_cli("ode", "--ode", "fhat", "--mu", "0.5",
                               "--t0", "0", "--t1", "1", "--init", "1,2,3",
                               capsys=capsys)
        assert code == 2


class TestCurvatureCommand:
    def test_flat_table(self, tmp_path, capsys):
        path = tmp_path / "metric.json"
        path.write_text(json.dumps(
            {"kind": "explicit", "coords": ["x1", "x2", "x1p", "x2p"],
             "components": {"11": "-1", "22": "1", "33": "-1", "44": "1"}}))
        code, out, _ = run_cli("curvature", "--metric", str(path),
                               "--point", "0.1,0.2,0.3,0.4", capsys=capsys)
        assert code == 0
        row = out.strip().splitlines()[-1].split()
        assert float(row[-1]) == 0.0 and float(row[-2]) == 0.0
        assert float(row[-3]) == 0.0

    def test_deformed_extension_regression(self, tmp_path, capsys):
        path = tmp_path / "metric.json"
        path.write_text(json.dumps(
            {"kind": "deformed",
             "surface": {"type": "s_kappa", "params": {"kappa": 1.0}}}))
        code, out, _ = run_cli("curvature", "--metric", str(path),
                               "--point", "1,1,0.3,0.7", "--json", "-",
                               capsys=capsys)
        assert code == 0
        payload = json.loads(out)
        row = payload["points"][0]
        assert row["tau"] == pytest.approx(0.0, abs=1e-12)
        assert row["w_minus"] == pytest.approx(0.0, abs=1e-10)
        assert row["w_plus"] == pytest.approx(0.375, abs=1e-9)
        # engine output regression: the nonzero Christoffel block
        gamma = row["gamma"]
        assert gamma[0][0][0] == pytest.approx(0.5)   # Gamma_11^1 = kappa/s
        assert gamma[2][2][2] == pytest.approx(0.0)

    def test_bad_point_dimension_exit_two(self, tmp_path, capsys):
        path = tmp_path / "metric.json"
        path.write_text(json.dumps(
            {"kind": "deformed",
             "surface": {"type": "s_kappa", "params": {"kappa": 1.0}}}))
        code, _, err = run_cli("curvature", "--metric", str(path),
                               "--point", "1,1", capsys=capsys)
        assert code == 2
        assert "components" in err


def test_console_entry_point_runs():
    result = subprocess.run(
        [sys.executable, "-m", "qeforge.cli", "verify", "--scenario",
         "flat_sanity", "--points", "2"],
        capture_output=True, text=True)
    assert result.returncode == 0
    assert "PASS" in result.stdout
