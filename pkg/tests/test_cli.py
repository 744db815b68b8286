import csv
import json

import jsonschema
import pytest

from sg2dlab import cli


def run(tmp_path, command, cfg=None, *extra):
    args = [command, "--out", str(tmp_path / "out")]
    if cfg is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        args += ["--config", str(path)]
    code = cli.main(args + list(extra))
    return code, (tmp_path / "out").read_text() if (tmp_path / "out").exists() else None


def report(text):
    rep = json.loads(text)
    jsonschema.validate(rep, cli.load_schema("report.schema.json"))
    return rep


def test_fuchs_default(tmp_path):
    code, text = run(tmp_path, "fuchs")
    rep = report(text)
    assert code == 0
    assert [z[0] for z in rep["data"]["indices"]] == [-1, 0, 0, 1, 2, 4]
    assert rep["results"][0]["value"] < 1e-12


def test_fuchs_complex_nu(tmp_path):
    code, text = run(tmp_path, "fuchs", {"nu": [2, 1]})
    assert code == 0 and report(text)["data"]["nu"] == [2, 1]


def test_malformed_config(tmp_path, capsys):
    code, _ = run(tmp_path, "fuchs", {"nu": "two"})
    assert code == 1
    assert "schema error" in capsys.readouterr().err
    (tmp_path / "bad.json").write_text("{not json")
    assert cli.main(["fuchs", "--config", str(tmp_path / "bad.json")]) == 1


def test_integrate_fixed_point_csv(tmp_path):
    cfg = {"case": "zer", "initial_state": {"xi": 0, "up": 2, "upp": 0, "vp": 5, "vpp": 0}, "path": [0, [1, 0.5]]}
    code, text = run(tmp_path, "integrate", cfg, "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(text.splitlines()))
    assert list(rows[0]) == list(cli.CSV_COLUMNS)
    assert all(float(r["drift2"]) == 0 and float(r["drift4"]) == 0 for r in rows)


def test_integrate_tri_drift(tmp_path):
    code, text = run(tmp_path, "integrate", {"case": "tri", "constants": {"K5": [0.3, 0.1], "K6": 0.2}}, "--tol", "1e-10")
    rep = report(text)
    assert code == 0 and max(r["value"] for r in rep["results"]) < 1e-8


def test_integrate_through_pole(tmp_path):
    cfg = {"case": "rat", "constants": {"K5": 1}, "initial_state": {"xi": 0.5, "up": 1, "upp": 0, "vp": 1, "vpp": 0},
           "path": [0.5, -0.5]}
    code, text = run(tmp_path, "integrate", cfg)
    assert code == 3 and "pole" in report(text)["error"]


def test_integrate_blow_up_reports_s(tmp_path):
    # U' = i/(nu xi), V' = 1/xi solves the zer system with all K = 0; the path crosses its pole at xi = 0
    cfg = {"case": "zer", "initial_state": {"xi": -1, "up": [0, -1], "upp": [0, -1], "vp": -1, "vpp": -1},
           "path": [-1, 1]}
    code, text = run(tmp_path, "integrate", cfg)
    err = report(text)["error"]
    assert code == 3 and "path parameter s=" in err
    assert abs(float(err.rsplit("=", 1)[1]) - 1.0) < 1e-6


def test_verify_generic(tmp_path):
    code, text = run(tmp_path, "verify-reduction", {"case": "generic_example"})
    rep = report(text)
    assert code == 0 and rep["results"][0]["value"] < 1e-7
    assert len(rep["data"]["points"]) == 125


def test_verify_exp_negative(tmp_path):
    code, text = run(tmp_path, "verify-reduction", {"case": "exp", "grid": {"n": 2}})
    rep = report(text)
    assert code == 5
    failed = [r["name"] for r in rep["results"] if not r["passed"]]
    assert "admissibility 7" in failed
    assert not any(f"admissibility {i}" in failed for i in range(1, 7))


def test_verify_zer_with_constants(tmp_path):
    code, _ = run(tmp_path, "verify-reduction", {"case": "zer", "options": {"C1": [0.3, 0.1], "C2": -0.2}, "grid": {"n": 2}})
    assert code == 0


def test_verify_constraint_violation(tmp_path):
    code, text = run(tmp_path, "verify-reduction", {"case": "generic_example", "constants": {"K6": 0.3}})
    assert code == 4 and "K6" in report(text)["error"]


def test_verify_unknown_case(tmp_path):
    code, _ = run(tmp_path, "verify-reduction", {"case": "cubic"})
    assert code == 1


def test_map_case7(tmp_path):
    code, text = run(tmp_path, "map", {"case": 7, "constants": {"K7": -0.0625, "K6": [0, 0.125]}})
    rep = report(text)
    assert code == 0
    assert rep["data"]["target"]["equation"] == "PII"
    assert rep["data"]["target"]["alpha"] == pytest.approx([1, 0], abs=1e-14)


def test_map_guard(tmp_path):
    code, _ = run(tmp_path, "map", {"case": 2, "constants": {"K2": 0, "K5": 0.5}})
    assert code == 4


def test_map_case1_pullback(tmp_path):
    cfg = {"case": 1, "constants": {"k": [1.2, 0.2], "K5": [0.4, 0.2], "K6": [0.3, -0.1]}, "options": {"pullback": True}}
    code, text = run(tmp_path, "map", cfg)
    rep = report(text)
    assert code == 0 and rep["data"]["target"]["equation"] == "CVI"
    assert rep["results"][0]["value"] < 1e-6


def test_suite_subset_and_injection(tmp_path):
    code, text = run(tmp_path, "suite", None, "--case", "1,2,3")
    assert code == 0 and [r["id"] for r in report(text)["results"]] == [1, 2, 3]
    code, _ = run(tmp_path, "suite", None, "--case", "1,2,3", "--inject", "3")
    assert code == 5
    code, _ = run(tmp_path, "suite", None, "--case", "1", "--inject", "1")
    assert code == 2


def test_timestamp_only_on_request(tmp_path):
    _, text = run(tmp_path, "fuchs")
    assert "timestamp" not in json.loads(text)
    _, text = run(tmp_path, "fuchs", None, "--timestamp")
    assert "timestamp" in report(text)


def test_config_schema_ships():
    schema = cli.load_schema("config.schema.json")
    jsonschema.Draft7Validator.check_schema(schema)
    cli.validate_config({"command": "map", "case": 7, "constants": {"K6": [0, 0.125]}})


CONFIGS = {"zer_fixed_point": 0, "tri_conservation": 0, "rat_through_pole": 3, "generic_example": 0,
           "zer_reduction": 0, "exp_negative": 5, "map_case7": 0, "map_case2_guard": 4, "map_case1_pullback": 0}


@pytest.mark.parametrize("name,expected", sorted(CONFIGS.items()))
def test_shipped_configs(name, expected, tmp_path):
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / f"{name}.json"
    cfg = json.loads(path.read_text())
    code = cli.main([cfg["command"], "--config", str(path), "--out", str(tmp_path / "r.json")])
    assert code == expected
    report((tmp_path / "r.json").read_text())
