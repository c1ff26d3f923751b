import json
import math
import os

import pytest

from scenarios import (Report, ScenarioConfig, create_scenario_runner, emit_report, load_measures, run_scenario)
from wasserstein_viscosity.errors import InvalidMeasure, IoError, ParseError, PreconditionError


def _write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload), encoding="utf-8")
    return str(path)


def test_load_single_dirac(tmp_path):
    path = _write(tmp_path, "dirac.json", {"dim": 1, "support": [[0.0]], "weights": [1.0]})
    measures = load_measures(path)
    assert len(measures) == 1
    assert measures[0].size == 1


def test_load_renormalizes_with_warning(tmp_path, caplog):
    path = _write(tmp_path, "m.json", [{"support": [[0.0], [1.0]], "weights": [0.5, 0.4999999995]}])
    measures = load_measures(path)
    assert math.isclose(sum(measures[0].weights), 1.0, abs_tol=1e-15)
    assert any("重新归一化" in r.message for r in caplog.records)


def test_load_reports_bad_measure_index(tmp_path):
    path = _write(tmp_path, "m.json", {"measures": [
        {"support": [[0.0]], "weights": [1.0]},
        {"support": [[0.0], [1.0]], "weights": [1.5, -0.5]},
    ]})
    with pytest.raises(InvalidMeasure) as info:
        load_measures(path)
    assert info.value.index == 1


def test_load_parse_errors(tmp_path):
    with pytest.raises(ParseError):
        load_measures(_write(tmp_path, "broken.json", "{\"support\": [[0.0]],"))
    with pytest.raises(ParseError):
        load_measures(_write(tmp_path, "missing.json", [{"support": [[0.0]]}]))
    with pytest.raises(ParseError):
        load_measures(_write(tmp_path, "m.txt", "{}"))
    with pytest.raises(IoError):
        load_measures(str(tmp_path / "absent.json"))


def test_config_overrides_and_validation():
    cfg = ScenarioConfig.from_dict({"scenario": "ex5", "p": 2.0, "unknown": 1}, p=3.0, seed=None)
    assert cfg.p == 3.0
    assert cfg.seed == 20240601
    with pytest.raises(PreconditionError):
        ScenarioConfig.from_dict({"scenario": "ex7"})
    with pytest.raises(PreconditionError):
        ScenarioConfig.from_dict({"scenario": "ex5", "n_min": 5, "n_max": 2})


def test_emit_report_is_deterministic(tmp_path):
    report = Report("ex5", {"seed": 1})
    report.add_table("ex5_distances", ["n", "value"], [[1, 1.0], [2, 2.0000000000000004]])
    report.add_table("empty", ["n"], [])
    report.expect("check", "PASS", "PASS", value=0.1)
    first = emit_report(report, str(tmp_path / "a"))
    second = emit_report(report, str(tmp_path / "b"))
    assert [os.path.basename(p) for p in first] == ["report.json", "ex5_distances.csv"]
    for a, b in zip(first, second):
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()
    with open(first[1], encoding="utf-8") as f:
        assert f.read().splitlines()[2] == "2,2.0000000000000004"


def test_emit_report_without_tables(tmp_path):
    files = emit_report(Report("ex3", {}), str(tmp_path))
    assert [os.path.basename(p) for p in files] == ["report.json"]


def test_emit_report_io_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoError):
        emit_report(Report("ex3", {}), str(blocker / "sub"))


def test_ex3_scenario():
    report = run_scenario(ScenarioConfig(scenario="ex3", n_max=20))
    assert not report.incomplete
    assert report.all_matched
    row = report.tables["ex3_values"]["rows"][9]
    assert row[0] == 10
    assert math.isclose(row[1], math.sqrt(99.0) - 10.0, abs_tol=1e-10)
    names = {v["name"]: v for v in report.verdicts}
    assert names["ex3_limit_sphere_test"]["verdict"] == "FAIL"


def test_ex5_scenario(tmp_path):
    report = run_scenario(ScenarioConfig(scenario="ex5", n_max=10))
    assert report.all_matched
    row = report.tables["ex5_distances"]["rows"][6]
    assert row[0] == 7
    assert math.isclose(row[1], 7.0, abs_tol=1e-9)
    files = [os.path.basename(p) for p in emit_report(report, str(tmp_path))]
    assert "ex5_distances.csv" in files and "ex5_sphere_matrix.csv" in files


def test_lift_demo_scenario():
    report = run_scenario(ScenarioConfig(scenario="lift-demo"))
    assert not report.incomplete, report.error
    failed = [v["name"] for v in report.verdicts if not v["matched"]]
    assert failed == []


def test_slope_demo_scenario():
    report = run_scenario(ScenarioConfig(scenario="slope-demo"))
    assert report.all_matched
    verdicts = {v["name"]: v["verdict"] for v in report.verdicts}
    assert verdicts["slope_sphere_test"] == "INCONCLUSIVE"


def test_cs_contrast_scenario():
    report = run_scenario(ScenarioConfig(scenario="cs-contrast"))
    assert report.all_matched
    verdicts = {v["name"]: v["verdict"] for v in report.verdicts}
    assert verdicts["cs_ray_sequence"] == "PASS"
    assert verdicts["cs_ex5"] == "FAIL"


def test_same_seed_same_numbers():
    cfg = ScenarioConfig(scenario="ex3", n_max=8)
    first, second = run_scenario(cfg), run_scenario(cfg)
    assert first.tables == second.tables
    assert first.verdicts == second.verdicts


def test_scenario_error_marks_report_incomplete(monkeypatch):
    runner = create_scenario_runner(ScenarioConfig(scenario="ex5"))

    def broken(report):
        report.expect("partial", "PASS", "PASS")
        raise PreconditionError("boom")

    monkeypatch.setattr(runner, "run_ex5", broken)
    report = runner.run()
    assert report.incomplete
    assert "PreconditionError" in report.error
    assert len(report.verdicts) == 1
    assert not report.all_matched


def test_expect_payload_cannot_override_bookkeeping():
    report = Report("acceptance", {})
    entry = report.expect("criterion", "PASS", "PASS", verdict="FAIL", expected="FAIL", matched=False,
                          name="other", best_gaps=[1.0])
    assert entry["name"] == "criterion"
    assert entry["verdict"] == "PASS"
    assert entry["expected"] == "PASS"
    assert entry["matched"]
    assert entry["best_gaps"] == [1.0]


def test_ex3_limit_check_entry_keeps_outcome():
    runner = create_scenario_runner(ScenarioConfig(scenario="acceptance"))
    report = Report("acceptance", {})
    result = runner.check_ex3_limit()
    outcome = "PASS" if result.pop("passed") else "FAIL"
    entry = report.expect("acceptance_06_ex3_limit", outcome, "PASS", **result)
    assert entry["verdict"] == "PASS"
    assert entry["sphere_verdict"] == "FAIL"


def test_cs_contrast_dlc_fields():
    report = run_scenario(ScenarioConfig(scenario="cs-contrast"))
    verdicts = {v["name"]: v["verdict"] for v in report.verdicts}
    assert verdicts["dlc_receding_cs"] == "PASS"
    assert verdicts["dlc_receding_sphere_test_0"] == "PASS"
    assert verdicts["dlc_receding_local_slope"] == "PASS"
    assert verdicts["dlc_escaping_limit_constant"] == "PASS"
    assert verdicts["dlc_escaping_limit_sphere_test"] == "FAIL"
    for _, value, exact in report.tables["dlc_receding_values"]["rows"]:
        assert math.isclose(value, exact, abs_tol=1e-2)
