"""
验收套件：每条验收标准一个用例
"""

import pytest

from scenarios import ScenarioConfig, create_scenario_runner

RUNNER = create_scenario_runner(ScenarioConfig(scenario="acceptance"))
CHECKS = RUNNER.acceptance_checks()


@pytest.mark.parametrize("name, check", CHECKS, ids=[n for n, _ in CHECKS])
def test_acceptance_criterion(name, check):
    result = check()
    assert result["passed"], result


def test_acceptance_report_matches_expectations():
    report = RUNNER.run()
    assert not report.incomplete, report.error
    assert len(report.verdicts) == 12
    assert report.all_matched
    assert [row[0] for row in report.tables["acceptance_summary"]["rows"]] == list(range(1, 13))
    for entry in report.verdicts:
        assert entry["verdict"] == entry["expected"] == "PASS"
        assert entry["matched"]
