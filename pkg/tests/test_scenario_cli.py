import copy
import json
import urllib.request

import pytest

from opticnet.cli import main
from opticnet.errors import ScenarioError
from opticnet.scenario import (load_bundled, parse_scenario,
                               triangle_scenario_doc)


def test_bundled_scenario_loads():
    scenario = load_bundled("triangle")
    assert scenario.name == "triangle"
    assert scenario.plan.channel_count == 75
    assert len(scenario.ols_spans) == 3
    assert sum(len(s) for s in scenario.ols_spans.values()) == 16
    assert {a.action for a in scenario.script} == {"request", "fail_link"}


def test_script_times_must_increase():
    doc = triangle_scenario_doc()
    doc["script"] = [
        {"time_s": 10.0, "action": "request", "src": "A", "dst": "C",
         "rate_gbps": 400},
        {"time_s": 5.0, "action": "fail_link", "link": "L1"},
    ]
    with pytest.raises(ScenarioError, match="strictly increasing"):
        parse_scenario(doc)


def test_validation_reports_field_paths():
    doc = triangle_scenario_doc()
    del doc["olss"][0]["spans"][2]["length_km"]
    with pytest.raises(ScenarioError, match=r"olss\[0\].spans\[2\]"):
        parse_scenario(doc)

    doc = triangle_scenario_doc()
    doc["trxs"][0]["node"] = "Z"
    with pytest.raises(ScenarioError, match=r"trxs\[0\]"):
        parse_scenario(doc)

    doc = triangle_scenario_doc()
    doc["script"][0]["rate_gbps"] = 250
    with pytest.raises(ScenarioError, match="multiple of 100"):
        parse_scenario(doc)


def test_amp_count_validated():
    doc = triangle_scenario_doc()
    doc["olss"][0]["amps"].pop()
    with pytest.raises(ScenarioError, match="amps"):
        parse_scenario(doc)


def test_cli_validation_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    doc = triangle_scenario_doc()
    doc["script"] = [{"time_s": 3.0, "action": "fail_link", "link": "L1"},
                     {"time_s": 1.0, "action": "request", "src": "A",
                      "dst": "C", "rate_gbps": 100}]
    bad.write_text(json.dumps(doc))
    assert main(["run", str(bad), "--data-dir", str(tmp_path / "d")]) == 1


def test_cli_missing_scenario(tmp_path):
    assert main(["run", str(tmp_path / "nope.json"),
                 "--data-dir", str(tmp_path / "d")]) == 1


def test_cli_check_flags_broken_limits(tmp_path):
    # deliberately impossible EDFA limits: the run aborts as a runtime error
    doc = triangle_scenario_doc()
    for amp in doc["olss"][0]["amps"]:
        amp["g_max_db"] = 10.0
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    code = main(["run", str(path), "--data-dir", str(tmp_path / "d"),
                 "--check"])
    assert code == 2


def test_report_without_artifacts(tmp_path):
    assert main(["report", "--data-dir", str(tmp_path)]) == 2


@pytest.mark.slow
def test_cli_run_report_and_determinism(tmp_path, capsys):
    dirs = [tmp_path / "run1", tmp_path / "run2"]
    for d in dirs:
        assert main(["run", "triangle", "--data-dir", str(d),
                     "--check"]) == 0
    capsys.readouterr()
    assert main(["report", "--data-dir", str(dirs[0])]) == 0
    out = capsys.readouterr().out
    assert "AMPLIFIER WORKING POINTS" in out
    assert "LIGHTPATH RECOVERY" in out
    # identical scenario + seed -> byte-identical artifacts
    for name in ("characterization.txt", "characterization.jsonl",
                 "working_points.txt", "working_points.json",
                 "performance.txt", "performance.json", "recovery.txt",
                 "recovery.json", "gsnr_curves.tsv", "events.log"):
        a = (dirs[0] / name).read_bytes()
        b = (dirs[1] / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"


def test_serve_lifecycle(triangle_scenario, ready_topology):
    # build a pre-armed stack and expose it, bypassing the slow boot
    from conftest import build_stack
    from opticnet.northbound import NorthboundServer

    stack = build_stack(triangle_scenario, ready_topology)
    stack.controller.provision_network()
    server = NorthboundServer(stack.controller).start()
    try:
        with urllib.request.urlopen(f"{server.url}/lightpaths",
                                    timeout=10) as response:
            assert response.status == 200
    finally:
        server.stop()
        stack.network.close()
