from __future__ import annotations

import json
import subprocess
import sys

import pytest
import yaml

from bargainlab.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, EXIT_UNREACHABLE, main
from bargainlab.persistence import load

SD = "scripted:split_difference"
DEAD = {"id": "dead", "kind": "llm",
        "llm": {"model": "m", "base_url": "http://127.0.0.1:9/v1", "timeout": 0.2, "retries": 1}}


def write_config(tmp_path, doc, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc) if name.endswith(".yaml") else json.dumps(doc))
    return str(path)


def test_run_writes_record(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["run", "--agent1", SD, "--agent2", SD, "--override", "buyer_budget=200", "--out", str(out)]) == 0
    record = load(out)
    assert record.outcome.status.value == "ACCEPTED"
    assert "status=ACCEPTED" in capsys.readouterr().err


def test_run_to_stdout(capsys):
    assert main(["run", "--agent1", SD, "--agent2", SD]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["format_version"] == "1.1"


def test_flags_override_config(tmp_path):
    config = write_config(tmp_path, {"scenario": "ultimatum", "seed": 4,
                                     "agents": [{"id": "r", "strategy": "rational_ultimatum"}]}, "c.json")
    out = tmp_path / "g.json"
    assert main(["run", "--config", config, "--agent1", "r", "--agent2", "r", "--out", str(out)]) == 0
    assert load(out).config.kind.value == "ultimatum" and load(out).seed == 4
    assert main(["run", "--config", config, "--agent1", "r", "--agent2", "r", "--seed", "7", "--out", str(out)]) == 0
    assert load(out).seed == 7


@pytest.mark.parametrize("argv", [
    ["run", "--agent1", "nobody", "--agent2", SD],
    ["run", "--scenario", "chess"],
    ["run", "--agent1", SD, "--agent2", SD, "--override", "max_rounds=-3"],
    ["experiment", "astrology"],
    ["tournament", "--agent", SD, "--agent", SD, "--out", "x"],
    ["analyze", "/nonexistent/dir"],
    ["run", "--config", "/nonexistent.yaml"],
    ["bogus-command"],
])
def test_config_errors_exit_1(argv, capsys):
    assert main(argv) == EXIT_CONFIG


def test_unreachable_backend_exits_3(tmp_path):
    config = write_config(tmp_path, {"agents": [DEAD]})
    assert main(["run", "--config", config, "--agent1", "dead", "--agent2", "dead",
                 "--out", str(tmp_path / "g.json")]) == EXIT_UNREACHABLE
    assert load(tmp_path / "g.json").aborted


def test_partial_failure_exits_2(tmp_path):
    config = write_config(tmp_path, {"agents": [DEAD, {"id": "sd", "strategy": "split_difference"}],
                                     "games_per_pair": 1, "scenario": "seller_buyer"})
    assert main(["tournament", "--config", config, "--out", str(tmp_path / "t")]) == EXIT_PARTIAL


def test_tournament_and_analyze_check(tmp_path, capsys):
    out = tmp_path / "t"
    assert main(["tournament", "--agent", SD, "--agent", "scripted:anchor_concede", "--scenario", "seller_buyer",
                 "--games-per-pair", "2", "--out", str(out)]) == EXIT_OK
    assert main(["analyze", str(out), "--check"]) == EXIT_OK
    (out / "summary.json").write_text("{}")
    assert main(["analyze", str(out), "--check"]) == EXIT_CONFIG
    assert main(["analyze", str(out)]) == EXIT_OK
    assert main(["analyze", str(out), "--check"]) == EXIT_OK


def test_replay_and_counterfactual(tmp_path, capsys):
    g = tmp_path / "g.json"
    main(["run", "--agent1", SD, "--agent2", SD, "--override", "buyer_budget=200", "--out", str(g)])
    capsys.readouterr()
    assert main(["replay", str(g)]) == EXIT_OK
    assert "transcript identical" in capsys.readouterr().out
    raw = load(g).transcript[0].raw.replace("ZUP: 100", "ZUP: 120")
    cf = tmp_path / "cf.json"
    assert main(["counterfactual", str(g), "--turn", "0", "--message", raw, "--out", str(cf)]) == EXIT_OK
    derived = load(cf)
    assert derived.parent.record_id == load(g).record_id
    assert derived.transcript[-2].message.trade.price("ZUP") == 54
    assert main(["counterfactual", str(g), "--turn", "0"]) == EXIT_CONFIG


def test_experiment_command(tmp_path, capsys):
    assert main(["experiment", "acceptance_curve", "--param", "amounts=[0,2]", "--param", "trials=1",
                 "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["experiment"] == "acceptance_curve" and len(summary["curve"]) == 2
    assert (tmp_path / "table.csv").exists()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bargainlab", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "tournament" in proc.stdout
