from __future__ import annotations

import pytest

from bargainlab.agents import make_agent, scripted
from bargainlab.core import ScenarioKind
from bargainlab.engine import run
from bargainlab.scenarios import build

ACCEPTANCE_RESULTS: dict[str, str] = {}


def oracle_config(**extra):
    return build(ScenarioKind.SELLER_BUYER, {"buyer_budget": 200, **extra})


def oracle_agents():
    seller = scripted("seller", "split_difference", anchor=100, threshold=5)
    buyer = scripted("buyer", "split_difference", anchor=20, threshold=5)
    return seller, buyer


def play_oracle(seed: int = 0):
    seller, buyer = oracle_agents()
    return run(oracle_config(), make_agent(seller), make_agent(buyer), seed)


@pytest.fixture
def oracle_record():
    return play_oracle()


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        ACCEPTANCE_RESULTS[name] = outcome


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(ACCEPTANCE_RESULTS.items()):
        terminalreporter.write_line(f"{outcome}  {name}")
