from __future__ import annotations

import json
from fractions import Fraction

import httpx
import pytest

from bargainlab.agents import (
    AgentSpec,
    BackendRejection,
    BackendTimeout,
    ChatCompletionAgent,
    ChatMessage,
    LLMParams,
    StrategyError,
    make_agent,
    scripted,
)
from bargainlab.agents.llm import build_request
from bargainlab.agents.scripted import concession_schedule
from bargainlab.core import GameStatus, ScenarioKind
from bargainlab.engine import run
from bargainlab.records import spec_to_dict
from bargainlab.scenarios import build

VIEW = [ChatMessage("system", "rules"), ChatMessage("user", "hello")]
OK = {"choices": [{"message": {"role": "assistant", "content": "reply"}}]}


def llm_agent(handler, sleeps=None, **params):
    spec = AgentSpec(id="m", kind="llm", llm=LLMParams(model="mock", base_url="http://mock/v1/", **params))
    sleep = (sleeps.append if sleeps is not None else (lambda s: None))
    return ChatCompletionAgent(spec, client=httpx.Client(transport=httpx.MockTransport(handler)), sleep=sleep)


def test_request_body_defaults():
    spec = AgentSpec(id="m", kind="llm", llm=LLMParams(model="gpt-x"))
    body = build_request(spec, VIEW)
    assert body == {
        "model": "gpt-x",
        "messages": [{"role": "system", "content": "rules"}, {"role": "user", "content": "hello"}],
        "temperature": 0.7,
        "max_tokens": 400,
    }


def test_retry_with_exponential_backoff():
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(503) if len(calls) < 3 else httpx.Response(200, json=OK)

    sleeps: list[float] = []
    assert llm_agent(handler, sleeps).complete(VIEW) == "reply"
    assert len(calls) == 3 and sleeps == [1.0, 2.0]
    assert str(calls[0].url) == "http://mock/v1/chat/completions"


def test_retries_exhausted_on_status_is_rejection():
    agent = llm_agent(lambda r: httpx.Response(429))
    with pytest.raises(BackendRejection, match="3 attempts"):
        agent.complete(VIEW)


def test_transport_failure_is_timeout():
    def handler(request):
        raise httpx.ReadTimeout("slow", request=request)

    with pytest.raises(BackendTimeout):
        llm_agent(handler).complete(VIEW)


def test_client_error_is_not_retried():
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(401, text="bad key")

    with pytest.raises(BackendRejection, match="401"):
        llm_agent(handler).complete(VIEW)
    assert len(calls) == 1


def test_malformed_body_is_rejection():
    with pytest.raises(BackendRejection):
        llm_agent(lambda r: httpx.Response(200, json={"nope": 1})).complete(VIEW)


def test_api_key_read_from_named_env_var(monkeypatch):
    monkeypatch.setenv("MY_KEY", "sk-abc")
    seen = []

    def handler(request):
        seen.append(request.headers.get("Authorization"))
        return httpx.Response(200, json=OK)

    llm_agent(handler, api_key_env="MY_KEY").complete(VIEW)
    assert seen == ["Bearer sk-abc"]
    spec = AgentSpec(id="m", kind="llm", llm=LLMParams(model="x", api_key_env="MY_KEY"))
    assert "sk-abc" not in json.dumps(spec_to_dict(spec))


def test_llm_params_validation():
    with pytest.raises(ValueError):
        LLMParams(model="x", temperature=3)
    with pytest.raises(ValueError):
        AgentSpec(id="a", kind="llm")
    with pytest.raises(ValueError):
        AgentSpec(id="a", kind="wizard", strategy="x")


def test_spec_params_are_json_normalised():
    spec = scripted("a", "anchor_concede", gamma=Fraction(1, 4))
    assert spec.params == {"gamma": "1/4"}


@pytest.mark.parametrize("k,expected", [(0, 100), (1, 85), (2, 70), (3, 55), (4, 40), (5, 40)])
def test_concession_schedule_seller(k, expected):
    assert concession_schedule(100, 40, Fraction(1, 4), k) == expected


def test_concession_schedule_buyer_rounds_down():
    assert concession_schedule(20, 60, Fraction(1, 3), 1) == 33
    assert concession_schedule(20, 60, Fraction(1, 3), 5) == 60


def test_anchor_concede_rejects_bad_anchor():
    config = build(ScenarioKind.SELLER_BUYER)
    seller = scripted("s", "anchor_concede", anchor=10)  # below its cost of 40
    record = run(config, make_agent(seller), make_agent(scripted("b", "anchor_concede")), 0)
    assert record.outcome.status is GameStatus.ABORTED
    assert record.error.startswith("StrategyError")


def test_strategy_kind_mismatch_aborts():
    config = build(ScenarioKind.ULTIMATUM)
    a = scripted("a", "split_difference")
    record = run(config, make_agent(a), make_agent(a), 0)
    assert record.aborted


def test_unknown_strategy():
    with pytest.raises(StrategyError):
        make_agent(scripted("a", "telepathy"))


def test_fixed_sequence_exhaustion_aborts():
    config = build(ScenarioKind.ULTIMATUM)
    short = scripted("short", "fixed_sequence", moves=[{"trade": "Player RED Gives Dollars: 50 | Player BLUE Gives nothing"}])
    stub = scripted("stub", "fixed_sequence", moves=[{"answer": "REJECT"}])
    record = run(config, make_agent(short), make_agent(stub), 0)
    assert record.outcome.status is GameStatus.ABORTED
    assert "StrategyExhausted" in record.error
    assert len(record.transcript) == 2


def test_rational_three_turn_play():
    config = build(ScenarioKind.ULTIMATUM, {"ultimatum_turns": "three_turn", "amount": 10})
    a = scripted("a", "rational_ultimatum")
    record = run(config, make_agent(a), make_agent(a), 0)
    proposals = [e.message.trade for e in record.transcript if e.message.trade is not None]
    assert [t.from_red["Dollars"] for t in proposals] == [1, 9]
    assert record.transcript[-1].message.decision.value == "ACCEPT"


def test_net_gain_trader():
    config = build(ScenarioKind.RESOURCE_EXCHANGE)
    a = scripted("a", "net_gain_trader")
    record = run(config, make_agent(a), make_agent(a), 0)
    assert record.outcome.status is GameStatus.ACCEPTED
    assert record.outcome.payoffs == {"RED": -7, "BLUE": 7}
