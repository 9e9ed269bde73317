import json

import pytest
import requests

from rulesynth.llm import LlmOracle, LlmOracleConfig
from rulesynth.oracle import MalformedResponse, OracleUnavailable
from rulesynth.store import Cause, Goal, Principle

GOAL = Goal("g1", "Successfully merge into heavy traffic")
PRINCIPLES = (
    Principle("p-control", "legal", "stay in control"),
    Principle("s-friction", "safety", "keep friction"),
)


def make_config(**overrides):
    base = dict(endpoint="https://llm.test/v1/chat/completions", model="test-model")
    base.update(overrides)
    return LlmOracleConfig(**base)


class FakeTransport:
    def __init__(self, *contents):
        self.contents = list(contents)
        self.payloads = []

    def __call__(self, endpoint, payload, headers, timeout):
        self.payloads.append(payload)
        content = self.contents.pop(0)
        if isinstance(content, Exception):
            raise content
        return {"choices": [{"message": {"content": json.dumps(content)}}]}


@pytest.fixture(autouse=True)
def api_key(monkeypatch):
    monkeypatch.setenv("RULESYNTH_API_KEY", "test-key")


def test_temperature_zero_is_mandatory():
    with pytest.raises(ValueError):
        make_config(temperature=0.7)
    with pytest.raises(ValueError):
        make_config(max_retries=99)


def test_every_call_carries_temperature_zero_and_schema():
    transport = FakeTransport({"causes": ["a cause"]})
    oracle = LlmOracle(make_config(), transport)
    oracle.generate_causes(GOAL, PRINCIPLES, 8)
    payload = transport.payloads[0]
    assert payload["temperature"] == 0.0
    assert payload["response_format"]["type"] == "json_schema"
    schema = payload["response_format"]["json_schema"]
    assert schema["name"] == "generate" and schema["strict"] is True
    assert "causes" in schema["schema"]["properties"]
    assert payload["model"] == "test-model"


def test_principles_are_listed_with_ids():
    transport = FakeTransport({"achieves": True})
    oracle = LlmOracle(make_config(), transport)
    cause = Cause("g1-c1", "g1", "driver in control", ("driver in control",))
    assert oracle.judge_subset_achieves(GOAL, frozenset(["g1-c1"]), (cause,), PRINCIPLES)
    prompt = transport.payloads[0]["messages"][1]["content"]
    assert "[p-control] (legal)" in prompt
    assert "driver in control" in prompt  # subsets are judged on cause texts


def test_equivalence_prompt_uses_canonical_pair_order():
    transport = FakeTransport(
        {"equivalent": False, "merged_text": None},
        {"equivalent": False, "merged_text": None},
    )
    oracle = LlmOracle(make_config(), transport)
    oracle.judge_equivalent("zebra crossing ahead", "attentive driver")
    oracle.judge_equivalent("attentive driver", "zebra crossing ahead")
    first, second = (p["messages"][1]["content"] for p in transport.payloads)
    assert first == second
    assert first.index("attentive driver") < first.index("zebra crossing ahead")


def test_malformed_answer_retried_once_then_hard_error():
    transport = FakeTransport({"wrong": 1}, {"also": "wrong"})
    oracle = LlmOracle(make_config(), transport)
    with pytest.raises(MalformedResponse):
        oracle.generate_causes(GOAL, PRINCIPLES, 8)
    assert len(transport.payloads) == 2
    retry_prompt = transport.payloads[1]["messages"][1]["content"]
    assert "failed validation" in retry_prompt


def test_malformed_then_valid_recovers():
    transport = FakeTransport("not even json-object", {"causes": ["one", "two"]})
    transport.contents[0] = {"bad": True}
    oracle = LlmOracle(make_config(), transport)
    assert oracle.generate_causes(GOAL, PRINCIPLES, 8) == ["one", "two"]


def test_transport_errors_exhaust_retries():
    error = requests.ConnectionError("refused")
    transport = FakeTransport(error, error, error)
    oracle = LlmOracle(make_config(max_retries=2), transport)
    with pytest.raises(OracleUnavailable):
        oracle.generate_causes(GOAL, PRINCIPLES, 8)
    assert len(transport.payloads) == 3


def test_missing_api_key_is_oracle_unavailable(monkeypatch):
    monkeypatch.delenv("RULESYNTH_API_KEY", raising=False)
    oracle = LlmOracle(make_config(), FakeTransport({"causes": ["x"]}))
    with pytest.raises(OracleUnavailable) as err:
        oracle.generate_causes(GOAL, PRINCIPLES, 8)
    assert "RULESYNTH_API_KEY" in str(err.value)


def test_necessity_rationale_must_cite_principles():
    transport = FakeTransport(
        {"necessary": True, "rationale": "it just is"},
        {"necessary": True, "rationale": "violates [p-control]"},
    )
    oracle = LlmOracle(make_config(), transport)
    cause = Cause("g1-c1", "g1", "driver in control", ("driver in control",))
    verdict = oracle.judge_individual_necessity(cause, GOAL, PRINCIPLES)
    assert verdict.necessary and "p-control" in verdict.rationale
    assert len(transport.payloads) == 2  # first answer failed the citation check


def test_generate_truncates_to_count_hint():
    transport = FakeTransport({"causes": [f"cause {i}" for i in range(10)]})
    oracle = LlmOracle(make_config(), transport)
    assert len(oracle.generate_causes(GOAL, PRINCIPLES, 4)) == 4
