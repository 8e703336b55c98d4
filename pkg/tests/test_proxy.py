"""Proxy gateway tests: relay transparency, accounting, error paths."""

import json
from decimal import Decimal

import pytest
from fastapi.testclient import TestClient

from mondrian.engine import AbstractionConfig
from mondrian.errors import UpstreamTimeoutError
from mondrian.pricing import CostLedger, PricingModel
from mondrian.proxy import EchoUpstream, ProxySettings, UpstreamSpec, create_app
from mondrian.similarity import SimilarityProviderSpec


def _settings(tmp_path, **kwargs):
    kwargs.setdefault(
        "abstraction",
        AbstractionConfig(
            enabled_ops=("Delete",), provider=SimilarityProviderSpec(kind="AlwaysOne")
        ),
    )
    kwargs.setdefault("ledger_path", str(tmp_path / "ledger.jsonl"))
    return ProxySettings(**kwargs)


def _client(settings, upstream=None):
    upstream = upstream or EchoUpstream()
    app = create_app(settings, upstream=upstream)
    return TestClient(app), upstream


def _chat(client, text, **extra):
    body = {"model": "m", "messages": [{"role": "user", "content": text}]}
    body.update(extra)
    return client.post("/v1/chat/completions", json=body)


def test_healthz(tmp_path):
    client, _ = _client(_settings(tmp_path))
    assert client.get("/healthz").json() == {"status": "ok"}


def test_upstream_spec_validation():
    with pytest.raises(ValueError):
        UpstreamSpec(request_template="Carrier")
    with pytest.raises(ValueError):
        UpstreamSpec(request_template="ChatCompletions")
    with pytest.raises(ValueError):
        UpstreamSpec(request_template="Echo", auth_token_ref="KEY")


def test_disabled_abstraction_echoes_prompt(tmp_path):
    client, echo = _client(_settings(tmp_path, abstract=False))
    text = "exactly this prompt, untouched"
    response = _chat(client, text)
    assert response.status_code == 200
    forwarded = json.loads(echo.log[0][0])
    assert forwarded["messages"][0]["content"] == text
    assert response.json()["choices"][0]["message"]["content"] == text


def test_response_byte_identical_to_upstream(tmp_path):
    client, echo = _client(_settings(tmp_path))
    response = _chat(client, "please remove some of these words for me")
    assert response.content == echo.log[0][1]


def test_exact_match_provider_forwards_verbatim(tmp_path):
    settings = _settings(
        tmp_path,
        abstraction=AbstractionConfig(provider=SimilarityProviderSpec(kind="ExactMatch")),
    )
    client, echo = _client(settings)
    text = "an exact match provider admits nothing but the original"
    _chat(client, text)
    assert json.loads(echo.log[0][0])["messages"][0]["content"] == text


def test_extremal_provider_reduces_forwarded_units(tmp_path):
    client, echo = _client(_settings(tmp_path))
    _chat(client, "one two three four five six seven")
    ledger = CostLedger(_settings(tmp_path).ledger_path)
    record = ledger.records()[0]
    assert record.abstracted_units < record.original_units


def test_only_newest_user_message_rewritten(tmp_path):
    client, echo = _client(_settings(tmp_path))
    body = {
        "model": "m",
        "messages": [
            {"role": "system", "content": "stay intact"},
            {"role": "user", "content": "first question stays whole"},
            {"role": "assistant", "content": "an answer"},
            {"role": "user", "content": "please shorten this final user turn a lot"},
        ],
    }
    client.post("/v1/chat/completions", json=body)
    forwarded = json.loads(echo.log[0][0])
    assert forwarded["messages"][0]["content"] == "stay intact"
    assert forwarded["messages"][1]["content"] == "first question stays whole"
    assert forwarded["messages"][2]["content"] == "an answer"
    assert forwarded["messages"][3]["content"] != body["messages"][3]["content"]


def test_extra_fields_forwarded_unchanged(tmp_path):
    client, echo = _client(_settings(tmp_path))
    _chat(client, "trim these words away now", temperature=0.2, max_tokens=5)
    forwarded = json.loads(echo.log[0][0])
    assert forwarded["temperature"] == 0.2
    assert forwarded["max_tokens"] == 5


def test_bad_json_is_400(tmp_path):
    client, _ = _client(_settings(tmp_path))
    response = client.post(
        "/v1/chat/completions",
        content=b"{nope",
        headers={"content-type": "application/json"},
    )
    assert response.status_code == 400


def test_missing_messages_is_400(tmp_path):
    client, _ = _client(_settings(tmp_path))
    assert client.post("/v1/chat/completions", json={"model": "m"}).status_code == 400
    assert (
        client.post("/v1/chat/completions", json={"messages": []}).status_code == 400
    )


def test_no_user_message_is_400(tmp_path):
    client, _ = _client(_settings(tmp_path))
    body = {"messages": [{"role": "system", "content": "only system"}]}
    assert client.post("/v1/chat/completions", json=body).status_code == 400


def test_non_string_content_is_400(tmp_path):
    client, _ = _client(_settings(tmp_path))
    body = {"messages": [{"role": "user", "content": 17}]}
    assert client.post("/v1/chat/completions", json=body).status_code == 400


class _TimeoutUpstream:
    def send(self, body, timeout):
        raise UpstreamTimeoutError("too slow")


def test_upstream_timeout_is_504_and_ledgered(tmp_path):
    settings = _settings(tmp_path)
    client, _ = _client(settings, upstream=_TimeoutUpstream())
    response = _chat(client, "whatever the content")
    assert response.status_code == 504
    record = CostLedger(settings.ledger_path).records()[0]
    assert record.status == "failed"
    assert record.user_price == Decimal("0")
    assert record.margin == Decimal("0")


def test_margin_is_exact_difference(tmp_path):
    settings = _settings(
        tmp_path,
        user_pricing=PricingModel(
            unit="Per1kTokens", input_rate=Decimal("0.004"), output_rate=Decimal("0.004")
        ),
        upstream_pricing=PricingModel(
            unit="Per1kTokens", input_rate=Decimal("0.002"), output_rate=Decimal("0.002")
        ),
    )
    client, _ = _client(settings)
    for text in ["count the tokens in here", "another prompt with more words inside it"]:
        _chat(client, text)
    records = CostLedger(settings.ledger_path).records()
    for record in records:
        assert record.margin == record.user_price - record.upstream_cost
        assert record.margin > 0


def test_mixed_units_pricing(tmp_path):
    settings = _settings(
        tmp_path,
        user_pricing=PricingModel(unit="Per1kTokens", input_rate=Decimal("0.002")),
        upstream_pricing=PricingModel(unit="Per1kChars", input_rate=Decimal("0.001")),
    )
    client, _ = _client(settings)
    _chat(client, "price the input side under two different units")
    record = CostLedger(settings.ledger_path).records()[0]
    assert record.margin == record.user_price - record.upstream_cost


def test_report_endpoint_window(tmp_path):
    settings = _settings(tmp_path)
    client, _ = _client(settings)
    _chat(client, "a few words to count")
    full = client.get("/report").json()
    assert full["records"] == 1
    empty = client.get("/report", params={"from": "2999-01-01T00:00:00+00:00"}).json()
    assert empty["records"] == 0
    assert Decimal(full["total_margin"]) == Decimal(full["total_user_price"]) - Decimal(
        full["total_upstream_cost"]
    )
