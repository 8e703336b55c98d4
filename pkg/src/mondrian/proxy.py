"""Cost-accounting proxy gateway.

Accepts chat-completion requests, abstracts the newest user message,
forwards the rewritten body to the configured upstream, relays the
upstream response bytes verbatim, and appends a CostRecord per request.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal

import httpx
from fastapi import FastAPI, Request, Response
from fastapi.concurrency import run_in_threadpool

from .engine import AbstractionConfig, abstract_query
from .errors import UpstreamTimeoutError
from .lexicon import bundled_lexicon
from .pricing import CostLedger, CostRecord, PricingModel, compute_cost, margin_report
from .similarity import build_provider
from .tokenizer import count_chars, count_tokens, get_vocabulary


@dataclass(frozen=True)
class UpstreamSpec:
    """Where forwarded requests go and how long to wait."""

    request_template: str = "Echo"
    base_url: str | None = None
    auth_token_ref: str | None = None
    timeout: float = 30.0

    def __post_init__(self):
        if self.request_template not in ("ChatCompletions", "Echo"):
            raise ValueError(f"unknown upstream template: {self.request_template!r}")
        if self.request_template == "ChatCompletions" and not self.base_url:
            raise ValueError("ChatCompletions upstream requires base_url")
        if self.request_template == "Echo" and self.auth_token_ref:
            raise ValueError("Echo upstream takes no auth token")


class EchoUpstream:
    """In-process deterministic upstream double.

    Answers every chat request with the newest user message as the
    assistant reply and logs (request_body, response_body) pairs so
    tests can check byte-level relay transparency.
    """

    def __init__(self):
        self.log = []
        self._lock = threading.Lock()

    def send(self, body, timeout):
        payload = json.loads(body)
        content = ""
        for message in payload.get("messages", []):
            if message.get("role") == "user":
                content = message.get("content", "")
        response = {
            "object": "chat.completion",
            "model": payload.get("model", "echo"),
            "choices": [
                {
                    "index": 0,
                    "message": {"role": "assistant", "content": content},
                    "finish_reason": "stop",
                }
            ],
        }
        data = json.dumps(response, separators=(",", ":"), ensure_ascii=False).encode(
            "utf-8"
        )
        with self._lock:
            self.log.append((body, data))
        return 200, data


class HttpUpstream:
    """Forwards request bytes to a real chat-completions endpoint."""

    def __init__(self, spec, *, client=None):
        self.spec = spec
        self._client = client or httpx.Client(timeout=spec.timeout)

    def send(self, body, timeout):
        headers = {"content-type": "application/json"}
        if self.spec.auth_token_ref:
            token = os.environ.get(self.spec.auth_token_ref, "")
            if token:
                headers["authorization"] = f"Bearer {token}"
        url = self.spec.base_url.rstrip("/") + "/v1/chat/completions"
        try:
            response = self._client.post(
                url, content=body, headers=headers, timeout=timeout
            )
        except httpx.TimeoutException as err:
            raise UpstreamTimeoutError(str(err)) from err
        return response.status_code, response.content


def build_upstream(spec, *, client=None):
    if spec.request_template == "Echo":
        return EchoUpstream()
    return HttpUpstream(spec, client=client)


@dataclass
class ProxySettings:
    """Everything the gateway needs: engine config, prices, upstream."""

    abstraction: AbstractionConfig = field(default_factory=AbstractionConfig)
    user_pricing: PricingModel = field(
        default_factory=lambda: PricingModel(
            unit="Per1kTokens", input_rate=Decimal("0.002"), output_rate=Decimal("0.002")
        )
    )
    upstream_pricing: PricingModel = field(
        default_factory=lambda: PricingModel(
            unit="Per1kTokens", input_rate=Decimal("0.002"), output_rate=Decimal("0.002")
        )
    )
    upstream: UpstreamSpec = field(default_factory=UpstreamSpec)
    ledger_path: str = "ledger.jsonl"
    abstract: bool = True


def _count_units(text, unit, vocab):
    if unit == "Per1kTokens":
        return count_tokens(vocab, text)
    return count_chars(text)


def _now():
    return datetime.now(timezone.utc).isoformat()


def _json_response(payload, status_code):
    return Response(
        content=json.dumps(payload), status_code=status_code, media_type="application/json"
    )


def _extract_completion_text(body):
    """Assistant text from an upstream body, for output-side pricing."""
    try:
        payload = json.loads(body)
        chunks = []
        for choice in payload.get("choices", []):
            message = choice.get("message", {})
            content = message.get("content")
            if isinstance(content, str):
                chunks.append(content)
        return "".join(chunks)
    except (ValueError, AttributeError):
        return ""


def create_app(settings=None, *, upstream=None, ledger=None):
    """Build the FastAPI gateway application.

    `upstream` and `ledger` may be injected for tests; by default they
    come from the settings.
    """
    settings = settings or ProxySettings()
    upstream = upstream or build_upstream(settings.upstream)
    ledger = ledger or CostLedger(settings.ledger_path)
    vocab = get_vocabulary(settings.abstraction.vocab)
    provider = build_provider(settings.abstraction.provider)
    lexicon = (
        bundled_lexicon() if "Transform" in settings.abstraction.enabled_ops else None
    )

    app = FastAPI()
    app.state.settings = settings
    app.state.ledger = ledger
    app.state.upstream = upstream

    def abstract_prompt(text):
        if not settings.abstract:
            return text
        result = abstract_query(
            text, settings.abstraction, lexicon=lexicon, provider=provider, vocab=vocab
        )
        return result.abstracted

    @app.post("/v1/chat/completions")
    async def chat_completions(request: Request):
        raw = await request.body()
        return await run_in_threadpool(_handle, raw)

    def _handle(raw):
        received_at = _now()
        try:
            payload = json.loads(raw)
        except ValueError:
            return _json_response({"error": "body is not valid JSON"}, 400)
        messages = payload.get("messages")
        if not isinstance(messages, list) or not messages:
            return _json_response({"error": "messages must be a non-empty array"}, 400)
        newest_user = None
        for index, message in enumerate(messages):
            if not isinstance(message, dict) or "role" not in message:
                return _json_response({"error": f"message {index} lacks a role"}, 400)
            if message["role"] == "user":
                newest_user = index
        if newest_user is None:
            return _json_response({"error": "no user message to forward"}, 400)
        original_text = messages[newest_user].get("content")
        if not isinstance(original_text, str):
            return _json_response({"error": "user message content must be a string"}, 400)

        forwarded_text = abstract_prompt(original_text)
        user_unit = settings.user_pricing.unit
        original_units = _count_units(original_text, user_unit, vocab)
        forwarded_units = _count_units(forwarded_text, user_unit, vocab)
        if forwarded_units > original_units:
            forwarded_text = original_text
            forwarded_units = original_units

        forwarded_payload = json.loads(raw)
        forwarded_payload["messages"][newest_user]["content"] = forwarded_text
        forwarded_body = json.dumps(
            forwarded_payload, separators=(",", ":"), ensure_ascii=False
        ).encode("utf-8")

        record_id = uuid.uuid4().hex
        try:
            status, upstream_body = upstream.send(
                forwarded_body, settings.upstream.timeout
            )
        except UpstreamTimeoutError:
            zero = Decimal("0")
            ledger.append(
                CostRecord(
                    request_id=record_id,
                    received_at=received_at,
                    completed_at=_now(),
                    original_units=original_units,
                    abstracted_units=forwarded_units,
                    upstream_output_units=0,
                    user_price=zero,
                    upstream_cost=zero,
                    margin=zero,
                    status="failed",
                )
            )
            return _json_response({"error": "upstream timeout"}, 504)

        completion_text = _extract_completion_text(upstream_body)
        output_units = _count_units(completion_text, user_unit, vocab)
        user_price = compute_cost(
            original_units, settings.user_pricing.input_rate
        ) + compute_cost(output_units, settings.user_pricing.output_rate)

        upstream_unit = settings.upstream_pricing.unit
        upstream_input_units = _count_units(forwarded_text, upstream_unit, vocab)
        upstream_output_units = _count_units(completion_text, upstream_unit, vocab)
        upstream_cost = compute_cost(
            upstream_input_units, settings.upstream_pricing.input_rate
        ) + compute_cost(upstream_output_units, settings.upstream_pricing.output_rate)

        ledger.append(
            CostRecord(
                request_id=record_id,
                received_at=received_at,
                completed_at=_now(),
                original_units=original_units,
                abstracted_units=forwarded_units,
                upstream_output_units=output_units,
                user_price=user_price,
                upstream_cost=upstream_cost,
                margin=user_price - upstream_cost,
                status="ok",
            )
        )
        return Response(
            content=upstream_body,
            status_code=status,
            media_type="application/json",
        )

    @app.get("/report")
    def report(request: Request):
        window = (
            request.query_params.get("from"),
            request.query_params.get("to"),
        )
        summary = margin_report(ledger, window)
        for key, value in summary.items():
            if isinstance(value, Decimal):
                summary[key] = str(value)
        return summary

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    return app
