"""Runtime configuration files for the command line and the gateway.

A config file is TOML or JSON (chosen by extension) with optional
sections; every key must be known, so typos fail loudly instead of
silently keeping a default.  Monetary rates must be strings or
integers, never floats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .engine import AbstractionConfig
from .errors import ConfigError
from .experimental import RecoverabilityOracleSpec
from .pricing import PricingModel
from .proxy import ProxySettings, UpstreamSpec
from .similarity import SimilarityProviderSpec


def _default_pricing():
    return PricingModel(
        unit="Per1kTokens", input_rate=Decimal("0.002"), output_rate=Decimal("0.002")
    )


@dataclass(frozen=True)
class RuntimeConfig:
    """Validated union of everything a subcommand might need."""

    abstraction: AbstractionConfig = field(default_factory=AbstractionConfig)
    oracle: RecoverabilityOracleSpec | None = None
    user_pricing: PricingModel = field(default_factory=_default_pricing)
    upstream_pricing: PricingModel = field(default_factory=_default_pricing)
    upstream: UpstreamSpec = field(default_factory=UpstreamSpec)
    ledger_path: str = "ledger.jsonl"
    abstract: bool = True
    corpus_path: str | None = None
    template: str = "acp"
    metrics: tuple[str, ...] = ("rougeL",)

    def proxy_settings(self):
        return ProxySettings(
            abstraction=self.abstraction,
            user_pricing=self.user_pricing,
            upstream_pricing=self.upstream_pricing,
            upstream=self.upstream,
            ledger_path=self.ledger_path,
            abstract=self.abstract,
        )


def _check_keys(mapping, allowed, context):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown config key: {context}.{key}")


def _rate(value, context):
    # floats would smuggle binary rounding into exact money arithmetic
    if isinstance(value, float):
        raise ConfigError(
            f"{context} must be a string or integer, not a float; "
            f'write it as "{value}"'
        )
    try:
        return Decimal(value)
    except (InvalidOperation, TypeError, ValueError):
        raise ConfigError(f"{context} is not a valid decimal: {value!r}") from None


def _build(factory, kwargs, context):
    try:
        return factory(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid {context}: {err}") from None


def _abstraction(data):
    _check_keys(
        data,
        {
            "alpha",
            "objective",
            "enabled_ops",
            "max_iterations_per_sentence",
            "split_sentences",
            "provider",
            "vocab",
        },
        "abstraction",
    )
    kwargs = {k: v for k, v in data.items() if k != "provider"}
    if "enabled_ops" in kwargs:
        kwargs["enabled_ops"] = tuple(kwargs["enabled_ops"])
    if "provider" in data:
        provider = dict(data["provider"])
        _check_keys(provider, {"kind", "endpoint", "vocab_ref"}, "abstraction.provider")
        kwargs["provider"] = _build(
            SimilarityProviderSpec, provider, "abstraction.provider"
        )
    return _build(AbstractionConfig, kwargs, "abstraction")


def _oracle(data):
    data = dict(data)
    _check_keys(data, {"kind", "endpoint", "top_k", "dictionary_ref"}, "oracle")
    return _build(RecoverabilityOracleSpec, data, "oracle")


def _pricing_model(data, context):
    data = dict(data)
    _check_keys(data, {"unit", "input_rate", "output_rate"}, context)
    for key in ("input_rate", "output_rate"):
        if key in data:
            data[key] = _rate(data[key], f"{context}.{key}")
    return _build(PricingModel, data, context)


def _pricing(data):
    _check_keys(data, {"user", "upstream"}, "pricing")
    out = {}
    if "user" in data:
        out["user_pricing"] = _pricing_model(data["user"], "pricing.user")
    if "upstream" in data:
        out["upstream_pricing"] = _pricing_model(data["upstream"], "pricing.upstream")
    return out


def _upstream(data):
    data = dict(data)
    _check_keys(
        data, {"request_template", "base_url", "auth_token_ref", "timeout"}, "upstream"
    )
    return _build(UpstreamSpec, data, "upstream")


_TOP_LEVEL = {"abstraction", "oracle", "pricing", "upstream", "proxy", "eval"}


def build_runtime_config(data):
    """RuntimeConfig from an already-parsed mapping; rejects unknowns."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table/object")
    _check_keys(data, _TOP_LEVEL, "config")
    kwargs = {}
    if "abstraction" in data:
        kwargs["abstraction"] = _abstraction(dict(data["abstraction"]))
    if "oracle" in data:
        kwargs["oracle"] = _oracle(data["oracle"])
    if "pricing" in data:
        kwargs.update(_pricing(dict(data["pricing"])))
    if "upstream" in data:
        kwargs["upstream"] = _upstream(data["upstream"])
    if "proxy" in data:
        proxy = dict(data["proxy"])
        _check_keys(proxy, {"ledger_path", "abstract"}, "proxy")
        if "ledger_path" in proxy:
            kwargs["ledger_path"] = str(proxy["ledger_path"])
        if "abstract" in proxy:
            if not isinstance(proxy["abstract"], bool):
                raise ConfigError("proxy.abstract must be a boolean")
            kwargs["abstract"] = proxy["abstract"]
    if "eval" in data:
        section = dict(data["eval"])
        _check_keys(section, {"corpus", "template", "metrics"}, "eval")
        if "corpus" in section:
            kwargs["corpus_path"] = str(section["corpus"])
        if "template" in section:
            kwargs["template"] = str(section["template"])
        if "metrics" in section:
            kwargs["metrics"] = tuple(section["metrics"])
    return RuntimeConfig(**kwargs)


def load_runtime_config(path):
    """Parse a .toml or .json file into a validated RuntimeConfig."""
    path = Path(path)
    suffix = path.suffix.lower()
    try:
        if suffix == ".toml":
            with path.open("rb") as handle:
                data = tomllib.load(handle)
        elif suffix == ".json":
            data = json.loads(path.read_text(encoding="utf-8"))
        else:
            raise ConfigError(
                f"config files must end in .toml or .json, got {path.name!r}"
            )
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot parse {path.name}: {err}") from None
    return build_runtime_config(data)
