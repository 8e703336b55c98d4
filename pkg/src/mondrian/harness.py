"""Evaluation harness: templates, per-sample runs, ablation sweeps.

A corpus is JSON-lines, one sample per line with an id, a map of text
fields, and an optional gold reference.  The harness renders a template,
abstracts the rendered query, sends both versions to an upstream, and
scores agreement between the two responses plus utility against the
reference when one exists.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import httpx

from .engine import abstract_query, resolve_vocab
from .errors import MissingFieldError, TemplateError
from .lexicon import bundled_lexicon
from .metrics import extract_label, rouge_l, rouge_n, token_f1
from .similarity import build_provider

_DATA_DIR = Path(__file__).resolve().parent / "data"


@dataclass(frozen=True)
class EvalSample:
    """One corpus row: named text fields plus an optional reference."""

    id: str
    fields: dict
    reference: str | None = None


@dataclass(frozen=True)
class TemplateSpec:
    """A named pattern with {field} placeholders and literal suffixes."""

    name: str
    pattern: str
    labels: tuple[str, ...] = ()


TEMPLATES = {
    spec.name: spec
    for spec in [
        TemplateSpec("sst2", "{sentence} \n (Positive or Negative)", ("positive", "negative")),
        TemplateSpec("imdb", "{sentence} \n (Positive or Negative)", ("positive", "negative")),
        TemplateSpec(
            "agnews",
            "{sentence} \n (Politics/Sports/Business/Science)",
            ("politics", "sports", "business", "science"),
        ),
        TemplateSpec(
            "qnli",
            "{question} \n {sentence} \n (Entailment/Not Entailment)",
            ("not entailment", "entailment"),
        ),
        TemplateSpec(
            "mnli",
            "{premise} \n {hypothesis} \n (Entailment/Neutral/Contradiction)",
            ("contradiction", "entailment", "neutral"),
        ),
        TemplateSpec(
            "rte",
            "{sentence1} \n {sentence2} \n (Entailment/Not Entailment)",
            ("not entailment", "entailment"),
        ),
        TemplateSpec("cnndm", "{article}\n TL;DR:"),
        TemplateSpec("xsum", "{document}\n TL;DR:"),
        TemplateSpec("squad2", "{context}\n Extract answer for: {question}"),
        TemplateSpec("acp", "{prompt}"),
        TemplateSpec("alpaca", "{prompt} {input}"),
    ]
}


def get_template(name):
    if isinstance(name, TemplateSpec):
        return name
    try:
        return TEMPLATES[name]
    except KeyError:
        raise TemplateError(f"unknown template: {name!r}") from None


class _Fields(dict):
    def __missing__(self, key):
        raise MissingFieldError(key)


def render_template(spec, sample):
    """Substitute sample fields into the pattern, nothing more."""
    spec = get_template(spec)
    fields = sample.fields if isinstance(sample, EvalSample) else sample
    try:
        return spec.pattern.format_map(_Fields(fields))
    except MissingFieldError as err:
        raise MissingFieldError(
            err.field, getattr(sample, "id", None)
        ) from None


def load_corpus(path):
    """Read a JSONL corpus into EvalSample rows, in file order."""
    samples = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            samples.append(
                EvalSample(
                    id=str(raw.get("id", line_no)),
                    fields=dict(raw.get("fields", {})),
                    reference=raw.get("reference"),
                )
            )
    return samples


def bundled_corpus_path():
    """Path of the packaged 100-prompt instruction corpus."""
    return _DATA_DIR / "instructions_100.jsonl"


def echo_upstream(text):
    """Identity upstream: answers every query with the query itself."""
    return text


def chat_upstream(base_url, *, model="default", client=None, timeout=30.0):
    """Callable querying a chat-completions endpoint for each prompt."""
    owned = client or httpx.Client(timeout=timeout)

    def ask(text):
        response = owned.post(
            base_url.rstrip("/") + "/v1/chat/completions",
            json={"model": model, "messages": [{"role": "user", "content": text}]},
        )
        response.raise_for_status()
        payload = response.json()
        return payload["choices"][0]["message"]["content"]

    return ask


@dataclass
class AgreementReport:
    """Per-sample rows plus aggregate means and the config that ran."""

    per_sample: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    config_snapshot: dict = field(default_factory=dict)


def _aggregate(per_sample):
    scored = [row for row in per_sample if "error" not in row]
    aggregates = {"samples": len(per_sample), "scored": len(scored)}
    if not scored:
        return aggregates
    for key in ("reduction_pct_tokens", "reduction_pct_chars"):
        aggregates[f"mean_{key}"] = statistics.fmean(row[key] for row in scored)
    metric_keys = sorted(
        {name for row in scored for name in row["metrics"]}
    )
    for name in metric_keys:
        values = [row["metrics"][name] for row in scored if name in row["metrics"]]
        aggregates[f"mean_{name}"] = statistics.fmean(values)
    return aggregates


def run_eval(
    corpus,
    config,
    upstream=echo_upstream,
    metric_set=("rougeL",),
    *,
    template="acp",
    lexicon=None,
    provider=None,
    vocab=None,
):
    """Query the upstream with original and abstracted renders and score.

    Per-sample upstream failures are recorded on the row and skipped by
    the aggregates; the run itself never aborts.
    """
    spec = get_template(template)
    vocab = vocab or resolve_vocab(config.vocab)
    if provider is None:
        provider = build_provider(config.provider)
    if lexicon is None and "Transform" in config.enabled_ops:
        lexicon = bundled_lexicon()

    per_sample = []
    for sample in corpus:
        original = render_template(spec, sample)
        result = abstract_query(
            original, config, lexicon=lexicon, provider=provider, vocab=vocab
        )
        row = {
            "id": sample.id,
            "original": original,
            "abstracted": result.abstracted,
            "reduction_pct_tokens": result.reduction_pct_tokens,
            "reduction_pct_chars": result.reduction_pct_chars,
            "passed_through": result.passed_through,
        }
        try:
            response_original = upstream(original)
            response_abstracted = upstream(result.abstracted)
        except Exception as err:
            row["error"] = str(err)
            per_sample.append(row)
            continue
        row["response_original"] = response_original
        row["response_abstracted"] = response_abstracted
        row["metrics"] = _score(
            metric_set, spec, response_original, response_abstracted, sample.reference
        )
        per_sample.append(row)
    report = AgreementReport(
        per_sample=per_sample,
        aggregates=_aggregate(per_sample),
        config_snapshot={
            "config": asdict(config),
            "template": spec.name,
            "metrics": list(metric_set),
        },
    )
    return report


def _score(metric_set, spec, response_a, response_b, reference):
    out = {}
    for name in metric_set:
        if name == "rouge1":
            out["agreement_rouge1"] = rouge_n(response_b, response_a, 1)[2]
        elif name == "rouge2":
            out["agreement_rouge2"] = rouge_n(response_b, response_a, 2)[2]
        elif name == "rougeL":
            out["agreement_rougeL"] = rouge_l(response_b, response_a)[2]
        elif name == "f1":
            out["agreement_f1"] = token_f1(response_b, response_a)
        elif name == "acc":
            if not spec.labels:
                raise TemplateError(
                    f"template {spec.name!r} defines no labels for accuracy"
                )
            label_a = extract_label(response_a, spec.labels)
            label_b = extract_label(response_b, spec.labels)
            out["agreement_acc"] = 100.0 if label_a == label_b else 0.0
        else:
            raise ValueError(f"unknown metric: {name!r}")
    if reference is not None:
        out["utility_rougeL"] = rouge_l(response_b, reference)[2]
        out["utility_f1"] = token_f1(response_b, reference)
    return out


_AXES = {
    "ops": [
        ("Transform", ("Transform",)),
        ("Delete", ("Delete",)),
        ("Both", ("Delete", "Transform")),
    ],
    "alpha": [("0.99", 0.99), ("0.95", 0.95), ("0.90", 0.90)],
    "objective": [("Token", "TokenLength"), ("Character", "CharLength")],
}


def ablation_sweep(
    corpus,
    base_config,
    axis,
    upstream=echo_upstream,
    *,
    template="acp",
    metric_set=("rougeL",),
    csv_path=None,
    json_path=None,
    lexicon=None,
    vocab=None,
):
    """One run_eval per axis setting; optionally emits CSV and JSON.

    Axis is "ops", "alpha" or "objective"; rows mirror the length and
    agreement columns of the corresponding result tables.
    """
    axis_key = axis.lower()
    if axis_key not in _AXES:
        raise ValueError(f"unknown ablation axis: {axis!r}")
    if lexicon is None:
        lexicon = bundled_lexicon()
    vocab = vocab or resolve_vocab(base_config.vocab)
    rows = []
    for label, value in _AXES[axis_key]:
        if axis_key == "ops":
            config = replace(base_config, enabled_ops=value)
        elif axis_key == "alpha":
            config = replace(base_config, alpha=value)
        else:
            config = replace(base_config, objective=value)
        report = run_eval(
            corpus,
            config,
            upstream,
            metric_set,
            template=template,
            lexicon=lexicon,
            vocab=vocab,
        )
        row = {"axis": axis_key, "setting": label}
        row.update(report.aggregates)
        rows.append(row)
    if csv_path:
        _emit_csv(rows, csv_path)
    if json_path:
        Path(json_path).write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    return rows


def _emit_csv(rows, path):
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
