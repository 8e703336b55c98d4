"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 runtime failure.  Results go to
stdout as JSON; logs and warnings go to stderr.  Option precedence is
flags over environment variables (MONDRIAN_*) over the --config file.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace
from decimal import Decimal
from pathlib import Path

import click
from click.core import ParameterSource

from .config import RuntimeConfig, load_runtime_config
from .engine import OBJECTIVES, OPS, Query, abstract_query, resolve_vocab
from .errors import MondrianError
from .experimental import (
    RecoverabilityOracleSpec,
    build_oracle,
    bundled_translation_table,
)
from .harness import (
    ablation_sweep,
    bundled_corpus_path,
    chat_upstream,
    echo_upstream,
    load_corpus,
    run_eval,
)
from .pricing import CostLedger, margin_report
from .proxy import create_app
from .similarity import PROVIDER_KINDS, SimilarityProviderSpec
from .tokenizer import encode

LOG = logging.getLogger("mondrian")

_METRIC_NAMES = ("rouge1", "rouge2", "rougeL", "f1", "acc")


def _json_default(value):
    if isinstance(value, Decimal):
        return format(value, "f")
    return str(value)


def _emit(payload):
    click.echo(json.dumps(payload, ensure_ascii=False, default=_json_default))


def _given(ctx, name):
    source = ctx.get_parameter_source(name)
    return source in (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT)


def _load_runtime(config_path):
    return load_runtime_config(config_path) if config_path else RuntimeConfig()


def _parse_ops(ctx, param, value):
    if value is None:
        return None
    ops = tuple(piece.strip() for piece in value.split(",") if piece.strip())
    for op in ops:
        if op not in OPS:
            raise click.BadParameter(
                f"unknown operation {op!r}; choose from {', '.join(OPS)}"
            )
    if not ops:
        raise click.BadParameter("at least one operation is required")
    return ops


def _parse_metrics(ctx, param, value):
    if value is None:
        return None
    names = []
    for piece in value.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if piece == "rouge":
            names.extend(["rouge1", "rouge2", "rougeL"])
        elif piece in _METRIC_NAMES:
            names.append(piece)
        else:
            raise click.BadParameter(
                f"unknown metric {piece!r}; choose from rouge, "
                + ", ".join(_METRIC_NAMES)
            )
    if not names:
        raise click.BadParameter("at least one metric is required")
    return tuple(dict.fromkeys(names))


def _engine_config(ctx, runtime, alpha, objective, ops, provider, endpoint, vocab):
    """Apply explicitly-given flags on top of the runtime config."""
    base = runtime.abstraction
    overrides = {}
    if _given(ctx, "alpha"):
        overrides["alpha"] = alpha
    if _given(ctx, "objective"):
        overrides["objective"] = objective
    if ops is not None and _given(ctx, "ops"):
        overrides["enabled_ops"] = ops
    if _given(ctx, "vocab"):
        overrides["vocab"] = vocab
    if _given(ctx, "provider") or _given(ctx, "endpoint"):
        kind = provider if _given(ctx, "provider") else base.provider.kind
        spec_endpoint = endpoint if _given(ctx, "endpoint") else base.provider.endpoint
        try:
            overrides["provider"] = SimilarityProviderSpec(
                kind=kind, endpoint=spec_endpoint, vocab_ref=base.provider.vocab_ref
            )
        except ValueError as err:
            raise click.BadParameter(str(err))
    try:
        return replace(base, **overrides) if overrides else base
    except ValueError as err:
        raise click.BadParameter(str(err))


def _experimental_parts(runtime, config, vocab):
    oracle = None
    if "Fragmentize" in config.enabled_ops:
        spec = runtime.oracle or RecoverabilityOracleSpec(dictionary_ref="bundled")
        oracle = build_oracle(spec)
    table = None
    if "Translate" in config.enabled_ops:
        table = bundled_translation_table(vocab)
    return oracle, table


def _upstream_callable(ref):
    if ref == "echo":
        return echo_upstream
    return chat_upstream(ref)


ENGINE_OPTIONS = [
    click.option(
        "--config",
        "config_path",
        type=click.Path(dir_okay=False),
        default=None,
        envvar="MONDRIAN_CONFIG",
        help="TOML or JSON runtime config file.",
    ),
    click.option(
        "--alpha",
        type=click.FloatRange(0.0, 1.0),
        default=0.99,
        envvar="MONDRIAN_ALPHA",
        help="Similarity floor.",
    ),
    click.option(
        "--objective",
        type=click.Choice(OBJECTIVES),
        default="TokenLength",
        envvar="MONDRIAN_OBJECTIVE",
    ),
    click.option(
        "--ops",
        default="Delete,Transform",
        envvar="MONDRIAN_OPS",
        callback=_parse_ops,
        help="Comma-separated operations.",
    ),
    click.option(
        "--provider",
        type=click.Choice(PROVIDER_KINDS),
        default="LocalBagOfTokens",
        envvar="MONDRIAN_PROVIDER",
    ),
    click.option(
        "--endpoint",
        default=None,
        envvar="MONDRIAN_ENDPOINT",
        help="RemoteEmbedding /embed endpoint.",
    ),
    click.option(
        "--vocab", default="cl100k_base", envvar="MONDRIAN_VOCAB",
        help="Vocabulary name or rank-file path.",
    ),
]


def engine_options(command):
    for option in reversed(ENGINE_OPTIONS):
        command = option(command)
    return command


@click.group()
def cli():
    """Token-cost-aware query abstraction toolkit."""


@cli.command()
@click.argument("text")
@click.option(
    "--vocab", default="cl100k_base", envvar="MONDRIAN_VOCAB",
    help="Vocabulary name or rank-file path.",
)
@click.option("--ids", is_flag=True, help="Include token ids.")
def tokenize(text, vocab, ids):
    """Count BPE tokens in TEXT."""
    sequence = encode(resolve_vocab(vocab), text)
    payload = {"tokens": len(sequence.ids)}
    if ids:
        payload["ids"] = list(sequence.ids)
    _emit(payload)


@cli.command()
@click.argument("text", required=False)
@engine_options
@click.option("--language-hint", default=None, help="BCP-47-ish hint, e.g. zh.")
@click.option("--trace/--no-trace", default=False, help="Include accepted edits.")
@click.pass_context
def abstract(
    ctx, text, config_path, alpha, objective, ops, provider, endpoint, vocab,
    language_hint, trace,
):
    """Abstract TEXT (reads stdin when TEXT is omitted)."""
    if text is None:
        text = click.get_text_stream("stdin").read().rstrip("\n")
    runtime = _load_runtime(config_path)
    config = _engine_config(ctx, runtime, alpha, objective, ops, provider, endpoint, vocab)
    resolved = resolve_vocab(config.vocab)
    oracle, table = _experimental_parts(runtime, config, resolved)
    query = Query(text, language_hint) if language_hint else text
    result = abstract_query(query, config, vocab=resolved, oracle=oracle, table=table)
    if result.provider_failed:
        LOG.warning("similarity provider unreachable; query passed through unchanged")
    payload = {
        "original": result.original,
        "abstracted": result.abstracted,
        "original_tokens": result.original_tokens,
        "abstracted_tokens": result.abstracted_tokens,
        "original_chars": result.original_chars,
        "abstracted_chars": result.abstracted_chars,
        "reduction_pct_tokens": result.reduction_pct_tokens,
        "reduction_pct_chars": result.reduction_pct_chars,
        "passed_through": result.passed_through,
        "provider_failed": result.provider_failed,
    }
    if trace:
        payload["trace"] = [
            {
                "sentence": entry.sentence_index,
                "iteration": entry.iteration,
                "op": entry.op.kind,
                "word_index": entry.op.word_index,
                "replacement": entry.op.replacement,
                "objective": entry.objective_value,
                "similarity": entry.similarity,
            }
            for entry in result.trace
        ]
    _emit(payload)


@cli.command("eval")
@engine_options
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--template", default=None, help="Prompt template name.")
@click.option("--upstream", "upstream_ref", default="echo", help="'echo' or a base URL.")
@click.option("--metrics", default=None, callback=_parse_metrics, help="e.g. rouge,f1,acc")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Full report JSON path.")
@click.pass_context
def eval_command(
    ctx, config_path, alpha, objective, ops, provider, endpoint, vocab,
    corpus, template, upstream_ref, metrics, out,
):
    """Score agreement between original and abstracted responses."""
    runtime = _load_runtime(config_path)
    config = _engine_config(ctx, runtime, alpha, objective, ops, provider, endpoint, vocab)
    corpus_path = corpus or runtime.corpus_path or bundled_corpus_path()
    report = run_eval(
        load_corpus(corpus_path),
        config,
        _upstream_callable(upstream_ref),
        metrics or runtime.metrics,
        template=template or runtime.template,
    )
    if out:
        full = {
            "aggregates": report.aggregates,
            "per_sample": report.per_sample,
            "config_snapshot": report.config_snapshot,
        }
        Path(out).write_text(
            json.dumps(full, ensure_ascii=False, indent=2, default=str) + "\n",
            encoding="utf-8",
        )
        LOG.info("wrote full report to %s", out)
    _emit(report.aggregates)


@cli.command()
@engine_options
@click.option("--axis", type=click.Choice(["ops", "alpha", "objective"]), required=True)
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--template", default=None)
@click.option("--upstream", "upstream_ref", default="echo")
@click.option("--metrics", default=None, callback=_parse_metrics)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
@click.option("--json", "json_path", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def ablate(
    ctx, config_path, alpha, objective, ops, provider, endpoint, vocab,
    axis, corpus, template, upstream_ref, metrics, csv_path, json_path,
):
    """Sweep one configuration axis and tabulate the runs."""
    runtime = _load_runtime(config_path)
    config = _engine_config(ctx, runtime, alpha, objective, ops, provider, endpoint, vocab)
    corpus_path = corpus or runtime.corpus_path or bundled_corpus_path()
    rows = ablation_sweep(
        load_corpus(corpus_path),
        config,
        axis,
        _upstream_callable(upstream_ref),
        template=template or runtime.template,
        metric_set=metrics or runtime.metrics,
        csv_path=csv_path,
        json_path=json_path,
    )
    _emit(rows)


@cli.command()
@click.option(
    "--config", "config_path", type=click.Path(dir_okay=False), default=None,
    envvar="MONDRIAN_CONFIG",
)
@click.option("--host", default="127.0.0.1", envvar="MONDRIAN_HOST")
@click.option("--port", type=int, default=8080, envvar="MONDRIAN_PORT")
@click.option("--ledger", type=click.Path(dir_okay=False), default=None)
@click.option("--abstract/--no-abstract", "do_abstract", default=True)
@click.pass_context
def serve(ctx, config_path, host, port, ledger, do_abstract):
    """Run the cost-accounting gateway."""
    import uvicorn

    settings = _load_runtime(config_path).proxy_settings()
    if ledger:
        settings.ledger_path = ledger
    if _given(ctx, "do_abstract"):
        settings.abstract = do_abstract
    app = create_app(settings)
    LOG.info("gateway listening on %s:%d (ledger: %s)", host, port, settings.ledger_path)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.command()
@click.option(
    "--ledger", type=click.Path(exists=True, dir_okay=False), default=None,
    help="Ledger JSONL path (defaults to the config's).",
)
@click.option(
    "--config", "config_path", type=click.Path(dir_okay=False), default=None,
    envvar="MONDRIAN_CONFIG",
)
@click.option("--from", "start", default=None, help="ISO timestamp lower bound.")
@click.option("--to", "end", default=None, help="ISO timestamp upper bound.")
def report(ledger, config_path, start, end):
    """Summarize margins from a gateway ledger."""
    path = ledger or _load_runtime(config_path).ledger_path
    window = (start, end) if start or end else None
    _emit(margin_report(CostLedger(path), window))


def dispatch(argv=None):
    """Run the CLI without exiting; returns the process exit status."""
    if not logging.getLogger().handlers:
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )
    try:
        value = cli.main(args=argv, prog_name="mondrian", standalone_mode=False)
    except click.UsageError as err:
        err.show(file=sys.stderr)
        return 1
    except click.ClickException as err:
        err.show(file=sys.stderr)
        return 2
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except MondrianError as err:
        LOG.error("%s: %s", type(err).__name__, err)
        return 2
    except Exception:
        LOG.exception("unhandled failure")
        return 2
    if isinstance(value, int):
        return value
    return 0


def main(argv=None):
    sys.exit(dispatch(argv))
