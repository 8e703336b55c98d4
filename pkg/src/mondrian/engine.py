"""Greedy similarity-gated query shortening.

A query is split into sentences; each sentence is edited one operation
at a time.  Every iteration enumerates candidate edits, keeps those
whose objective strictly drops and whose similarity to the original
sentence stays at or above alpha, and accepts the best survivor under a
total tie-break order.  The loop stops at a fixpoint or the iteration
cap.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace

from .errors import OracleUnavailableError, ProviderUnavailableError
from .lexicon import abbreviation_of, bundled_lexicon, synonyms
from .similarity import SimilarityProviderSpec, build_provider, similarity
from .tokenizer import count_chars, count_tokens, get_vocabulary, load_vocabulary

OBJECTIVES = ("TokenLength", "CharLength")
OPS = ("Delete", "Transform", "Fragmentize", "Translate")
_OP_ORDER = {"Delete": 0, "Transform": 1, "Fragment": 2, "Translate": 3}


@dataclass(frozen=True)
class Query:
    """A user query plus an optional language hint for Translate."""

    text: str
    language_hint: str | None = None


@dataclass(frozen=True)
class AbstractionConfig:
    """Knobs for one abstraction run.

    alpha is the similarity floor; objective picks what gets minimized;
    enabled_ops selects candidate generators.
    """

    alpha: float = 0.99
    objective: str = "TokenLength"
    enabled_ops: tuple[str, ...] = ("Delete", "Transform")
    max_iterations_per_sentence: int = 128
    split_sentences: bool = True
    provider: SimilarityProviderSpec = field(
        default_factory=lambda: SimilarityProviderSpec(kind="LocalBagOfTokens")
    )
    vocab: str = "cl100k_base"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective: {self.objective!r}")
        ops = tuple(self.enabled_ops)
        if not ops:
            raise ValueError("enabled_ops must be non-empty")
        for op in ops:
            if op not in OPS:
                raise ValueError(f"unknown operation: {op!r}")
        object.__setattr__(self, "enabled_ops", ops)
        if self.max_iterations_per_sentence < 1:
            raise ValueError("max_iterations_per_sentence must be >= 1")


@dataclass(frozen=True)
class EditOp:
    """One edit at a word position.

    word_count is how many consecutive word items the edit consumes;
    multi-word abbreviations contract more than one.
    """

    kind: str
    word_index: int
    replacement: str | None = None
    word_count: int = 1


@dataclass(frozen=True)
class Candidate:
    """A prospective rewrite with its objective and gate scores."""

    text: str
    op: EditOp
    objective_value: int
    similarity_to_original: float | None = None
    words: tuple[str, ...] = ()


@dataclass(frozen=True)
class TraceEntry:
    """One accepted edit: where in the loop, what, and its scores."""

    iteration: int
    op: EditOp
    objective_value: int
    similarity: float
    sentence_index: int = 0


@dataclass
class AbstractionResult:
    """Outcome of abstracting one sentence or a whole query."""

    original: str
    abstracted: str
    original_tokens: int
    abstracted_tokens: int
    original_chars: int
    abstracted_chars: int
    reduction_pct_tokens: float
    reduction_pct_chars: float
    trace: list[TraceEntry] = field(default_factory=list)
    per_sentence: list["AbstractionResult"] = field(default_factory=list)
    passed_through: bool = False
    provider_failed: bool = False


def split_sentences(text):
    """Sentences with their (start, end) spans in the source text.

    A sentence ends after '.', '?' or '!' followed by whitespace or end
    of text.  Spans exclude inter-sentence whitespace, so the original
    reassembles from spans plus the gaps.
    """
    sentences = []
    i = 0
    n = len(text)
    while i < n:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            break
        start = i
        end = n
        while i < n:
            if text[i] in ".?!" and (i + 1 >= n or text[i + 1].isspace()):
                end = i + 1
                break
            i += 1
        sentences.append((text[start:end], (start, end)))
        i = end
    return sentences


def _is_mark(char):
    return unicodedata.category(char)[0] in ("P", "S")


def word_tokenize(sentence):
    """Whitespace words with leading/trailing punctuation split off.

    Interior punctuation (apostrophes, hyphens) stays attached, so
    "don't" is one item while "limit?" is two.
    """
    items = []
    for chunk in sentence.split():
        head = []
        tail = []
        while chunk and _is_mark(chunk[0]):
            head.append(chunk[0])
            chunk = chunk[1:]
        while chunk and _is_mark(chunk[-1]):
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        items.extend(head)
        if chunk:
            items.append(chunk)
        items.extend(reversed(tail))
    return items


def objective_score(text, config, vocab):
    """The configured length objective for a piece of text."""
    if config.objective == "TokenLength":
        return count_tokens(vocab, text)
    return count_chars(text)


def resolve_vocab(ref):
    """Bundled vocabulary by name, or a rank file by path."""
    if ref == "cl100k_base":
        return get_vocabulary(ref)
    return load_vocabulary(ref)


def _delete_candidates(words, config, vocab):
    if len(words) <= 1:
        return []
    out = []
    for i in range(len(words)):
        kept = words[:i] + words[i + 1 :]
        text = " ".join(kept)
        out.append(
            Candidate(
                text=text,
                op=EditOp(kind="Delete", word_index=i),
                objective_value=objective_score(text, config, vocab),
                words=tuple(kept),
            )
        )
    return out


def _transform_candidates(words, config, lexicon, vocab, current_objective):
    out = []
    if lexicon is None:
        return out
    max_phrase = 1
    if lexicon.abbreviations:
        max_phrase = max(key.count(" ") + 1 for key in lexicon.abbreviations)

    def emit(i, span, replacement):
        kept = words[:i] + replacement.split() + words[i + span :]
        text = " ".join(kept)
        value = objective_score(text, config, vocab)
        if value < current_objective:
            out.append(
                Candidate(
                    text=text,
                    op=EditOp(
                        kind="Transform",
                        word_index=i,
                        replacement=replacement,
                        word_count=span,
                    ),
                    objective_value=value,
                    words=tuple(kept),
                )
            )

    for i, word in enumerate(words):
        for syn in synonyms(lexicon, word):
            emit(i, 1, syn)
        for span in range(min(max_phrase, len(words) - i), 0, -1):
            phrase = " ".join(words[i : i + span])
            short = abbreviation_of(lexicon, phrase)
            if short is not None:
                emit(i, span, short)
        if word[:1].isupper():
            emit(i, 1, word[0].lower() + word[1:])
    return out


def generate_candidates(
    sentence,
    config,
    lexicon=None,
    *,
    vocab=None,
    oracle=None,
    table=None,
    translate_budget=None,
):
    """All candidate edits of a sentence under the enabled operations."""
    words = sentence if isinstance(sentence, (list, tuple)) else word_tokenize(sentence)
    words = list(words)
    if not words:
        return []
    vocab = vocab or resolve_vocab(config.vocab)
    text = " ".join(words)
    current_objective = objective_score(text, config, vocab)
    out = []
    if "Delete" in config.enabled_ops:
        out.extend(_delete_candidates(words, config, vocab))
    if "Transform" in config.enabled_ops:
        out.extend(_transform_candidates(words, config, lexicon, vocab, current_objective))
    if "Fragmentize" in config.enabled_ops and oracle is not None:
        from .experimental import fragment_candidates

        try:
            out.extend(fragment_candidates(words, oracle, vocab, config))
        except OracleUnavailableError:
            pass
    if "Translate" in config.enabled_ops and table is not None:
        from .experimental import translate_candidates

        budget = table.max_words_per_sentence if translate_budget is None else translate_budget
        if budget > 0:
            out.extend(translate_candidates(words, table, config, vocab))
    return out


def _pick(candidates):
    return min(
        candidates,
        key=lambda c: (
            c.objective_value,
            _OP_ORDER[c.op.kind],
            c.op.word_index,
            c.op.replacement or "",
        ),
    )


def abstract_sentence(
    sentence,
    config,
    lexicon=None,
    provider=None,
    vocab=None,
    *,
    oracle=None,
    table=None,
    sentence_index=0,
):
    """Greedily shorten one sentence; returns a per-sentence result.

    Similarity is always measured against this sentence's original
    form.  Provider failure yields a pass-through result rather than a
    partial rewrite.
    """
    vocab = vocab or resolve_vocab(config.vocab)
    if provider is None:
        provider = build_provider(config.provider)
    if lexicon is None and "Transform" in config.enabled_ops:
        lexicon = bundled_lexicon()

    original = sentence
    base_objective = objective_score(original, config, vocab)
    words = word_tokenize(sentence)
    trace = []

    def finish(text, passed, failed=False):
        return _result(original, text, vocab, trace, passed_through=passed, provider_failed=failed)

    if not original.strip() or len(words) <= 1:
        return finish(original, True)

    sim_cache = {}

    def gate(text):
        if text not in sim_cache:
            sim_cache[text] = similarity(provider, original, text)
        return sim_cache[text]

    current_words = words
    current_text = original
    current_objective = base_objective
    translate_budget = table.max_words_per_sentence if table is not None else 0

    try:
        for iteration in range(1, config.max_iterations_per_sentence + 1):
            candidates = generate_candidates(
                current_words,
                config,
                lexicon,
                vocab=vocab,
                oracle=oracle,
                table=table,
                translate_budget=translate_budget,
            )
            viable = []
            for cand in candidates:
                if cand.objective_value >= current_objective:
                    continue
                score = gate(cand.text)
                if score >= config.alpha:
                    viable.append(replace(cand, similarity_to_original=score))
            if not viable:
                break
            best = _pick(viable)
            trace.append(
                TraceEntry(
                    iteration=iteration,
                    op=best.op,
                    objective_value=best.objective_value,
                    similarity=best.similarity_to_original,
                    sentence_index=sentence_index,
                )
            )
            current_words = list(best.words)
            current_text = best.text
            current_objective = best.objective_value
            if best.op.kind == "Translate":
                translate_budget -= 1
    except ProviderUnavailableError:
        trace.clear()
        return finish(original, True, failed=True)

    return finish(current_text, passed=not trace)


def _result(original, abstracted, vocab, trace, *, passed_through, provider_failed=False, per_sentence=None):
    original_tokens = count_tokens(vocab, original)
    abstracted_tokens = count_tokens(vocab, abstracted)
    original_chars = count_chars(original)
    abstracted_chars = count_chars(abstracted)
    return AbstractionResult(
        original=original,
        abstracted=abstracted,
        original_tokens=original_tokens,
        abstracted_tokens=abstracted_tokens,
        original_chars=original_chars,
        abstracted_chars=abstracted_chars,
        reduction_pct_tokens=_reduction(original_tokens, abstracted_tokens),
        reduction_pct_chars=_reduction(original_chars, abstracted_chars),
        trace=list(trace),
        per_sentence=list(per_sentence or []),
        passed_through=passed_through,
        provider_failed=provider_failed,
    )


def _reduction(before, after):
    if before <= 0:
        return 0.0
    return (before - after) * 100.0 / before


def abstract_query(
    query,
    config,
    *,
    lexicon=None,
    provider=None,
    vocab=None,
    oracle=None,
    table=None,
):
    """Abstract a whole query sentence by sentence.

    Returns the original byte-exact whenever nothing was accepted, any
    sentence hit a provider failure, or the rewrite would not improve
    the configured objective.
    """
    if isinstance(query, str):
        query = Query(text=query)
    text = query.text
    vocab = vocab or resolve_vocab(config.vocab)
    if provider is None:
        provider = build_provider(config.provider)
    if lexicon is None and "Transform" in config.enabled_ops:
        lexicon = bundled_lexicon()

    if not text.strip():
        return _result(text, text, vocab, [], passed_through=True)

    if config.split_sentences:
        pieces = split_sentences(text)
    else:
        pieces = [(text, (0, len(text)))]

    sentence_results = []
    for index, (sentence, _) in enumerate(pieces):
        sub = abstract_sentence(
            sentence,
            config,
            lexicon,
            provider,
            vocab,
            oracle=oracle,
            table=table,
            sentence_index=index,
        )
        sentence_results.append(sub)
        if sub.provider_failed:
            return _result(
                text, text, vocab, [], passed_through=True, provider_failed=True
            )

    trace = [entry for sub in sentence_results for entry in sub.trace]
    if not trace:
        return _result(
            text, text, vocab, [], passed_through=True, per_sentence=sentence_results
        )

    abstracted = " ".join(sub.abstracted for sub in sentence_results)
    if objective_score(abstracted, config, vocab) > objective_score(text, config, vocab):
        return _result(
            text, text, vocab, [], passed_through=True, per_sentence=sentence_results
        )
    return _result(
        text,
        abstracted,
        vocab,
        trace,
        passed_through=False,
        per_sentence=sentence_results,
    )
