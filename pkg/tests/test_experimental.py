"""Fragment and Translate tests: oracles, language detection, budgets."""

import httpx
import pytest

from mondrian.engine import AbstractionConfig, abstract_sentence
from mondrian.errors import OracleUnavailableError
from mondrian.experimental import (
    AcceptAll,
    PrefixDictionary,
    RecoverabilityOracleSpec,
    RemoteMaskedLM,
    TranslationTable,
    build_oracle,
    bundled_dictionary,
    bundled_translation_table,
    detect_language,
    fragmentize,
    translate_words,
)
from mondrian.similarity import SimilarityProviderSpec
from mondrian.tokenizer import count_tokens, get_vocabulary


@pytest.fixture(scope="module")
def vocab():
    return get_vocabulary("cl100k_base")


@pytest.fixture(scope="module")
def zh_table(vocab):
    return bundled_translation_table(vocab)


def _cfg(**kwargs):
    kwargs.setdefault("provider", SimilarityProviderSpec(kind="AlwaysOne"))
    kwargs.setdefault("enabled_ops", ("Fragmentize",))
    return AbstractionConfig(**kwargs)


def test_oracle_spec_validation():
    with pytest.raises(ValueError):
        RecoverabilityOracleSpec(kind="RemoteMaskedLM")
    with pytest.raises(ValueError):
        RecoverabilityOracleSpec(kind="PrefixDictionary")
    with pytest.raises(ValueError):
        RecoverabilityOracleSpec(kind="Psychic", dictionary_ref="x")
    spec = RecoverabilityOracleSpec(kind="PrefixDictionary", dictionary_ref="bundled")
    assert spec.top_k == 503


def test_single_token_word_skipped(vocab):
    cands = fragmentize("the cat sat", AcceptAll(), vocab, _cfg())
    assert cands == []


def test_accept_all_keeps_first_token(vocab):
    assert count_tokens(vocab, "Brainstorm") == 2
    cands = fragmentize(
        "Brainstorm ways reduce energy consumption in a home.", AcceptAll(), vocab, _cfg()
    )
    brains = [c for c in cands if c.op.replacement == "Brain"]
    assert brains
    assert brains[0].op.kind == "Fragment"
    assert brains[0].op.word_index == 0
    assert brains[0].text.startswith("Brain ways reduce energy")


def test_fragment_never_increases_objective(vocab):
    cfg = _cfg()
    sentence = "Brainstorm unfathomable hyperparameters quickly"
    base = count_tokens(vocab, sentence)
    for cand in fragmentize(sentence, AcceptAll(), vocab, cfg):
        assert cand.objective_value <= base


def test_prefix_dictionary_uniqueness():
    oracle = PrefixDictionary(["brainstorm", "banana", "brain"])
    # "brain" prefixes two dictionary words, so nothing is recoverable
    assert not oracle.recoverable("brain", "brainstorm")
    narrow = PrefixDictionary(["brainstorm", "banana"])
    assert narrow.recoverable("brain", "brainstorm")
    assert narrow.recoverable("Brain", "Brainstorm")
    # unique match that is a different word does not count
    assert not narrow.recoverable("ban", "bandana")


def test_prefix_dictionary_fragmentize(vocab):
    oracle = PrefixDictionary(["brainstorm", "banana"])
    cands = fragmentize("Brainstorm with bananas", oracle, vocab, _cfg())
    assert [c.op.replacement for c in cands] == ["Brain"]


def test_bundled_dictionary_size():
    assert len(bundled_dictionary().words) == 10000


def test_remote_oracle_round_trip():
    seen = {}

    def handler(request):
        import json

        seen.update(json.loads(request.content))
        return httpx.Response(200, json={"recoverable": True})

    oracle = RemoteMaskedLM(
        "http://svc/recover",
        top_k=503,
        client=httpx.Client(transport=httpx.MockTransport(handler)),
    )
    assert oracle.recoverable("Brain", "Brainstorm", left="", right="ways")
    assert seen == {
        "left": "",
        "masked_word_prefix": "Brain",
        "right": "ways",
        "target": "Brainstorm",
        "top_k": 503,
    }


def test_remote_oracle_unavailable():
    def handler(request):
        raise httpx.ConnectError("refused")

    oracle = RemoteMaskedLM(
        "http://svc/recover", client=httpx.Client(transport=httpx.MockTransport(handler))
    )
    with pytest.raises(OracleUnavailableError):
        oracle.recoverable("Brain", "Brainstorm")


def test_engine_survives_oracle_outage(vocab):
    def handler(request):
        raise httpx.ConnectError("refused")

    oracle = RemoteMaskedLM(
        "http://svc/recover", client=httpx.Client(transport=httpx.MockTransport(handler))
    )
    cfg = _cfg(enabled_ops=("Delete", "Fragmentize"))
    result = abstract_sentence("aa bb cc dd", cfg, oracle=oracle, vocab=vocab)
    # Delete still ran even though the oracle was down
    assert result.abstracted == "dd"


def test_build_oracle_kinds():
    assert isinstance(build_oracle(RecoverabilityOracleSpec(kind="AcceptAll")), AcceptAll)
    bundled = build_oracle(
        RecoverabilityOracleSpec(kind="PrefixDictionary", dictionary_ref="bundled")
    )
    assert isinstance(bundled, PrefixDictionary)
    remote = build_oracle(
        RecoverabilityOracleSpec(kind="RemoteMaskedLM", endpoint="http://svc/recover")
    )
    assert isinstance(remote, RemoteMaskedLM)


def test_detect_language_rules():
    assert detect_language("你好") == "zh"
    assert detect_language("hello") == "en"
    assert detect_language("") == "en"
    assert detect_language("说出与Russia接壤") == "zh"
    assert detect_language("Russia x y z") == "en"


def test_table_validation():
    with pytest.raises(ValueError):
        TranslationTable(entries={}, max_words_per_sentence=0)


def test_table_deltas(zh_table):
    target, delta = zh_table.entries["俄罗斯"]
    assert target == "Russia"
    assert delta == -5
    assert zh_table.entries["电话"][1] == 0


def test_translate_substring_replacement(vocab, zh_table):
    cfg = _cfg(enabled_ops=("Translate",))
    cands = translate_words("说出与俄罗斯接壤的三个国家。", zh_table, config=cfg, vocab=vocab)
    russia = [c for c in cands if "Russia" in c.text]
    assert russia
    assert detect_language(russia[0].text) == "zh"
    assert russia[0].op.kind == "Translate"


def test_translate_skips_zero_delta(vocab, zh_table):
    cfg = _cfg(enabled_ops=("Translate",))
    cands = translate_words("我的电话丢了需要帮助快点。", zh_table, config=cfg, vocab=vocab)
    assert not any("telephone" in c.text for c in cands)


def test_translate_no_hits(vocab, zh_table):
    cfg = _cfg(enabled_ops=("Translate",))
    assert translate_words("这里没有条目。", zh_table, config=cfg, vocab=vocab) == []


def test_translate_wrong_language(vocab, zh_table):
    cfg = _cfg(enabled_ops=("Translate",))
    assert translate_words("plain english text", zh_table, config=cfg, vocab=vocab) == []


def test_translate_discards_language_flips(vocab, zh_table):
    cfg = _cfg(enabled_ops=("Translate",))
    # 3 CJK vs 3 Latin: "zh" before, flips to "en" after replacing
    cands = translate_words("俄罗斯 x y z", zh_table, config=cfg, vocab=vocab)
    assert cands == []


def test_translate_budget_two_per_sentence(vocab, zh_table):
    cfg = _cfg(enabled_ops=("Translate",))
    sentence = "俄罗斯与美国与法国的关系非常复杂需要深入研究分析讨论。"
    result = abstract_sentence(sentence, cfg, table=zh_table, vocab=vocab)
    accepted = [e for e in result.trace if e.op.kind == "Translate"]
    assert len(accepted) == zh_table.max_words_per_sentence == 2
    assert detect_language(result.abstracted) == "zh"
