"""Similarity provider tests: cosine, bag-of-tokens, remote client."""

import json
import math
from pathlib import Path

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mondrian.errors import (
    DimensionMismatchError,
    MalformedResponseError,
    ProviderUnavailableError,
    ZeroVectorError,
)
from mondrian.similarity import (
    AlwaysOne,
    ExactMatch,
    LocalBagOfTokens,
    RemoteEmbedding,
    SimilarityProviderSpec,
    build_provider,
    cosine,
    embed_remote,
    similarity,
)
from mondrian.tokenizer import get_vocabulary, load_vocabulary


@pytest.fixture(scope="module")
def bag():
    return LocalBagOfTokens(get_vocabulary("cl100k_base"))


def test_cosine_identical():
    assert cosine([1.0, 0.0], [1.0, 0.0]) == 1.0


def test_cosine_orthogonal():
    assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0


def test_cosine_scale_invariant():
    u = [1.0, 2.0, 3.0]
    v = [5.0, 10.0, 15.0]
    assert cosine(u, v) == pytest.approx(1.0, abs=1e-12)


def test_cosine_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        cosine([1.0], [1.0, 2.0])


def test_cosine_zero_vector():
    with pytest.raises(ZeroVectorError):
        cosine([0.0, 0.0], [1.0, 0.0])


def test_exact_match():
    provider = ExactMatch()
    assert similarity(provider, "x", "x") == 1.0
    assert similarity(provider, "x", "y") == 0.0


def test_always_one():
    provider = AlwaysOne()
    assert similarity(provider, "anything", "else entirely") == 1.0


def test_bag_hand_computed(bag):
    # "a b c" vs "a b": shared mass 2, norms sqrt(3) and sqrt(2)
    expected = 2 / (math.sqrt(3) * math.sqrt(2))
    assert similarity(bag, "a b c", "a b") == pytest.approx(expected, abs=1e-12)


@pytest.fixture(scope="module")
def word_bag():
    # mini rank file with a pattern that makes each word its own piece
    path = Path(__file__).parent / "fixtures" / "mini.ranks"
    return LocalBagOfTokens(load_vocabulary(path, name="mini-words", pattern=r"\S+|\s+"))


def test_word_bag_hand_computed(word_bag):
    expected = 2 / (math.sqrt(3) * math.sqrt(2))
    assert similarity(word_bag, "a b c", "a b") == pytest.approx(expected, abs=1e-12)


def test_bag_order_blind(word_bag):
    assert similarity(word_bag, "a b", "b a") == pytest.approx(1.0, abs=1e-12)


def test_bag_whitespace_costless(bag):
    assert similarity(bag, "a b", "a  b") == pytest.approx(1.0, abs=1e-12)


def test_bag_empty_cases(bag):
    assert similarity(bag, "", "") == 1.0
    assert similarity(bag, "   ", " ") == 1.0
    assert similarity(bag, "", "words") == 0.0


@given(st.text(max_size=40), st.text(max_size=40))
@settings(max_examples=120, deadline=None)
def test_provider_symmetry(a, b):
    bag = LocalBagOfTokens(get_vocabulary("cl100k_base"))
    for provider in [ExactMatch(), AlwaysOne(), bag]:
        left = similarity(provider, a, b)
        right = similarity(provider, b, a)
        assert left == pytest.approx(right, abs=1e-12)
        assert -1.0 <= left <= 1.0


@given(st.text(max_size=40))
@settings(max_examples=120, deadline=None)
def test_provider_self_similarity(a):
    bag = LocalBagOfTokens(get_vocabulary("cl100k_base"))
    for provider in [ExactMatch(), AlwaysOne(), bag]:
        assert similarity(provider, a, a) >= 1.0 - 1e-6


def _transport(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


def _ok_handler(request):
    texts = json.loads(request.content)["texts"]
    vectors = []
    for text in texts:
        raw = [float(len(text) + 1), 1.0, float(sum(text.encode()) % 7 + 1)]
        norm = math.sqrt(sum(x * x for x in raw))
        vectors.append([x / norm for x in raw])
    return httpx.Response(200, json={"dim": 3, "embeddings": vectors})


def test_embed_remote_round_trip():
    client = _transport(_ok_handler)
    vectors = embed_remote("http://svc/embed", ["one", "two"], client=client)
    assert len(vectors) == 2
    for vector in vectors:
        assert len(vector) == 3
        assert math.sqrt(sum(x * x for x in vector)) == pytest.approx(1.0, abs=1e-4)


def test_embed_remote_empty_no_call():
    def handler(request):
        raise AssertionError("should not be called")

    assert embed_remote("http://svc/embed", [], client=_transport(handler)) == []


def test_embed_remote_unavailable():
    def handler(request):
        return httpx.Response(503, json={"error": "warming up"})

    with pytest.raises(ProviderUnavailableError):
        embed_remote("http://svc/embed", ["x"], client=_transport(handler))


def test_embed_remote_network_error():
    def handler(request):
        raise httpx.ConnectError("refused")

    with pytest.raises(ProviderUnavailableError):
        embed_remote("http://svc/embed", ["x"], client=_transport(handler))


def test_embed_remote_malformed_shape():
    def handler(request):
        return httpx.Response(200, json={"dim": 3, "embeddings": [[1.0, 0.0]]})

    with pytest.raises(MalformedResponseError):
        embed_remote("http://svc/embed", ["x"], client=_transport(handler))


def test_embed_remote_wrong_count():
    def handler(request):
        return httpx.Response(200, json={"dim": 2, "embeddings": []})

    with pytest.raises(MalformedResponseError):
        embed_remote("http://svc/embed", ["x"], client=_transport(handler))


def test_remote_provider_caches():
    calls = []

    def handler(request):
        calls.append(json.loads(request.content)["texts"])
        return _ok_handler(request)

    provider = RemoteEmbedding("http://svc/embed", client=_transport(handler))
    first = provider.similarity("alpha beta", "alpha")
    second = provider.similarity("alpha beta", "alpha")
    assert first == pytest.approx(second, abs=1e-12)
    assert sum(len(batch) for batch in calls) == 2


def test_remote_provider_self_short_circuit():
    def handler(request):
        raise AssertionError("identical strings need no embedding")

    provider = RemoteEmbedding("http://svc/embed", client=_transport(handler))
    assert provider.similarity("same", "same") == 1.0


def test_spec_validation():
    with pytest.raises(ValueError):
        SimilarityProviderSpec(kind="RemoteEmbedding")
    with pytest.raises(ValueError):
        SimilarityProviderSpec(kind="ExactMatch", endpoint="http://x")
    with pytest.raises(ValueError):
        SimilarityProviderSpec(kind="Fancy")


def test_build_provider_kinds():
    assert isinstance(build_provider(SimilarityProviderSpec(kind="ExactMatch")), ExactMatch)
    assert isinstance(build_provider(SimilarityProviderSpec(kind="AlwaysOne")), AlwaysOne)
    assert isinstance(
        build_provider(SimilarityProviderSpec(kind="LocalBagOfTokens")), LocalBagOfTokens
    )
    remote = build_provider(
        SimilarityProviderSpec(kind="RemoteEmbedding", endpoint="http://svc/embed")
    )
    assert isinstance(remote, RemoteEmbedding)
