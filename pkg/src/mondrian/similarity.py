"""Similarity providers used to gate abstraction candidates.

Four interchangeable providers score how close a candidate stays to the
original sentence: a remote embedding service speaking the /embed
protocol, a local bag-of-subword-tokens cosine, exact string match, and
a constant-one extremal double.
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass

import httpx

from .errors import (
    DimensionMismatchError,
    MalformedResponseError,
    ProviderUnavailableError,
    ZeroVectorError,
)
from .tokenizer import encode, get_vocabulary, load_vocabulary

PROVIDER_KINDS = ("RemoteEmbedding", "LocalBagOfTokens", "ExactMatch", "AlwaysOne")


@dataclass(frozen=True)
class SimilarityProviderSpec:
    """Declarative provider choice; endpoint only for RemoteEmbedding."""

    kind: str = "LocalBagOfTokens"
    endpoint: str | None = None
    vocab_ref: str | None = "cl100k_base"

    def __post_init__(self):
        if self.kind not in PROVIDER_KINDS:
            raise ValueError(f"unknown provider kind: {self.kind!r}")
        if self.kind == "RemoteEmbedding" and not self.endpoint:
            raise ValueError("RemoteEmbedding requires an endpoint")
        if self.kind != "RemoteEmbedding" and self.endpoint:
            raise ValueError(f"{self.kind} forbids an endpoint")


def _clamp(score):
    return max(-1.0, min(1.0, float(score)))


def cosine(u, v):
    """dot(u, v) / (|u| |v|), clamped to [-1, 1]."""
    if len(u) != len(v):
        raise DimensionMismatchError(f"dimensions differ: {len(u)} vs {len(v)}")
    dot = 0.0
    norm_u = 0.0
    norm_v = 0.0
    for a, b in zip(u, v):
        dot += a * b
        norm_u += a * a
        norm_v += b * b
    if norm_u == 0.0 or norm_v == 0.0:
        raise ZeroVectorError("cosine of an all-zero vector")
    return _clamp(dot / math.sqrt(norm_u * norm_v))


class ExactMatch:
    """1 for identical strings, 0 otherwise."""

    def similarity(self, a, b):
        return 1.0 if a == b else 0.0


class AlwaysOne:
    """Constant 1; admits every candidate (extremal test double)."""

    def similarity(self, a, b):
        return 1.0


class LocalBagOfTokens:
    """Cosine of subword-token count vectors under a fixed vocabulary.

    Whitespace-only tokens are dropped from the vector so spacing
    changes cost nothing; permutations of the same content tokens score
    1.  Deterministic and fully local.
    """

    def __init__(self, vocab):
        self.vocab = vocab
        self._counts_cache = {}
        self._lock = threading.Lock()

    def _counts(self, text):
        with self._lock:
            cached = self._counts_cache.get(text)
        if cached is not None:
            return cached
        decoder = self.vocab._decoder
        counts = Counter(
            token
            for token in encode(self.vocab, text).ids
            if decoder[token].strip()
        )
        norm = math.sqrt(sum(c * c for c in counts.values()))
        entry = (counts, norm)
        with self._lock:
            self._counts_cache[text] = entry
        return entry

    def similarity(self, a, b):
        counts_a, norm_a = self._counts(a)
        counts_b, norm_b = self._counts(b)
        if not counts_a and not counts_b:
            return 1.0
        if not counts_a or not counts_b:
            return 0.0
        if len(counts_b) < len(counts_a):
            counts_a, counts_b = counts_b, counts_a
        dot = sum(count * counts_b.get(token, 0) for token, count in counts_a.items())
        return _clamp(dot / (norm_a * norm_b))


def embed_remote(endpoint, texts, *, client=None, timeout=10.0):
    """POST texts to an /embed endpoint and return one vector per text.

    Raises ProviderUnavailableError when the service cannot answer and
    MalformedResponseError when the reply violates the protocol.
    """
    texts = list(texts)
    if not texts:
        return []
    close_after = client is None
    if client is None:
        client = httpx.Client(timeout=timeout)
    try:
        try:
            response = client.post(endpoint, json={"texts": texts}, timeout=timeout)
        except httpx.HTTPError as err:
            raise ProviderUnavailableError(f"embedding request failed: {err}") from err
        if response.status_code >= 500:
            raise ProviderUnavailableError(
                f"embedding service returned {response.status_code}"
            )
        if response.status_code != 200:
            raise MalformedResponseError(
                f"unexpected status {response.status_code}: {response.text[:200]}"
            )
        try:
            payload = response.json()
        except ValueError as err:
            raise MalformedResponseError("response body is not JSON") from err
    finally:
        if close_after:
            client.close()
    if not isinstance(payload, dict):
        raise MalformedResponseError("response is not a JSON object")
    dim = payload.get("dim")
    vectors = payload.get("embeddings")
    if not isinstance(dim, int) or not isinstance(vectors, list):
        raise MalformedResponseError("response missing dim or embeddings")
    if len(vectors) != len(texts):
        raise MalformedResponseError(
            f"expected {len(texts)} vectors, got {len(vectors)}"
        )
    for vector in vectors:
        if not isinstance(vector, list) or len(vector) != dim:
            raise MalformedResponseError("embedding dimension mismatch")
    return vectors


class RemoteEmbedding:
    """Similarity via a remote /embed service, with a per-text cache.

    In-flight requests are bounded by a semaphore so concurrent callers
    cannot stampede the service.
    """

    def __init__(self, endpoint, *, client=None, timeout=10.0, max_in_flight=8):
        self.endpoint = endpoint
        self.timeout = timeout
        self._client = client
        self._cache = {}
        self._lock = threading.Lock()
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _embed(self, texts):
        with self._lock:
            missing = [t for t in texts if t not in self._cache]
        if missing:
            with self._slots:
                vectors = embed_remote(
                    self.endpoint, missing, client=self._client, timeout=self.timeout
                )
            with self._lock:
                for text, vector in zip(missing, vectors):
                    self._cache[text] = vector
        with self._lock:
            return [self._cache[t] for t in texts]

    def similarity(self, a, b):
        if a == b:
            return 1.0
        va, vb = self._embed([a, b])
        return cosine(va, vb)


def similarity(provider, a, b):
    """Score two strings with a provider; result clamped to [-1, 1]."""
    return _clamp(provider.similarity(a, b))


def build_provider(spec, *, client=None):
    """Instantiate the provider a SimilarityProviderSpec describes."""
    if spec.kind == "ExactMatch":
        return ExactMatch()
    if spec.kind == "AlwaysOne":
        return AlwaysOne()
    if spec.kind == "LocalBagOfTokens":
        return LocalBagOfTokens(_resolve_vocab(spec.vocab_ref or "cl100k_base"))
    return RemoteEmbedding(spec.endpoint, client=client)


def _resolve_vocab(ref):
    if ref == "cl100k_base":
        return get_vocabulary(ref)
    return load_vocabulary(ref)
