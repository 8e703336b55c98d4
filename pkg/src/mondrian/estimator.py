"""Scikit-learn style wrapper around the abstraction engine.

PromptAbstractor is a stateless-in-data transformer: fit() only
validates parameters and resolves shared resources (vocabulary,
lexicon, similarity provider), transform() maps an iterable of query
strings to their abstracted forms.  It composes with Pipeline and
clone() like any other estimator.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .engine import AbstractionConfig, Query, abstract_query, resolve_vocab
from .lexicon import bundled_lexicon
from .similarity import PROVIDER_KINDS, SimilarityProviderSpec, build_provider


def check_text_iterable(X):
    """Materialize X as a list of strings, rejecting anything else.

    A bare string is almost always a mistake (it would iterate over
    characters), so it is rejected outright.
    """
    if isinstance(X, (str, bytes)):
        raise ValueError(
            "expected an iterable of query strings, got a single string; "
            "wrap it in a list"
        )
    items = list(X)
    for position, item in enumerate(items):
        if isinstance(item, Query):
            continue
        if not isinstance(item, str):
            raise TypeError(
                f"queries must be strings, item {position} is "
                f"{type(item).__name__}"
            )
    return items


def _provider_spec(provider):
    if isinstance(provider, SimilarityProviderSpec):
        return provider
    if isinstance(provider, str):
        if provider not in PROVIDER_KINDS:
            raise ValueError(f"unknown similarity provider kind: {provider!r}")
        return SimilarityProviderSpec(kind=provider)
    return None


class PromptAbstractor(BaseEstimator, TransformerMixin):
    """Shortens prompts while keeping similarity above a floor.

    Parameters mirror AbstractionConfig; provider may be a kind name, a
    SimilarityProviderSpec, or a ready provider object with a
    similarity(a, b) method.  predict() is an alias for transform() so
    the estimator also slots into predict-shaped harnesses.
    """

    def __init__(
        self,
        alpha=0.99,
        objective="TokenLength",
        enabled_ops=("Delete", "Transform"),
        max_iterations_per_sentence=128,
        split_sentences=True,
        provider="LocalBagOfTokens",
        vocab="cl100k_base",
    ):
        self.alpha = alpha
        self.objective = objective
        self.enabled_ops = enabled_ops
        self.max_iterations_per_sentence = max_iterations_per_sentence
        self.split_sentences = split_sentences
        self.provider = provider
        self.vocab = vocab

    def fit(self, X=None, y=None):
        """Validate parameters and resolve shared resources."""
        spec = _provider_spec(self.provider)
        if spec is None and not hasattr(self.provider, "similarity"):
            raise ValueError(
                "provider must be a kind name, a SimilarityProviderSpec, or "
                "an object with a similarity(a, b) method"
            )
        config_kwargs = dict(
            alpha=self.alpha,
            objective=self.objective,
            enabled_ops=tuple(self.enabled_ops),
            max_iterations_per_sentence=self.max_iterations_per_sentence,
            split_sentences=self.split_sentences,
            vocab=self.vocab,
        )
        if spec is not None:
            config_kwargs["provider"] = spec
        self.config_ = AbstractionConfig(**config_kwargs)
        self.vocab_ = resolve_vocab(self.vocab)
        self.provider_ = build_provider(spec) if spec is not None else self.provider
        self.lexicon_ = (
            bundled_lexicon() if "Transform" in self.config_.enabled_ops else None
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "config_"):
            raise NotFittedError(
                "this PromptAbstractor is not fitted yet; call fit() first"
            )

    def describe(self, X):
        """Full per-query abstraction results, traces included."""
        self._check_fitted()
        return [
            abstract_query(
                query,
                self.config_,
                lexicon=self.lexicon_,
                provider=self.provider_,
                vocab=self.vocab_,
            )
            for query in check_text_iterable(X)
        ]

    def transform(self, X):
        """Abstracted text for each query, in input order."""
        return [result.abstracted for result in self.describe(X)]

    def predict(self, X):
        return self.transform(X)
