"""Embedding backends.

The primary backend wraps a pretrained sentence-transformers model.
When the model cannot be loaded (no cached weights, no network) the
service degrades to a deterministic hashed bag-of-words embedder so the
/embed contract keeps working offline.  The fallback knows nothing
about synonyms; it only preserves the contract properties: unit norm,
per-process determinism, and a fixed dimension.
"""

import hashlib
import math
import re

from .config import FALLBACK_MODEL

_WORD = re.compile(r"[a-z0-9']+")

# Function words carry little meaning; the fallback down-weights them so
# dropping one moves the vector far less than dropping a content word.
_STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are as at be
    because been before being below between both but by can cannot could
    did do does doing down during each few for from further had has have
    having he her here hers herself him himself his how i if in into is
    it its itself just me more most my myself no nor not now of off on
    once only or other our ours ourselves out over own please same she
    should so some such than that the their theirs them themselves then
    there these they this those through to too under until up very was
    we were what when where which while who whom why will with would you
    your yours yourself yourselves
    """.split()
)

STOPWORD_WEIGHT = 0.35


class HashedWordEmbedder:
    """Deterministic signed-hash embedding of down-weighted word bags."""

    def __init__(self, dim=768):
        self.name = FALLBACK_MODEL
        self.dim = dim

    def _features(self, text):
        words = _WORD.findall(text.lower())
        if not words:
            return ["\x00empty"]
        return words

    def encode(self, texts):
        out = []
        for text in texts:
            vector = [0.0] * self.dim
            for word in self._features(text):
                digest = hashlib.sha256(word.encode("utf-8")).digest()
                index = int.from_bytes(digest[:4], "big") % self.dim
                sign = 1.0 if digest[4] & 1 else -1.0
                weight = STOPWORD_WEIGHT if word in _STOPWORDS else 1.0
                vector[index] += sign * weight
            norm = math.sqrt(sum(v * v for v in vector))
            if norm == 0.0:
                vector[0] = 1.0
            else:
                vector = [v / norm for v in vector]
            out.append(vector)
        return out


class SentenceModelEmbedder:
    """Wraps a sentence-transformers model; vectors L2-normalized."""

    def __init__(self, model_name):
        from sentence_transformers import SentenceTransformer

        self.name = model_name
        self._model = SentenceTransformer(model_name, local_files_only=True)
        self.dim = self._model.get_sentence_embedding_dimension()

    def encode(self, texts):
        vectors = self._model.encode(
            list(texts), normalize_embeddings=True, show_progress_bar=False
        )
        return [list(map(float, vector)) for vector in vectors]


def load_embedder(model_name):
    """Best backend for the requested model, falling back to hashing."""
    if model_name == FALLBACK_MODEL:
        return HashedWordEmbedder()
    try:
        return SentenceModelEmbedder(model_name)
    except Exception:
        return HashedWordEmbedder()
