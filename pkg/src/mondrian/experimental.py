"""Fragment and Translate candidate generators.

Fragmentize drops trailing subword tokens of a multi-token word when an
oracle judges the word recoverable from the kept prefix.  Translate
swaps words for cheaper foreign-language equivalents while keeping the
sentence's detected language stable.
"""

from __future__ import annotations

import bisect
import gzip
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import httpx

from .errors import LexiconParseError, MissingFileError, OracleUnavailableError
from .tokenizer import count_tokens, encode

_DATA_DIR = Path(__file__).resolve().parent / "data"

ORACLE_KINDS = ("RemoteMaskedLM", "PrefixDictionary", "AcceptAll")


@dataclass(frozen=True)
class RecoverabilityOracleSpec:
    """Declarative choice of fragment-acceptance oracle."""

    kind: str = "PrefixDictionary"
    endpoint: str | None = None
    top_k: int = 503
    dictionary_ref: str | None = None

    def __post_init__(self):
        if self.kind not in ORACLE_KINDS:
            raise ValueError(f"unknown oracle kind: {self.kind!r}")
        if self.kind == "RemoteMaskedLM" and not self.endpoint:
            raise ValueError("RemoteMaskedLM requires an endpoint")
        if self.kind == "PrefixDictionary" and not self.dictionary_ref:
            raise ValueError("PrefixDictionary requires a dictionary_ref")
        if self.top_k < 1:
            raise ValueError("top_k must be positive")


class AcceptAll:
    """Judges every prefix recoverable (extremal double)."""

    def recoverable(self, prefix, word, left="", right=""):
        return True


class PrefixDictionary:
    """Recoverable iff the prefix matches exactly one dictionary word.

    That unique match must be the source word itself, otherwise the
    prefix points a reader at the wrong word.
    """

    def __init__(self, words):
        self.words = sorted({w.strip().lower() for w in words if w.strip()})

    def prefix_matches(self, prefix):
        lo = bisect.bisect_left(self.words, prefix)
        hi = bisect.bisect_left(self.words, prefix + "￿")
        return self.words[lo:hi]

    def recoverable(self, prefix, word, left="", right=""):
        return self.prefix_matches(prefix.lower()) == [word.lower()]


class RemoteMaskedLM:
    """Asks a remote model whether the word survives prefix truncation."""

    def __init__(self, endpoint, *, top_k=503, client=None, timeout=10.0):
        self.endpoint = endpoint
        self.top_k = top_k
        self.timeout = timeout
        self._client = client

    def recoverable(self, prefix, word, left="", right=""):
        payload = {
            "left": left,
            "masked_word_prefix": prefix,
            "right": right,
            "target": word,
            "top_k": self.top_k,
        }
        close_after = self._client is None
        client = self._client or httpx.Client(timeout=self.timeout)
        try:
            try:
                response = client.post(self.endpoint, json=payload, timeout=self.timeout)
            except httpx.HTTPError as err:
                raise OracleUnavailableError(str(err)) from err
        finally:
            if close_after:
                client.close()
        if response.status_code != 200:
            raise OracleUnavailableError(f"oracle returned {response.status_code}")
        try:
            return bool(response.json()["recoverable"])
        except (ValueError, KeyError) as err:
            raise OracleUnavailableError("malformed oracle response") from err


def load_wordlist(path):
    """One lowercase word per line; `#` comments allowed."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt", encoding="utf-8") as handle:
        return [
            line.strip()
            for line in handle
            if line.strip() and not line.startswith("#")
        ]


@lru_cache(maxsize=1)
def bundled_dictionary():
    """The packaged 10k-word prefix dictionary."""
    return PrefixDictionary(load_wordlist(_DATA_DIR / "wordlist_10k.txt"))


def build_oracle(spec, *, client=None):
    """Instantiate the oracle a RecoverabilityOracleSpec describes."""
    if spec.kind == "AcceptAll":
        return AcceptAll()
    if spec.kind == "PrefixDictionary":
        if spec.dictionary_ref == "bundled":
            return bundled_dictionary()
        return PrefixDictionary(load_wordlist(spec.dictionary_ref))
    return RemoteMaskedLM(spec.endpoint, top_k=spec.top_k, client=client)


@dataclass(frozen=True)
class TranslationTable:
    """Word-for-word translation entries with precomputed token deltas."""

    entries: dict[str, tuple[str, int]]
    source_lang: str = "zh"
    target_lang: str = "en"
    max_words_per_sentence: int = 2

    def __post_init__(self):
        if self.max_words_per_sentence < 1:
            raise ValueError("max_words_per_sentence must be >= 1")


def load_translation_table(
    path, vocab, *, source_lang="zh", target_lang="en", max_words_per_sentence=2
):
    """Parse `<source><TAB><target>` TSV; deltas measured under vocab."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(path)
    entries = {}
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise LexiconParseError(path, line_no)
            source, target = parts
            delta = count_tokens(vocab, target) - count_tokens(vocab, source)
            entries[source] = (target, delta)
    return TranslationTable(
        entries=entries,
        source_lang=source_lang,
        target_lang=target_lang,
        max_words_per_sentence=max_words_per_sentence,
    )


def bundled_translation_table(vocab):
    """The packaged zh->en single-word table."""
    return load_translation_table(_DATA_DIR / "zh_en_words.tsv", vocab)


_CJK_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2FA1F),
)


def _is_cjk(char):
    code = ord(char)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def _is_latin(char):
    return char.isascii() and char.isalpha()


def detect_language(text):
    """Weighted script vote: CJK scalars count double; ties go to "en"."""
    cjk = sum(1 for c in text if _is_cjk(c))
    latin = sum(1 for c in text if _is_latin(c))
    return "zh" if 2 * cjk > latin else "en"


def _objective(text, config, vocab):
    from .engine import objective_score

    return objective_score(text, config, vocab)


def fragment_candidates(words, oracle, vocab, config):
    """Fragment candidates for a word list; see fragmentize()."""
    from .engine import Candidate, EditOp

    words = list(words)
    base = _objective(" ".join(words), config, vocab)
    out = []
    for i, word in enumerate(words):
        seq = encode(vocab, word)
        if len(seq) < 2:
            continue
        source_bytes = word.encode("utf-8")
        for keep in range(1, len(seq)):
            cut = seq.spans[keep - 1][1]
            try:
                prefix = source_bytes[:cut].decode("utf-8")
            except UnicodeDecodeError:
                continue
            if not prefix or prefix == word:
                continue
            left = " ".join(words[:i])
            right = " ".join(words[i + 1 :])
            if not oracle.recoverable(prefix, word, left=left, right=right):
                continue
            kept = words[:i] + [prefix] + words[i + 1 :]
            text = " ".join(kept)
            value = _objective(text, config, vocab)
            if value > base:
                continue
            out.append(
                Candidate(
                    text=text,
                    op=EditOp(kind="Fragment", word_index=i, replacement=prefix),
                    objective_value=value,
                    words=tuple(kept),
                )
            )
    return out


def fragmentize(sentence, oracle, vocab, config):
    """All prefix-truncation candidates for a sentence."""
    from .engine import word_tokenize

    return fragment_candidates(word_tokenize(sentence), oracle, vocab, config)


def translate_candidates(words, table, config, vocab, detector=detect_language):
    """Translate candidates for a word list; see translate_words()."""
    from .engine import Candidate, EditOp

    words = list(words)
    sentence = " ".join(words)
    if detector(sentence) != table.source_lang:
        return []
    out = []
    for i, word in enumerate(words):
        for source, (target, delta) in table.entries.items():
            if delta >= 0:
                continue
            if word == source:
                replacement = target
            elif all(_is_cjk(c) for c in source) and source in word:
                replacement = word.replace(source, target, 1)
            else:
                continue
            kept = words[:i] + [replacement] + words[i + 1 :]
            text = " ".join(kept)
            if detector(text) != table.source_lang:
                continue
            out.append(
                Candidate(
                    text=text,
                    op=EditOp(kind="Translate", word_index=i, replacement=replacement),
                    objective_value=_objective(text, config, vocab),
                    words=tuple(kept),
                )
            )
    return out


def translate_words(sentence, table, detector=detect_language, config=None, *, vocab=None):
    """All word-translation candidates for a sentence."""
    from .engine import AbstractionConfig, resolve_vocab, word_tokenize

    config = config or AbstractionConfig(
        enabled_ops=("Delete", "Translate"), alpha=0.0
    )
    vocab = vocab or resolve_vocab(config.vocab)
    return translate_candidates(word_tokenize(sentence), table, config, vocab, detector)
