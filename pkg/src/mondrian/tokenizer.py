"""Byte-level BPE tokenization over plain-text rank tables.

A vocabulary is a mapping from byte sequences to integer ranks.  Encoding
splits text into pieces with a pre-tokenization pattern, then repeatedly
merges the adjacent pair with the lowest rank inside each piece.  Rank
files use one `<base64> <rank>` entry per line and may be gzip-compressed.
"""

from __future__ import annotations

import base64
import gzip
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import regex

from .errors import (
    ByteCoverageError,
    DuplicateEntryError,
    MalformedLineError,
    UnknownTokenIdError,
    VocabularyError,
)

# Pre-tokenization pattern and reserved control ids for the bundled
# production vocabulary (cl100k_base rank table).
CL100K_PATTERN = (
    r"(?i:'s|'t|'re|'ve|'m|'ll|'d)"
    r"|[^\r\n\p{L}\p{N}]?\p{L}+"
    r"|\p{N}{1,3}"
    r"| ?[^\s\p{L}\p{N}]+[\r\n]*"
    r"|\s*[\r\n]+"
    r"|\s+(?!\S)"
    r"|\s+"
)

CL100K_SPECIAL_TOKENS = {
    "<|endoftext|>": 100257,
    "<|fim_prefix|>": 100258,
    "<|fim_middle|>": 100259,
    "<|fim_suffix|>": 100260,
    "<|endofprompt|>": 100276,
}

_DATA_DIR = Path(__file__).resolve().parent / "data"


@dataclass(eq=False)
class Vocabulary:
    """An immutable rank table plus its pre-tokenization pattern.

    Instances hash by identity so encoded pieces can be memoized per
    vocabulary.
    """

    name: str
    ranks: dict[bytes, int]
    pattern: str | None = None
    special_tokens: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        decoder = {}
        for seq, rank in self.ranks.items():
            if rank in decoder:
                raise DuplicateEntryError(
                    f"{self.name}: rank {rank} assigned to two byte sequences"
                )
            decoder[rank] = seq
        for text, rank in self.special_tokens.items():
            if rank in decoder:
                raise DuplicateEntryError(
                    f"{self.name}: special token {text!r} reuses rank {rank}"
                )
            decoder[rank] = text.encode("utf-8")
        missing = sum(1 for b in range(256) if bytes([b]) not in self.ranks)
        if missing:
            raise ByteCoverageError(
                f"{self.name}: {missing} single bytes have no rank"
            )
        self._decoder = decoder
        self._compiled = regex.compile(self.pattern) if self.pattern else None

    def __len__(self):
        return len(self.ranks)


@dataclass(frozen=True)
class TokenSequence:
    """Encoder output: token ids plus the byte span each id covers.

    Spans are half-open offsets into the UTF-8 encoding of `text` and
    tile it exactly, in order.
    """

    ids: tuple[int, ...]
    spans: tuple[tuple[int, int], ...]
    text: str

    def __len__(self):
        return len(self.ids)


def load_vocabulary(path, *, name=None, pattern=None, special_tokens=None):
    """Parse a rank file (optionally gzipped) into a Vocabulary.

    Raises MalformedLineError, DuplicateEntryError or ByteCoverageError
    when the file violates the format.
    """
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    ranks = {}
    with opener(path, "rb") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2:
                raise MalformedLineError(path, line_no, raw.decode("utf-8", "replace"))
            try:
                seq = base64.b64decode(fields[0], validate=True)
                rank = int(fields[1])
            except (ValueError, base64.binascii.Error):
                raise MalformedLineError(
                    path, line_no, raw.decode("utf-8", "replace")
                ) from None
            if rank < 0:
                raise MalformedLineError(path, line_no, raw.decode("utf-8", "replace"))
            if seq in ranks:
                raise DuplicateEntryError(
                    f"{path}:{line_no}: byte sequence listed twice: {seq!r}"
                )
            ranks[seq] = rank
    return Vocabulary(
        name=name or path.name,
        ranks=ranks,
        pattern=pattern,
        special_tokens=dict(special_tokens or {}),
    )


@lru_cache(maxsize=None)
def get_vocabulary(name="cl100k_base"):
    """Return a bundled vocabulary by name, loading it once per process."""
    if name != "cl100k_base":
        raise VocabularyError(f"no bundled vocabulary named {name!r}")
    return load_vocabulary(
        _DATA_DIR / "cl100k_base.ranks.gz",
        name=name,
        pattern=CL100K_PATTERN,
        special_tokens=CL100K_SPECIAL_TOKENS,
    )


def _merge(ranks, piece):
    """Split a byte string into vocabulary entries by lowest-rank merging."""
    parts = [piece[i : i + 1] for i in range(len(piece))]
    while len(parts) > 1:
        best_rank = None
        best_i = 0
        for i in range(len(parts) - 1):
            rank = ranks.get(parts[i] + parts[i + 1])
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank = rank
                best_i = i
        if best_rank is None:
            break
        parts[best_i : best_i + 2] = [parts[best_i] + parts[best_i + 1]]
    return parts


@lru_cache(maxsize=262144)
def _encode_piece(vocab, piece):
    """Token (id, byte_length) pairs for one pre-tokenized piece."""
    whole = vocab.ranks.get(piece)
    if whole is not None:
        return ((whole, len(piece)),)
    return tuple((vocab.ranks[part], len(part)) for part in _merge(vocab.ranks, piece))


def _pieces(vocab, text):
    """Pre-tokenized pieces covering the whole text, gaps included."""
    if vocab._compiled is None:
        return [text] if text else []
    pieces = []
    cursor = 0
    for match in vocab._compiled.finditer(text):
        if match.start() > cursor:
            pieces.append(text[cursor : match.start()])
        pieces.append(match.group())
        cursor = match.end()
    if cursor < len(text):
        pieces.append(text[cursor:])
    return pieces


def encode(vocab, text):
    """Encode text into a TokenSequence.

    Special token strings in the input are treated as ordinary text and
    never mapped to their reserved ids.
    """
    ids = []
    spans = []
    offset = 0
    for piece in _pieces(vocab, text):
        for token_id, length in _encode_piece(vocab, piece.encode("utf-8")):
            ids.append(token_id)
            spans.append((offset, offset + length))
            offset += length
    return TokenSequence(ids=tuple(ids), spans=tuple(spans), text=text)


def decode(vocab, tokens):
    """Invert encode: map ids back to bytes and join.

    Accepts a TokenSequence or any iterable of ids.  Raises
    UnknownTokenIdError for ids outside the vocabulary.  Byte sequences
    that are not valid UTF-8 decode with replacement characters.
    """
    if isinstance(tokens, TokenSequence):
        tokens = tokens.ids
    chunks = []
    for token_id in tokens:
        seq = vocab._decoder.get(token_id)
        if seq is None:
            raise UnknownTokenIdError(token_id)
        chunks.append(seq)
    return b"".join(chunks).decode("utf-8", "replace")


def count_tokens(vocab, text):
    """Number of tokens `text` encodes to under `vocab`."""
    return len(encode(vocab, text))


def count_chars(text):
    """Number of Unicode code points in `text`."""
    return len(text)
