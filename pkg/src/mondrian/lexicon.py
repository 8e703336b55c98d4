"""Synonym and abbreviation lookups backing the Transform operation.

Synonyms come from WordNet-format database files (`index.<pos>` and
`data.<pos>` for noun/verb/adj/adv, plain or gzipped).  Abbreviations
come from a TSV table of `<phrase><TAB><short form>` lines.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .errors import LexiconParseError, MissingFileError

_POS_FILES = (("noun", "n"), ("verb", "v"), ("adj", "a"), ("adv", "r"))
_DATA_DIR = Path(__file__).resolve().parent / "data"


@dataclass
class Lexicon:
    """Immutable lemma/synset maps plus an abbreviation table.

    lemma_index maps lowercase lemmas (underscores already turned into
    spaces) to synset identifiers; synsets maps identifiers to lowercase
    member lemmas.
    """

    lemma_index: dict[str, frozenset[str]] = field(default_factory=dict)
    synsets: dict[str, frozenset[str]] = field(default_factory=dict)
    abbreviations: dict[str, str] = field(default_factory=dict)


def _open_text(directory, stem):
    """Open `<stem>` or `<stem>.gz` in directory, whichever exists."""
    plain = directory / stem
    if plain.exists():
        return plain, plain.open("rt", encoding="utf-8")
    compressed = directory / (stem + ".gz")
    if compressed.exists():
        return compressed, gzip.open(compressed, "rt", encoding="utf-8")
    raise MissingFileError(plain)


def _clean_lemma(raw):
    """Normalize a database lemma: markers stripped, spaces, lowercase."""
    word = raw
    if word.endswith(")") and "(" in word:
        word = word[: word.rindex("(")]
    return word.replace("_", " ").lower()


def _parse_index(path, handle, pos_char, lemma_index):
    for line_no, line in enumerate(handle, start=1):
        if line.startswith(" ") or not line.strip():
            continue
        fields = line.split()
        try:
            lemma = _clean_lemma(fields[0])
            synset_cnt = int(fields[2])
            p_cnt = int(fields[3])
            offsets = fields[6 + p_cnt : 6 + p_cnt + synset_cnt]
        except (IndexError, ValueError):
            raise LexiconParseError(path, line_no) from None
        if len(offsets) != synset_cnt:
            raise LexiconParseError(path, line_no, "offset count mismatch")
        ids = frozenset(pos_char + offset for offset in offsets)
        if lemma in lemma_index:
            ids = lemma_index[lemma] | ids
        lemma_index[lemma] = ids


def _parse_data(path, handle, pos_char, synsets):
    for line_no, line in enumerate(handle, start=1):
        if line.startswith(" ") or not line.strip():
            continue
        head = line.split(" | ", 1)[0]
        fields = head.split()
        try:
            offset = fields[0]
            w_cnt = int(fields[3], 16)
            words = [_clean_lemma(fields[4 + 2 * i]) for i in range(w_cnt)]
        except (IndexError, ValueError):
            raise LexiconParseError(path, line_no) from None
        if not words:
            raise LexiconParseError(path, line_no, "empty synset")
        synsets[pos_char + offset] = frozenset(words)


def load_wordnet(directory, abbreviations=None):
    """Build a Lexicon from a WordNet-format database directory.

    Raises MissingFileError when any of the eight part-of-speech files
    is absent and LexiconParseError on malformed lines.  Synset members
    referenced by the index must exist in the data files.
    """
    directory = Path(directory)
    lemma_index = {}
    synsets = {}
    for pos, pos_char in _POS_FILES:
        path, handle = _open_text(directory, f"index.{pos}")
        with handle:
            _parse_index(path, handle, pos_char, lemma_index)
        path, handle = _open_text(directory, f"data.{pos}")
        with handle:
            _parse_data(path, handle, pos_char, synsets)
    for lemma, ids in lemma_index.items():
        for synset_id in ids:
            if synset_id not in synsets:
                raise LexiconParseError(
                    directory / "index.*", 0, f"{lemma!r} references unknown {synset_id}"
                )
    return Lexicon(
        lemma_index=lemma_index,
        synsets=synsets,
        abbreviations=dict(abbreviations or {}),
    )


def load_abbreviations(path):
    """Parse a `<phrase><TAB><short form>` TSV into a lowercase-keyed map."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(path)
    table = {}
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise LexiconParseError(path, line_no)
            table[parts[0].lower()] = parts[1]
    return table


def synonyms(lex, word):
    """All lemmas sharing a synset with `word`, excluding the word itself.

    Lookup is case-insensitive and the returned candidates are lowercase.
    """
    key = word.lower()
    ids = lex.lemma_index.get(key)
    if not ids:
        return set()
    pool = set()
    for synset_id in ids:
        pool.update(lex.synsets.get(synset_id, ()))
    pool.discard(key)
    return pool


def abbreviation_of(lex, phrase):
    """Short form for a phrase, or None; lookup is case-insensitive."""
    return lex.abbreviations.get(phrase.lower())


@lru_cache(maxsize=1)
def bundled_lexicon():
    """The packaged WordNet database plus the packaged abbreviation table."""
    return load_wordnet(
        _DATA_DIR / "wordnet",
        abbreviations=load_abbreviations(_DATA_DIR / "abbreviations.tsv"),
    )
