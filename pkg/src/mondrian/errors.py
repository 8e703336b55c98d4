"""Exception types shared across the package."""


class MondrianError(Exception):
    """Base class for all errors raised by this package."""


class VocabularyError(MondrianError):
    """A rank table failed validation."""


class MalformedLineError(VocabularyError):
    """A rank file line did not parse as `<base64> <rank>`."""

    def __init__(self, path, line_no, line):
        self.path = str(path)
        self.line_no = line_no
        self.line = line
        super().__init__(f"{self.path}:{line_no}: malformed rank line: {line!r}")


class DuplicateEntryError(VocabularyError):
    """A byte sequence or a rank appeared twice in a rank file."""


class ByteCoverageError(VocabularyError):
    """A rank table does not assign a rank to every single byte."""


class UnknownTokenIdError(MondrianError):
    """decode() was given an id outside the vocabulary."""

    def __init__(self, token_id):
        self.token_id = token_id
        super().__init__(f"unknown token id: {token_id}")


class LexiconError(MondrianError):
    """A lexicon file is missing or failed to parse."""


class MissingFileError(LexiconError):
    """A required lexicon data file is absent."""

    def __init__(self, name):
        self.name = str(name)
        super().__init__(f"missing lexicon file: {self.name}")


class LexiconParseError(LexiconError):
    """A lexicon data file line did not match the expected format."""

    def __init__(self, path, line_no, detail=""):
        self.path = str(path)
        self.line_no = line_no
        message = f"{self.path}:{line_no}: cannot parse lexicon line"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class SimilarityError(MondrianError):
    """Base class for similarity provider failures."""


class ProviderUnavailableError(SimilarityError):
    """A similarity provider could not produce a score.

    The engine treats this as a signal to return the query unchanged
    rather than ship an ungated rewrite.
    """


class MalformedResponseError(SimilarityError):
    """A remote embedding response violated the wire contract."""


class DimensionMismatchError(SimilarityError):
    """Two vectors given to cosine() have different lengths."""


class ZeroVectorError(SimilarityError):
    """cosine() was given an all-zero vector."""


class OracleUnavailableError(MondrianError):
    """A fragment-acceptance oracle has no dictionary to consult."""


class ConfigError(MondrianError):
    """A runtime configuration file is invalid."""


class TemplateError(MondrianError):
    """A template could not be rendered."""


class MissingFieldError(TemplateError):
    """A template referenced a field the sample does not provide."""

    def __init__(self, field, sample_id=None):
        self.field = field
        self.sample_id = sample_id
        where = f" in sample {sample_id!r}" if sample_id else ""
        super().__init__(f"missing template field {field!r}{where}")


class LengthMismatchError(MondrianError):
    """Two parallel output lists have different lengths."""


class LedgerError(MondrianError):
    """A cost ledger file contains a record that does not parse."""


class UpstreamTimeoutError(MondrianError):
    """The upstream API did not answer within the configured timeout."""
