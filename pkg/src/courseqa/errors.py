"""Exception hierarchy shared across the package.

Every error raised by courseqa code derives from CourseQAError so callers
can catch the whole family at a service boundary.
"""


class CourseQAError(Exception):
    """Base class for all courseqa errors."""


class InputError(CourseQAError):
    """Caller supplied invalid arguments (empty text, bad dimensions, ...)."""


class ConfigError(CourseQAError):
    """Invalid configuration value or missing configured path."""


class ProviderError(CourseQAError):
    """An embedding/completion backend failed after exhausting retries."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class ManifestError(CourseQAError):
    """Corpus manifest is malformed (duplicate ids, bad fields)."""


class IngestError(CourseQAError):
    """A referenced corpus file could not be read."""


class IndexFormatError(CourseQAError):
    """Serialized index is corrupt; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class OntologyError(CourseQAError):
    """Ontology file failed to parse or contained no triples."""


class VerdictParseError(CourseQAError):
    """Verifier output did not conform to the JSON verdict contract."""


class ValidationUnavailableError(CourseQAError):
    """The verifier failed twice in a row; the pipeline must fail closed."""


class GenerationError(CourseQAError):
    """Answer generation failed (provider outage or empty completion)."""


class AuthError(CourseQAError):
    """Bad credentials or invalid/expired token."""


class ConflictError(CourseQAError):
    """Uniqueness violation (duplicate login)."""


class NotFoundError(CourseQAError):
    """Referenced entity does not exist."""


class SequencingError(CourseQAError):
    """Interaction turn_index is not strictly increasing within its session."""
