"""Exception types shared across the package."""


class RwkvLabError(Exception):
    """Base class for every error this package raises deliberately."""


class EmptyInputError(RwkvLabError):
    """An operation received an empty sequence it cannot define a result for."""


class ShapeError(RwkvLabError):
    """Operand dimensions are inconsistent with each other or with the contract."""


class DegenerateInputError(RwkvLabError):
    """Input is valid but makes the requested statistic undefined (e.g. constant data)."""


class ZeroVectorError(RwkvLabError):
    """A zero-norm vector reached an operation that needs a direction."""


class DomainError(RwkvLabError):
    """A value lies outside the mathematical domain of the operation."""


class SizeLimitError(RwkvLabError):
    """Input exceeds the desk-scale size this package supports."""


class ConfigError(RwkvLabError):
    """Invalid or inconsistent configuration."""


class VocabError(RwkvLabError):
    """Token id outside the model vocabulary."""


class UnsupportedError(RwkvLabError):
    """The requested feature is switched off in the current configuration."""


class FormatError(RwkvLabError):
    """A text input does not follow its declared format.

    Carries the 1-based line number when the offending line is known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class VersionError(RwkvLabError):
    """A serialized stream declares a format version this code does not read."""


class ParseError(RwkvLabError):
    """A serialized stream is truncated or corrupted."""
