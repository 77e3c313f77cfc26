"""Exception hierarchy shared across the toolkit."""


class LyricforgeError(Exception):
    """Base class for all toolkit errors."""


class FormatError(LyricforgeError):
    """A file does not conform to one of the interchange formats."""

    def __init__(self, message, *, path=None, line=None):
        self.path = path
        self.line = line
        loc = str(path) if path is not None else ""
        if line is not None:
            loc = f"{loc}:{line}" if loc else f"line {line}"
        super().__init__(f"{loc}: {message}" if loc else message)


class ValidationError(LyricforgeError):
    """An object or argument violates a documented invariant."""


class EmptyDocumentError(ValidationError):
    """A document has no content, or nothing is left after filtering."""


class EmptyInputError(ValidationError):
    """An operation received an empty stream or collection."""


class ConfigError(LyricforgeError):
    """A configuration value is out of range or malformed."""


class DivergenceError(LyricforgeError):
    """Iterative training produced a non-finite loss."""
