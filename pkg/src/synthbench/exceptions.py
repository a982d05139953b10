"""Exception hierarchy.

The CLI maps :class:`ConfigError` to exit code 2 and :class:`DataError` to
exit code 3.
"""


class SynthBenchError(Exception):
    """Base class for all errors raised by synthbench."""


class ConfigError(SynthBenchError, ValueError):
    """Invalid configuration, option, or argument combination."""


class DataError(SynthBenchError, ValueError):
    """Input data violates a precondition."""


class ParseError(DataError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UndefinedInputError(DataError):
    """The requested quantity is undefined for the given input (e.g. N=0)."""


class VocabularyMismatchError(DataError):
    """Two matrices that must share a vocabulary do not."""


class SeparationError(DataError):
    """Logistic fit is degenerate: single-class outcome or complete separation."""
