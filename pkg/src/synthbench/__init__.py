"""Fidelity, utility and privacy evaluation for synthetic binary phenotype data."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConfigError,
    DataError,
    ParseError,
    SeparationError,
    SynthBenchError,
    UndefinedInputError,
    VocabularyMismatchError,
)

__all__ = [
    "ConfigError",
    "DataError",
    "ParseError",
    "SeparationError",
    "SynthBenchError",
    "UndefinedInputError",
    "VocabularyMismatchError",
    "__version__",
]
