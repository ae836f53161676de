"""Shared exception types."""

from __future__ import annotations


class CorpusctlError(Exception):
    """Base class for all corpusctl errors."""


class ParseError(CorpusctlError):
    """Malformed input; carries a line number when one is known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(CorpusctlError):
    """Input parsed but violates a documented invariant."""


class ConfigurationError(CorpusctlError):
    """Missing or contradictory configuration."""


class RetriableError(CorpusctlError):
    """Transient failure; the operation may be retried as-is."""
