"""Exception hierarchy shared across the toolkit.

Exit-code mapping at the CLI: ValidationError -> 1, TransportError -> 2.
"""


class FablemtError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FablemtError):
    """Bad input data, config, or arguments."""


class SchemaError(ValidationError):
    """A record or judge response violates the expected schema."""


class TransportError(FablemtError):
    """An endpoint could not be reached or kept failing after retries."""

    def __init__(self, message, status=None, attempts=None):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class EmptyCompletionError(TransportError):
    """The endpoint answered but the completion text was empty.

    Kept distinct from other transport failures so callers can regenerate.
    """
