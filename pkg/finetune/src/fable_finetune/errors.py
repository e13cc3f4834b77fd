class FinetuneError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(FinetuneError):
    """Invalid inputs, configs, or shape mismatches."""


class DivergenceError(FinetuneError):
    """Training loss became non-finite."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step
