"""
Exceptions raised by the library. The CLI maps them to exit codes.
"""


class BenchError(Exception):
    """Base class for every error raised by s3gd-bench."""


class DatasetFormatError(BenchError):
    """A LIBSVM file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(BenchError, ValueError):
    """Inputs violate a documented precondition."""


class StaleCacheError(BenchError):
    """A snapshot or propagation cache does not match the current anchors."""


class ConfigError(BenchError):
    """The experiment configuration is missing or invalid."""
