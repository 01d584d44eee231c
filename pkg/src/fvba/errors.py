"""Exception types shared across the toolkit."""


class Error(Exception):
    """Base class for all toolkit errors."""


class ParameterError(Error, ValueError):
    """An argument violates a documented precondition."""


class OrderingError(Error):
    """An event sequence is not sorted by timestamp."""


class InsufficientDataError(Error):
    """Not enough data to compute the requested statistic."""


class ParseError(Error):
    """A line of an input file could not be parsed.

    Carries the 1-based line number when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
