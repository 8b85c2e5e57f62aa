"""Exception hierarchy shared by the solver, oracle and CLI."""


class NadsError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(NadsError, ValueError):
    """Invalid input: bad parameters, malformed graph, bad config."""


class ParseError(ValidationError):
    """Malformed edge-list line."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class DivergenceError(NadsError):
    """Propagation or Katz series cannot converge for the given parameters."""


class SizeError(NadsError):
    """An exhaustive oracle would exceed its enumeration guard."""
