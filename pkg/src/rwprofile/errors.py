"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""


class ParseError(ValidationError):
    """Malformed input document. Carries a line number when one is known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnscorableTraceError(ValidationError):
    """Trace cannot receive a consistency score; the pipeline maps this to a
    flagged benign verdict instead of failing a batch."""


class InsufficientDurationError(UnscorableTraceError):
    """Trace spans fewer seconds than one previous+current window frame."""


class NoFileActivityError(UnscorableTraceError):
    """Trace contains no scorable file-API activity."""
