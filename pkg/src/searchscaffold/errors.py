"""Exception types shared across the package."""


class ScaffoldError(Exception):
    """Base class for all searchscaffold errors."""


class OutlineParseError(ScaffoldError):
    """Outline document is syntactically malformed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class ValidationError(ScaffoldError):
    """Input violates a documented contract (bad field, short summary, ...)."""


class ConfigurationError(ScaffoldError):
    """Service or module configuration is unusable."""


class ConsistencyError(ScaffoldError):
    """Two structures that must describe the same thing disagree."""


class PhaseError(ScaffoldError):
    """Operation attempted in the wrong session phase."""

    def __init__(self, message: str, remaining_seconds: float | None = None):
        super().__init__(message)
        self.remaining_seconds = remaining_seconds


class EventOrderingError(ScaffoldError):
    """Event stream violates ordering rules (close before open, stale seq, ...)."""


class BackendError(ScaffoldError):
    """Search backend failure; ``retryable`` hints whether a retry may help."""

    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class BodyUnavailableError(BackendError):
    """Document body could not be fetched; scoring treats the doc as filtered."""


class EmbeddingProviderError(ScaffoldError):
    """Embedding provider broke its contract (zero norm on non-empty input)."""
