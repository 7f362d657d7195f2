"""Exception types shared across the toolkit."""


class ClarforgeError(Exception):
    """Base class for all operational errors raised by this package."""


class CorpusFormatError(ClarforgeError):
    """Malformed corpus or dataset file; carries file position context."""

    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        self.line = line
        self.offset = offset
        super().__init__(message)


class GraphParseError(ClarforgeError):
    """The sample's own code failed to parse."""

    def __init__(self, message: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(message)


class DocIndexError(ClarforgeError):
    """Malformed documentation index file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message)


class SidecarError(ClarforgeError):
    """Embedding/parsing sidecar unreachable or returned an error."""

    def __init__(self, message: str, endpoint: str):
        self.endpoint = endpoint
        super().__init__(f"{message} (endpoint: {endpoint})")


class CalibrationError(ClarforgeError):
    """Threshold calibration is impossible for the given labels."""


class MetricsError(ClarforgeError):
    """Inconsistent inputs to a metric computation."""
