from typing import ClassVar, Optional


class EmoSelectException(Exception):
    """Base class for any emoselect exceptions. Not expected to be raised directly."""

    code: ClassVar[str] = "E_INTERNAL"


class ContractViolationException(EmoSelectException):
    """Exception raised when an operation is called with arguments violating its
    preconditions (mismatched lengths, non-finite values, wrong shapes)."""

    code = "E_CONTRACT"


class ConfigurationException(EmoSelectException):
    """Exception raised when a run, campaign or operator configuration is invalid."""

    code = "E_CONFIG"

    def __init__(self, message: str, key: Optional[str] = None) -> None:
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key: Optional[str] = key


class MissingReferenceException(EmoSelectException):
    """Exception raised when the reference-value file, or a row in it, is missing."""

    code = "E_REFERENCE"


class TraceMissingException(EmoSelectException):
    """Exception raised when a trace file required for aggregation is absent."""

    code = "E_TRACE"


class AggregationException(EmoSelectException):
    """Exception raised when records cannot be aggregated together."""

    code = "E_AGGREGATION"


class EarlyAbortException(EmoSelectException):
    """Exception raised to stop a command early. Swallowed by ProcessingContext."""

    code = "E_ABORTED"
