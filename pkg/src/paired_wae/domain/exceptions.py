"""Domain exceptions for the paired WAE application."""

from typing import List, Optional


class ShapeMismatchError(ValueError):
    """Raised when tensor shapes or block dimensions disagree with a declaration."""


class ConfigurationError(ValueError):
    """Raised when a task, split or architecture combination is not allowed."""


class ConfigValidationError(ValueError):
    """Raised when a run configuration violates one or more field constraints."""

    def __init__(self, violations: List[str]) -> None:
        self.violations = list(violations)
        super().__init__(
            f"{len(self.violations)} invalid configuration field(s): "
            + "; ".join(self.violations)
        )


class ManifestMismatchError(ValueError):
    """Raised when a checkpoint manifest disagrees with the model it should fill."""


class CorruptArchiveError(ValueError):
    """Raised when a checkpoint or array file cannot be parsed."""


class MixedConfigHashError(ValueError):
    """Raised when artifacts from different configurations are combined."""


class UntrainedModelError(ValueError):
    """Raised when sampling is requested from a checkpoint with no training steps."""


class IdxFormatError(ValueError):
    """Base error for malformed IDX files."""

    def __init__(self, message: str, offset: Optional[int] = None) -> None:
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class BadMagicError(IdxFormatError):
    """The IDX magic number is not a supported type code."""


class TruncatedPayloadError(IdxFormatError):
    """The IDX payload is shorter than the header declares."""


class DimensionOverflowError(IdxFormatError):
    """The IDX header declares more elements than can be addressed."""
