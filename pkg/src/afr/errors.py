"""Exception hierarchy shared by every afr module."""


class AFRError(Exception):
    """Base class for all errors raised by afr."""


class ConfigError(AFRError, ValueError):
    """Invalid hyperparameter or basis configuration."""


class DataError(AFRError, ValueError):
    """Input data failed validation (non-finite values, bad labels, parse errors)."""


class DimensionError(AFRError, ValueError):
    """Feature count or array shape does not match what was expected."""


class DomainError(AFRError, ValueError):
    """Argument lies outside the mathematical domain of the operation."""


class UndefinedMetricError(AFRError, ValueError):
    """Metric is undefined for the given input (e.g. AP with no positives)."""


class SolverError(AFRError, RuntimeError):
    """Optimization diverged or produced non-finite values.

    The partial trace collected up to the failure is attached as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ModelFormatError(AFRError):
    """Base class for model file problems."""


class ModelVersionError(ModelFormatError):
    def __init__(self, found, expected):
        super().__init__(
            f"unsupported model format version {found!r}; this build reads version {expected!r}"
        )
        self.found = found
        self.expected = expected


class ModelParseError(ModelFormatError):
    """The model file is not a well-formed document (e.g. truncated)."""

    def __init__(self, message, byte_offset):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset


class MalformedModelError(ModelFormatError):
    """The document parses but required fields are missing or inconsistent."""
