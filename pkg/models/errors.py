"""
Exception hierarchy shared by every module of the toolkit
"""


class DihmmError(Exception):
    """Base class. ``field`` names the offending file, field or segment when known."""

    def __init__(self, message, field=None):
        self.field = field
        self.detail = message
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class InvalidParameterError(DihmmError, ValueError):
    pass


class EmptySupportError(InvalidParameterError):
    pass


class UntrainedIntervalError(DihmmError, LookupError):
    pass


class ModelLoadError(DihmmError):
    pass


class DataError(DihmmError, ValueError):
    pass


class InfeasiblePolicyError(DihmmError):
    pass


class UnsupportedFormatError(DihmmError):
    pass


class CompatibilityError(DihmmError):
    pass
