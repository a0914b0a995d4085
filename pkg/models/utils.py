from enum import Enum

from .errors import InvalidParameterError


class VARIANT(Enum):
    HSMM = "hsmm"
    DIHMM = "dihmm"


class GAP_MODE(Enum):
    STRICT = "strict"
    SKIP = "skip"


class SAMPLING(Enum):
    UNIFORM = "uniform"
    FIRST = "first"


class JITTER_TARGET(Enum):
    BOTH = "both"
    DURATIONS = "durations"
    INTERVALS = "intervals"


def parse_enum(enum_cls, value, field=None):
    """Accept an enum member or its string value.

    Raises:
        InvalidParameterError: if ``value`` names no member of ``enum_cls``.
    """
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(str(value).lower())
    except ValueError:
        allowed = ", ".join(member.value for member in enum_cls)
        raise InvalidParameterError(f"unknown value {value!r} (expected one of: {allowed})", field=field) from None
