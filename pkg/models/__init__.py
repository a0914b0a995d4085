"""Package initialization for the *models* package.

The public domain types are re-exported so callers can simply do::

    from models import DihmmModel, TickSequence
"""

from .alphabet import Alphabet
from .errors import (
    CompatibilityError,
    DataError,
    DihmmError,
    EmptySupportError,
    InfeasiblePolicyError,
    InvalidParameterError,
    ModelLoadError,
    UnsupportedFormatError,
    UntrainedIntervalError,
)
from .interval import IntervalModel, fallback_density, gaussian_pdf, interval_prob, truncate_support
from .model import DihmmModel, LogTables, Score, deserialize_model, interval_horizon, serialize_model
from .sequence import Segment, SegmentSequence, TickSequence, render, segments_from_ticks
from .tables import EmissionTable, InitialTable, TransitionTable
from .utils import GAP_MODE, JITTER_TARGET, SAMPLING, VARIANT, parse_enum

__all__ = [
    "Alphabet",
    "TickSequence",
    "Segment",
    "SegmentSequence",
    "segments_from_ticks",
    "render",
    "IntervalModel",
    "gaussian_pdf",
    "truncate_support",
    "interval_prob",
    "fallback_density",
    "TransitionTable",
    "EmissionTable",
    "InitialTable",
    "DihmmModel",
    "LogTables",
    "Score",
    "serialize_model",
    "deserialize_model",
    "interval_horizon",
    "VARIANT",
    "GAP_MODE",
    "SAMPLING",
    "JITTER_TARGET",
    "parse_enum",
    "DihmmError",
    "InvalidParameterError",
    "EmptySupportError",
    "UntrainedIntervalError",
    "ModelLoadError",
    "DataError",
    "InfeasiblePolicyError",
    "UnsupportedFormatError",
    "CompatibilityError",
]
