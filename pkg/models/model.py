"""
Model parameter set, scores and the model file format
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np

from constants import DEFAULT_FALLBACK_C, DEFAULT_SIGMA_FLOOR, DEFAULT_THETA_PT, MODEL_FORMAT_TAG

from .alphabet import Alphabet
from .errors import DihmmError, InvalidParameterError, ModelLoadError
from .interval import IntervalModel, fallback_density
from .sequence import SegmentSequence
from .tables import EmissionTable, InitialTable, TransitionTable
from .utils import VARIANT, parse_enum

logger = logging.getLogger(__name__)


class LogTables(NamedTuple):
    """Log-domain views of a model, cut to the durations it can actually produce."""

    log_pi: np.ndarray
    log_a: np.ndarray
    log_emit: np.ndarray
    log_int: np.ndarray
    log_fallback: float
    d_eff: int


@dataclass(frozen=True)
class Score:
    """Viterbi result: natural-log likelihood, optional softmax share and best segmentation."""

    log_likelihood: float
    normalized: float | None = None
    best_path: SegmentSequence | None = None

    @property
    def impossible(self) -> bool:
        return self.log_likelihood == -math.inf

    def with_normalized(self, value):
        return replace(self, normalized=value)

    def to_dict(self):
        path = None
        if self.best_path is not None:
            path = [{"state": s.state, "start": s.start, "dur": s.duration} for s in self.best_path.segments]
        return {
            "log_likelihood": None if self.impossible else self.log_likelihood,
            "impossible": self.impossible,
            "normalized": self.normalized,
            "path": path,
        }


@dataclass(frozen=True, eq=False)
class DihmmModel:
    """
    Parameter set of an HSMM or DI-HMM.

    Args:
        alphabet: Observable symbols (with the gap symbol)
        states: Hidden-state names, M of them
        transitions: a[(m', D'), (m, D)]
        emissions: e[m][k]
        initial: pi[(m, D)]
        intervals: Mapping (m', m) -> IntervalModel; empty for HSMM models
        variant: VARIANT.HSMM or VARIANT.DIHMM
        label: Class label of the model
        c: Out-of-support fallback factor in [0, 1]
        theta_pt: Density floor the supports were truncated with
        sigma_floor: Lower bound on every interval sigma
        forbid_self: Disallow m -> m transitions
    """

    alphabet: Alphabet
    states: tuple[str, ...]
    transitions: TransitionTable
    emissions: EmissionTable
    initial: InitialTable
    intervals: dict = field(default_factory=dict)
    variant: VARIANT = VARIANT.DIHMM
    label: str = ""
    c: float = DEFAULT_FALLBACK_C
    theta_pt: float = DEFAULT_THETA_PT
    sigma_floor: float = DEFAULT_SIGMA_FLOOR
    forbid_self: bool = True

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "intervals", dict(sorted(self.intervals.items())))
        object.__setattr__(self, "variant", parse_enum(VARIANT, self.variant, field="variant"))

        m_count = len(self.states)
        if m_count < 1:
            raise InvalidParameterError("a model needs at least one state", field="M")
        if self.transitions.n_states != m_count or self.initial.probs.shape[0] != m_count or self.emissions.probs.shape[0] != m_count:
            raise InvalidParameterError(f"tables disagree with M={m_count}", field="M")
        if self.initial.probs.shape[1] != self.transitions.d_cap:
            raise InvalidParameterError("pi and trans disagree on D_cap", field="D_cap")
        if self.emissions.n_symbols != self.alphabet.size:
            raise InvalidParameterError(f"emission rows have {self.emissions.n_symbols} entries for K={self.alphabet.size}", field="emit")
        if not 0.0 <= self.c <= 1.0:
            raise InvalidParameterError(f"c must lie in [0, 1], got {self.c}", field="c")
        if not self.theta_pt > 0:
            raise InvalidParameterError(f"theta_pt must be > 0, got {self.theta_pt}", field="theta_pt")
        if not self.sigma_floor > 0:
            raise InvalidParameterError(f"sigma_floor must be > 0, got {self.sigma_floor}", field="sigma_floor")
        if self.forbid_self and any(self.transitions.probs[m, :, m, :].any() for m in range(m_count)):
            raise InvalidParameterError("self-transitions carry mass but are forbidden", field="trans")
        for (m_prev, m_next), model in self.intervals.items():
            if not (0 <= m_prev < m_count and 0 <= m_next < m_count):
                raise InvalidParameterError(f"pair ({m_prev}, {m_next}) outside M={m_count}", field="intervals")
            if model.sigma < self.sigma_floor - 1e-12:
                raise InvalidParameterError(f"sigma {model.sigma} below sigma_floor {self.sigma_floor}", field=f"intervals[{m_prev},{m_next}]")

    # ------------------------------------------------------------------
    # Shape
    # ------------------------------------------------------------------

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def d_cap(self) -> int:
        return self.transitions.d_cap

    @property
    def is_dihmm(self) -> bool:
        return self.variant is VARIANT.DIHMM

    def __eq__(self, other):
        if not isinstance(other, DihmmModel):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.states == other.states
            and self.transitions == other.transitions
            and self.emissions == other.emissions
            and self.initial == other.initial
            and self.intervals == other.intervals
            and self.variant is other.variant
            and self.label == other.label
            and self.c == other.c
            and self.theta_pt == other.theta_pt
            and self.sigma_floor == other.sigma_floor
            and self.forbid_self == other.forbid_self
        )

    @cached_property
    def log_tables(self) -> LogTables:
        """Log tables for the decoder; ``log_int`` covers lengths 0..max x_hi."""
        reachable = self.initial.probs.any(axis=0) | self.transitions.probs.any(axis=(0, 1, 2))
        d_eff = int(np.flatnonzero(reachable)[-1]) + 1 if reachable.any() else 1

        m_count = self.n_states
        if self.intervals:
            horizon = max(model.x_hi for model in self.intervals.values())
            log_fallback = _safe_log(fallback_density(self.intervals, self.c))
            log_int = np.full((m_count, m_count, horizon + 1), log_fallback)
            for (m_prev, m_next), model in self.intervals.items():
                support = np.arange(model.x_lo, model.x_hi + 1)
                log_int[m_prev, m_next, model.x_lo : model.x_hi + 1] = np.log(model.pdf(support))
        else:
            log_fallback = -math.inf
            log_int = np.zeros((m_count, m_count, 0))

        return LogTables(
            log_pi=np.ascontiguousarray(self.initial.log()[:, :d_eff]),
            log_a=np.ascontiguousarray(self.transitions.log()[:, :d_eff, :, :d_eff]),
            log_emit=self.emissions.log(),
            log_int=log_int,
            log_fallback=log_fallback,
            d_eff=d_eff,
        )

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self):
        """Convert to the model-file document"""
        return {
            "format": MODEL_FORMAT_TAG,
            "variant": self.variant.value,
            "label": self.label,
            "alphabet": list(self.alphabet.names),
            "gap_symbol": self.alphabet.gap,
            "M": self.n_states,
            "D_cap": self.d_cap,
            "states": list(self.states),
            "forbid_self": self.forbid_self,
            "pi": self.initial.to_records(),
            "trans": self.transitions.to_records(),
            "emit": self.emissions.to_records(),
            "intervals": [
                {"from": m_prev, "to": m_next, "mu": im.mu, "sigma": im.sigma, "x_lo": im.x_lo, "x_hi": im.x_hi, "n": im.n}
                for (m_prev, m_next), im in self.intervals.items()
            ],
            "theta_pt": self.theta_pt,
            "c": self.c,
            "sigma_floor": self.sigma_floor,
        }

    @classmethod
    def from_dict(cls, data):
        """Create a model from a model-file document

        Raises:
            ModelLoadError: naming the offending field
        """
        if not isinstance(data, dict):
            raise ModelLoadError("model document must be a JSON object")
        if data.get("format") != MODEL_FORMAT_TAG:
            raise ModelLoadError(f"unknown format tag {data.get('format')!r}", field="format")
        try:
            alphabet = Alphabet.from_names(_require(data, "alphabet"), _require(data, "gap_symbol"))
            m_count = int(_require(data, "M"))
            d_cap = int(_require(data, "D_cap"))
            states = tuple(data.get("states") or _default_states(alphabet, m_count))
            if len(states) != m_count:
                raise ModelLoadError(f"{len(states)} state names for M={m_count}", field="states")
            sigma_floor = float(data.get("sigma_floor", DEFAULT_SIGMA_FLOOR))
            theta_pt = float(data.get("theta_pt", DEFAULT_THETA_PT))
            intervals = {}
            for i, record in enumerate(data.get("intervals", [])):
                key = (_state_index(record["from"], states), _state_index(record["to"], states))
                try:
                    interval = IntervalModel(
                        float(record["mu"]), float(record["sigma"]), theta_pt, int(record["x_lo"]), int(record["x_hi"]), int(record.get("n", 0))
                    )
                    interval.check_support()
                except InvalidParameterError as err:
                    raise ModelLoadError(err.detail, field=f"intervals[{i}].{err.field}") from err
                intervals[key] = interval
            pi_records = [dict(r, state=_state_index(r["state"], states)) for r in _require(data, "pi")]
            trans_records = [
                dict(r, from_state=_state_index(r["from_state"], states), to_state=_state_index(r["to_state"], states))
                for r in data.get("trans", [])
            ]
            return cls(
                alphabet=alphabet,
                states=states,
                transitions=TransitionTable.from_records(trans_records, m_count, d_cap),
                emissions=EmissionTable(_require(data, "emit")),
                initial=InitialTable.from_records(pi_records, m_count, d_cap),
                intervals=intervals,
                variant=_require(data, "variant"),
                label=str(data.get("label", "")),
                c=float(data.get("c", DEFAULT_FALLBACK_C)),
                theta_pt=theta_pt,
                sigma_floor=sigma_floor,
                forbid_self=bool(data.get("forbid_self", True)),
            )
        except ModelLoadError:
            raise
        except DihmmError as err:
            raise ModelLoadError(err.detail, field=err.field) from err
        except KeyError as err:
            raise ModelLoadError("missing key", field=str(err.args[0])) from err
        except (TypeError, ValueError) as err:
            raise ModelLoadError(f"malformed model document ({err})") from err

    def save(self, path):
        path = Path(path)
        path.write_bytes(serialize_model(self))
        logger.debug(f"Saved model {self.label!r} to {path}")

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            return deserialize_model(path.read_bytes())
        except ModelLoadError as err:
            raise ModelLoadError(err.detail, field=f"{path}:{err.field}" if err.field else str(path)) from err


def serialize_model(model: DihmmModel) -> bytes:
    return json.dumps(model.to_dict(), indent=2).encode("utf-8")


def deserialize_model(data) -> DihmmModel:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        document = json.loads(data)
    except json.JSONDecodeError as err:
        raise ModelLoadError(f"not valid JSON ({err.msg} at line {err.lineno})") from err
    return DihmmModel.from_dict(document)


def interval_horizon(model: DihmmModel, slack: int, length: int) -> int:
    """
    Longest interval the decoder searches between two segments.

    DI-HMM: the widest trained support edge plus ``slack``. HSMM: the whole
    sequence, since its intervals are unscored.
    """
    if not model.is_dihmm:
        return length
    if not model.intervals:
        return 0
    return min(max(im.x_hi for im in model.intervals.values()) + int(slack), length)


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------


def _require(data, key):
    if key not in data:
        raise ModelLoadError("missing key", field=key)
    return data[key]


def _default_states(alphabet, m_count):
    if m_count == len(alphabet.event_names):
        return alphabet.event_names
    return tuple(f"s{m}" for m in range(m_count))


def _state_index(value, states):
    if isinstance(value, str):
        if value not in states:
            raise ModelLoadError(f"unknown state {value!r}", field="states")
        return states.index(value)
    return int(value)


def _safe_log(value):
    return math.log(value) if value > 0 else -math.inf
