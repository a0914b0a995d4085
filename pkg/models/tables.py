"""
Dense probability tables of a model

Tables hold read-only numpy arrays. Durations are 1-based in the API and in
the sparse record form used by model files, 0-based on the array axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from constants import PROBABILITY_TOLERANCE

from .errors import InvalidParameterError


def _frozen(array, shape, field):
    probs = np.array(array, dtype=np.float64)
    if probs.shape != shape:
        raise InvalidParameterError(f"expected shape {shape}, got {probs.shape}", field=field)
    if not np.all(np.isfinite(probs)) or probs.min(initial=0.0) < 0.0 or probs.max(initial=0.0) > 1.0 + PROBABILITY_TOLERANCE:
        raise InvalidParameterError("probabilities must lie in [0, 1]", field=field)
    probs.setflags(write=False)
    return probs


def _check_total(total, field):
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        raise InvalidParameterError(f"probabilities sum to {total:.12g}, expected 1", field=field)


def _log(probs):
    with np.errstate(divide="ignore"):
        return np.log(probs)


class _Table:
    """Equality by value over the ``probs`` array."""

    probs: np.ndarray

    def __eq__(self, other):
        return type(other) is type(self) and np.array_equal(self.probs, other.probs)

    __hash__ = None

    def log(self) -> np.ndarray:
        return _log(self.probs)


@dataclass(frozen=True, eq=False)
class TransitionTable(_Table):
    """
    a[(m', D'), (m, D)] stored as ``probs[m', D'-1, m, D-1]``.

    Rows (source pairs) with any mass sum to 1; rows never observed stay zero.
    """

    probs: np.ndarray

    def __post_init__(self):
        shape = np.shape(self.probs)
        if len(shape) != 4 or shape[0] != shape[2] or shape[1] != shape[3]:
            raise InvalidParameterError(f"transition table must have shape (M, D_cap, M, D_cap), got {shape}", field="trans")
        probs = _frozen(self.probs, shape, "trans")
        totals = probs.reshape(shape[0] * shape[1], -1).sum(axis=1)
        for row, total in enumerate(totals):
            if total > 0.0:
                _check_total(total, f"trans[from_state={row // shape[1]}, from_dur={row % shape[1] + 1}]")
        object.__setattr__(self, "probs", probs)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def d_cap(self) -> int:
        return self.probs.shape[1]

    def p(self, m_prev: int, d_prev: int, m: int, d: int) -> float:
        return float(self.probs[m_prev, d_prev - 1, m, d - 1])

    def to_records(self) -> list[dict]:
        return [
            {"from_state": int(a), "from_dur": int(b) + 1, "to_state": int(c), "to_dur": int(d) + 1, "p": float(self.probs[a, b, c, d])}
            for a, b, c, d in zip(*np.nonzero(self.probs))
        ]

    @classmethod
    def from_records(cls, records, n_states: int, d_cap: int):
        probs = np.zeros((n_states, d_cap, n_states, d_cap))
        for record in records:
            index = (record["from_state"], record["from_dur"] - 1, record["to_state"], record["to_dur"] - 1)
            if not all(0 <= i < n for i, n in zip(index, probs.shape)):
                raise InvalidParameterError(f"entry {record} outside (M={n_states}, D_cap={d_cap})", field="trans")
            probs[index] = record["p"]
        return cls(probs)


@dataclass(frozen=True, eq=False)
class EmissionTable(_Table):
    """Per-state categorical distribution over the K symbols, ``probs[m, k]``."""

    probs: np.ndarray

    def __post_init__(self):
        shape = np.shape(self.probs)
        if len(shape) != 2:
            raise InvalidParameterError(f"emission table must have shape (M, K), got {shape}", field="emit")
        probs = _frozen(self.probs, shape, "emit")
        for m, total in enumerate(probs.sum(axis=1)):
            _check_total(total, f"emit[{m}]")
        object.__setattr__(self, "probs", probs)

    @property
    def n_symbols(self) -> int:
        return self.probs.shape[1]

    def p(self, m: int, k: int) -> float:
        return float(self.probs[m, k])

    def to_records(self) -> list[list[float]]:
        return self.probs.tolist()


@dataclass(frozen=True, eq=False)
class InitialTable(_Table):
    """pi over starting (state, duration) pairs, ``probs[m, D-1]``."""

    probs: np.ndarray

    def __post_init__(self):
        shape = np.shape(self.probs)
        if len(shape) != 2:
            raise InvalidParameterError(f"initial table must have shape (M, D_cap), got {shape}", field="pi")
        probs = _frozen(self.probs, shape, "pi")
        _check_total(probs.sum(), "pi")
        object.__setattr__(self, "probs", probs)

    def p(self, m: int, d: int) -> float:
        return float(self.probs[m, d - 1])

    def to_records(self) -> list[dict]:
        return [{"state": int(m), "dur": int(d) + 1, "p": float(self.probs[m, d])} for m, d in zip(*np.nonzero(self.probs))]

    @classmethod
    def from_records(cls, records, n_states: int, d_cap: int):
        probs = np.zeros((n_states, d_cap))
        for record in records:
            m, d = record["state"], record["dur"] - 1
            if not (0 <= m < n_states and 0 <= d < d_cap):
                raise InvalidParameterError(f"entry {record} outside (M={n_states}, D_cap={d_cap})", field="pi")
            probs[m, d] = record["p"]
        return cls(probs)
