"""
Observable symbol alphabet
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError, InvalidParameterError


@dataclass(frozen=True)
class Alphabet:
    """
    Ordered set of observable symbol names with one designated gap symbol.

    Event symbols (every name except the gap) double as the hidden-state
    names of trained models: state ``m`` is the ``m``-th event symbol.
    """

    names: tuple[str, ...]
    gap_id: int

    def __post_init__(self):
        if not self.names:
            raise InvalidParameterError("alphabet must contain at least one symbol", field="alphabet")
        if any(not isinstance(name, str) or not name for name in self.names):
            raise InvalidParameterError("symbol names must be non-empty strings", field="alphabet")
        if len(set(self.names)) != len(self.names):
            raise InvalidParameterError("symbol names must be unique", field="alphabet")
        if not 0 <= self.gap_id < len(self.names):
            raise InvalidParameterError(f"gap index {self.gap_id} outside alphabet of size {len(self.names)}", field="gap_symbol")

    @classmethod
    def from_names(cls, names, gap):
        """
        Build an alphabet; the gap symbol is appended when missing.

        Args:
            names: Iterable of symbol names (order is kept)
            gap: Name of the gap symbol

        Returns:
            A new Alphabet
        """
        names = list(names)
        if gap not in names:
            names.append(gap)
        return cls(tuple(names), names.index(gap))

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def gap(self) -> str:
        return self.names[self.gap_id]

    @property
    def event_ids(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.names)) if i != self.gap_id)

    @property
    def event_names(self) -> tuple[str, ...]:
        return tuple(self.names[i] for i in self.event_ids)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown symbol {name!r}", field="ticks") from None

    def encode(self, names) -> tuple[int, ...]:
        return tuple(self.index(name) for name in names)

    def decode(self, ids) -> tuple[str, ...]:
        return tuple(self.names[i] for i in ids)

    def state_of_symbol(self, symbol_id: int) -> int:
        """State index of an event symbol (gap symbols have no state)."""
        if symbol_id == self.gap_id:
            raise DataError("the gap symbol has no hidden state", field="ticks")
        return symbol_id if symbol_id < self.gap_id else symbol_id - 1

    def symbol_of_state(self, state: int) -> int:
        return self.event_ids[state]
