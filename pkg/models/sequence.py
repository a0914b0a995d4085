"""
Observation (tick) sequences and their segmentations
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .alphabet import Alphabet
from .errors import DataError


@dataclass(frozen=True)
class TickSequence:
    """
    A run of symbol ids at unit time resolution.

    Args:
        ticks: Symbol ids, one per tick (length T >= 1)
        alphabet: The alphabet the ids index into
        id: Sequence identifier
        label: Optional class label
    """

    ticks: tuple[int, ...]
    alphabet: Alphabet
    id: str = ""
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "ticks", tuple(int(t) for t in self.ticks))
        if not self.ticks:
            raise DataError("a tick sequence needs at least one tick", field=self.id or "ticks")
        bad = [t for t in self.ticks if not 0 <= t < self.alphabet.size]
        if bad:
            raise DataError(f"tick id {bad[0]} outside alphabet of size {self.alphabet.size}", field=self.id or "ticks")

    @classmethod
    def from_names(cls, names, alphabet: Alphabet, id="", label=None):
        return cls(alphabet.encode(names), alphabet, id, label)

    @property
    def length(self) -> int:
        return len(self.ticks)

    def names(self) -> tuple[str, ...]:
        return self.alphabet.decode(self.ticks)

    def is_gap(self, t: int) -> bool:
        return self.ticks[t] == self.alphabet.gap_id

    def with_label(self, label):
        return replace(self, label=label)

    def __len__(self):
        return len(self.ticks)


@dataclass(frozen=True)
class Segment:
    """One visit of hidden state ``state`` covering ticks ``[start, start + duration)``."""

    state: int
    start: int
    duration: int

    def __post_init__(self):
        if self.duration < 1:
            raise DataError(f"segment duration must be >= 1, got {self.duration}", field="segment")
        if self.start < 0:
            raise DataError(f"segment start must be >= 0, got {self.start}", field="segment")

    @property
    def end(self) -> int:
        return self.start + self.duration


@dataclass(frozen=True)
class SegmentSequence:
    """
    Ordered, non-overlapping segments inside a timeline of ``length`` ticks.

    The gap between two consecutive segments is their interval
    ``l = start_n - end_{n-1}``.
    """

    segments: tuple[Segment, ...]
    length: int
    leading_gap: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        previous_end = 0
        for n, segment in enumerate(self.segments):
            if segment.start < previous_end:
                raise DataError(f"segment {n} starts at {segment.start} before the previous segment ends at {previous_end}", field="segments")
            previous_end = segment.end
        if previous_end > self.length:
            raise DataError(f"segments end at {previous_end}, past the sequence length {self.length}", field="segments")
        object.__setattr__(self, "leading_gap", self.segments[0].start if self.segments else 0)

    @property
    def intervals(self) -> tuple[int, ...]:
        return tuple(nxt.start - prev.end for prev, nxt in zip(self.segments, self.segments[1:]))

    @property
    def durations(self) -> tuple[int, ...]:
        return tuple(segment.duration for segment in self.segments)

    @property
    def states(self) -> tuple[int, ...]:
        return tuple(segment.state for segment in self.segments)

    @classmethod
    def from_lengths(cls, states, durations, intervals, leading_gap=0, length=None):
        """Lay out segments back to back: d_1, l_1, d_2, l_2, ..., d_N."""
        if len(states) != len(durations) or len(intervals) != max(len(durations) - 1, 0):
            raise DataError("need N states, N durations and N-1 intervals", field="segments")
        segments = []
        cursor = leading_gap
        for n, (state, duration) in enumerate(zip(states, durations)):
            if n:
                cursor += intervals[n - 1]
            segments.append(Segment(state, cursor, duration))
            cursor += duration
        return cls(tuple(segments), cursor if length is None else length)

    def __len__(self):
        return len(self.segments)


def segments_from_ticks(seq: TickSequence) -> SegmentSequence:
    """
    Run-length encode a tick sequence: maximal runs of one non-gap symbol
    become segments, gap runs become intervals.

    Returns:
        The SegmentSequence (empty when every tick is a gap)
    """
    alphabet = seq.alphabet
    segments = []
    run_start = None
    for t, symbol in enumerate(seq.ticks + (alphabet.gap_id,)):
        if run_start is not None and symbol != seq.ticks[run_start]:
            segments.append(Segment(alphabet.state_of_symbol(seq.ticks[run_start]), run_start, t - run_start))
            run_start = None
        if run_start is None and symbol != alphabet.gap_id and t < seq.length:
            run_start = t
    return SegmentSequence(tuple(segments), seq.length)


def render(segments: SegmentSequence, alphabet: Alphabet, id="", label=None) -> TickSequence:
    """Inverse of ``segments_from_ticks``: state ``m`` is drawn with the ``m``-th event symbol."""
    ticks = [alphabet.gap_id] * segments.length
    for segment in segments.segments:
        if not 0 <= segment.state < len(alphabet.event_ids):
            raise DataError(f"state {segment.state} has no event symbol", field="segments")
        ticks[segment.start : segment.end] = [alphabet.symbol_of_state(segment.state)] * segment.duration
    return TickSequence(tuple(ticks), alphabet, id, label)
