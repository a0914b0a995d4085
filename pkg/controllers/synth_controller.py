"""
Deterministic synthetic corpora: enumerated duration/interval sequences,
jittered training variants and emulated rhythm renditions
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass
from math import comb

import numpy as np

from constants import DEFAULT_GAP_SYMBOL, OFF_SYMBOL, ON_SYMBOL
from models import (
    JITTER_TARGET,
    SAMPLING,
    Alphabet,
    InfeasiblePolicyError,
    InvalidParameterError,
    SegmentSequence,
    TickSequence,
    parse_enum,
    render,
)

from .ingest_controller import AudioParams, dedupe_rhythms, split_bars

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# Policies
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class JitterPolicy:
    """
    Per-element perturbation of durations and intervals.

    Each targeted element moves by +-1..max_shift ticks with probability
    ``prob``. ``balanced`` keeps the running mean of every element within
    half a tick of its original value across a jitter family.
    """

    max_shift: int = 1
    prob: float = 0.5
    targets: JITTER_TARGET = JITTER_TARGET.BOTH
    balanced: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", parse_enum(JITTER_TARGET, self.targets, field="targets"))
        if int(self.max_shift) < 0:
            raise InvalidParameterError(f"must be >= 0, got {self.max_shift}", field="max_shift")
        if not 0.0 <= self.prob <= 1.0:
            raise InvalidParameterError(f"must lie in [0, 1], got {self.prob}", field="prob")

    def hits(self, is_interval: bool) -> bool:
        if self.targets is JITTER_TARGET.BOTH:
            return True
        return is_interval == (self.targets is JITTER_TARGET.INTERVALS)

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    def to_dict(self):
        data = asdict(self)
        data["targets"] = self.targets.value
        return data


@dataclass(frozen=True)
class GenPolicy:
    """
    Enumeration policy for synthetic sequences.

    Args:
        n_states: State count per sequence, or several counts mixed into one corpus
        d_min, d_max: Duration range (ticks)
        l_min, l_max: Interval range (ticks)
        length: Fixed total length T, or None for unconstrained
        count: Number of sequences to keep
        seed: Seed for sampling and jitter
        jitter: Optional JitterPolicy applied to every kept sequence
        sampling: UNIFORM (seeded, without replacement) or FIRST (odometer prefix)
        shared_symbol: Draw every segment with one "on" symbol instead of one symbol per position
        gap_symbol: Gap symbol name (ignored with shared_symbol, which uses "off")
    """

    n_states: tuple[int, ...] = (3,)
    d_min: int = 1
    d_max: int = 10
    l_min: int = 1
    l_max: int = 4
    length: int | None = None
    count: int = 200
    seed: int = 0
    jitter: JitterPolicy | None = None
    sampling: SAMPLING = SAMPLING.UNIFORM
    shared_symbol: bool = False
    gap_symbol: str = DEFAULT_GAP_SYMBOL

    def __post_init__(self):
        n_states = (self.n_states,) if isinstance(self.n_states, int) else tuple(int(n) for n in self.n_states)
        object.__setattr__(self, "n_states", n_states)
        object.__setattr__(self, "sampling", parse_enum(SAMPLING, self.sampling, field="sampling"))
        if isinstance(self.jitter, dict):
            object.__setattr__(self, "jitter", JitterPolicy.from_dict(self.jitter))
        if not n_states or min(n_states) < 1:
            raise InvalidParameterError(f"state counts must be >= 1, got {n_states}", field="n_states")
        if not 1 <= self.d_min <= self.d_max:
            raise InvalidParameterError(f"need 1 <= d_min <= d_max, got [{self.d_min}, {self.d_max}]", field="d")
        if not 0 <= self.l_min <= self.l_max:
            raise InvalidParameterError(f"need 0 <= l_min <= l_max, got [{self.l_min}, {self.l_max}]", field="l")
        if self.count < 1:
            raise InvalidParameterError(f"must be >= 1, got {self.count}", field="count")
        if self.length is not None and self.length < 1:
            raise InvalidParameterError(f"must be >= 1, got {self.length}", field="length")

    @property
    def alphabet(self) -> Alphabet:
        if self.shared_symbol:
            return Alphabet.from_names([ON_SYMBOL], OFF_SYMBOL)
        return Alphabet.from_names([f"s{n}" for n in range(max(self.n_states))], self.gap_symbol)

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    def to_dict(self):
        data = asdict(self)
        data["n_states"] = list(self.n_states)
        data["sampling"] = self.sampling.value
        data["jitter"] = self.jitter.to_dict() if self.jitter else None
        return data


@dataclass(frozen=True)
class Rendition:
    """One emulated instrument: notes sound for at most ``cap`` ticks, moved +-1 with probability ``jitter``."""

    cap: int
    jitter: float = 0.0


@dataclass(frozen=True)
class RhythmPolicy:
    n_patterns: int = 40
    song_bars: int = 57
    ticks_per_bar: int = 16
    onset_step: int = 2
    min_notes: int = 2
    max_notes: int = 6
    train: tuple[Rendition, ...] = (Rendition(3), Rendition(2), Rendition(1))
    test: tuple[Rendition, ...] = (Rendition(1, 0.3), Rendition(1, 0.3), Rendition(2, 0.3))
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(_rendition(r) for r in self.train))
        object.__setattr__(self, "test", tuple(_rendition(r) for r in self.test))
        slots = self.ticks_per_bar // self.onset_step
        if self.onset_step < 2 or slots < 1:
            raise InvalidParameterError("need onset_step >= 2 and at least one onset slot per bar", field="onset_step")
        if not 1 <= self.min_notes <= self.max_notes <= slots:
            raise InvalidParameterError(f"need 1 <= min_notes <= max_notes <= {slots}", field="max_notes")
        available = sum(comb(slots, k) for k in range(self.min_notes, self.max_notes + 1))
        if self.n_patterns > available:
            raise InfeasiblePolicyError(f"only {available} distinct patterns fit the grid", field="n_patterns")
        if self.song_bars < self.n_patterns:
            raise InvalidParameterError("the song must contain every pattern at least once", field="song_bars")

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    def to_dict(self):
        return asdict(self)


# ----------------------------------------------------------------------
# Enumerated corpora
# ----------------------------------------------------------------------


def enumerate_lengths(policy: GenPolicy) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All (durations, intervals) combinations in odometer order, N ascending as listed."""
    combos = []
    for n in policy.n_states:
        ranges = [range(policy.d_min, policy.d_max + 1)] * n + [range(policy.l_min, policy.l_max + 1)] * (n - 1)
        for digits in itertools.product(*ranges):
            if policy.length is None or sum(digits) == policy.length:
                combos.append((digits[:n], digits[n:]))
    return combos


def generate(policy: GenPolicy) -> list[tuple[TickSequence, SegmentSequence]]:
    """
    Build a corpus of distinct sequences from the policy.

    Args:
        policy: The generation policy

    Returns:
        List of (TickSequence, SegmentSequence); each sequence is labeled with its id

    Raises:
        InfeasiblePolicyError: when no combination reaches the fixed length
    """
    combos = enumerate_lengths(policy)
    if not combos:
        raise InfeasiblePolicyError(f"no combination of durations and intervals sums to T={policy.length}", field="length")

    rng = np.random.default_rng(policy.seed)
    if policy.count < len(combos):
        if policy.sampling is SAMPLING.UNIFORM:
            keep = np.sort(rng.choice(len(combos), size=policy.count, replace=False))
            combos = [combos[i] for i in keep]
        else:
            combos = combos[: policy.count]
    elif policy.count > len(combos):
        logger.warning(f"Policy asks for {policy.count} sequences but only {len(combos)} are feasible")

    alphabet = policy.alphabet
    corpus = []
    seen = set()
    for durations, intervals in combos:
        if policy.jitter is not None and policy.jitter.max_shift > 0:
            candidates = [_jitter_once(durations, intervals, policy.jitter, rng, policy.length), (durations, intervals)]
        else:
            candidates = [(durations, intervals)]
        chosen = next((c for c in candidates if c not in seen), None)
        if chosen is None:
            logger.debug(f"Dropping duplicate jittered sequence {durations}/{intervals}")
            continue
        seen.add(chosen)
        corpus.append(_build(chosen, alphabet, policy.shared_symbol, f"seq{len(corpus):04d}"))

    logger.info(f"Generated {len(corpus)} sequences (N in {list(policy.n_states)}, T={policy.length})")
    return corpus


def jitter_family(pair, k: int, jitter: JitterPolicy, seed: int) -> list[tuple[TickSequence, SegmentSequence]]:
    """
    ``k`` training variants of one sequence, the original first.

    The random stream depends only on ``seed`` and element positions, so every
    sequence of one corpus sees the same jitter pattern.
    """
    if k < 1:
        raise InvalidParameterError(f"must be >= 1, got {k}", field="k")
    seq, segmentation = pair
    durations, intervals = segmentation.durations, segmentation.intervals
    values = list(durations) + list(intervals)
    is_interval = [False] * len(durations) + [True] * len(intervals)

    rng = np.random.default_rng(seed)
    sums = [0] * len(values)
    family = [pair]
    for variant in range(1, k):
        shifted = []
        for j, value in enumerate(values):
            offset = _draw_offset(rng, jitter)
            if not jitter.hits(is_interval[j]) or value + offset < (0 if is_interval[j] else 1):
                offset = 0
            if jitter.balanced and 2 * abs(sums[j] + offset) >= variant + 1:
                offset = 0
            sums[j] += offset
            shifted.append(value + offset)
        new_durations, new_intervals = tuple(shifted[: len(durations)]), tuple(shifted[len(durations) :])
        layout = SegmentSequence.from_lengths(segmentation.states, new_durations, new_intervals, leading_gap=segmentation.leading_gap)
        family.append((render(layout, seq.alphabet, f"{seq.id}~{variant}", seq.label), layout))
    return family


# ----------------------------------------------------------------------
# Rhythm corpora
# ----------------------------------------------------------------------


def rhythm_patterns(policy: RhythmPolicy) -> list[tuple[int, ...]]:
    """Distinct onset sets on the bar's onset grid, in seeded order."""
    rng = np.random.default_rng(policy.seed)
    grid = np.arange(0, policy.ticks_per_bar, policy.onset_step)
    patterns = []
    seen = set()
    while len(patterns) < policy.n_patterns:
        notes = int(rng.integers(policy.min_notes, policy.max_notes + 1))
        onsets = tuple(int(x) for x in np.sort(rng.choice(grid, size=notes, replace=False)))
        if onsets not in seen:
            seen.add(onsets)
            patterns.append(onsets)
    return patterns


def song_layout(policy: RhythmPolicy) -> list[tuple[int, ...]]:
    """Every pattern once plus seeded repeats, shuffled."""
    rng = np.random.default_rng([policy.seed, 1])
    patterns = rhythm_patterns(policy)
    repeats = rng.integers(0, len(patterns), size=policy.song_bars - len(patterns))
    bars = patterns + [patterns[i] for i in repeats]
    return [bars[i] for i in rng.permutation(len(bars))]


def render_song(bars, policy: RhythmPolicy, rendition: Rendition, rng, song_id="song") -> TickSequence:
    """
    Play the bars with one rendition.

    Each note sounds for ``min(IOI - 1, cap)`` ticks, moved by +-1 with
    probability ``rendition.jitter``, and always leaves at least one silent
    tick before the next onset.
    """
    alphabet = Alphabet.from_names([ON_SYMBOL], OFF_SYMBOL)
    on_id, off_id = alphabet.index(ON_SYMBOL), alphabet.gap_id
    ticks = []
    for onsets in bars:
        bar = [off_id] * policy.ticks_per_bar
        bounds = list(onsets[1:]) + [policy.ticks_per_bar]
        for onset, nxt in zip(onsets, bounds):
            room = nxt - onset - 1
            sounding = min(room, rendition.cap)
            if rendition.jitter and rng.random() < rendition.jitter:
                sounding += 1 if rng.random() < 0.5 else -1
            sounding = max(1, min(sounding, room))
            bar[onset : onset + sounding] = [on_id] * sounding
        ticks.extend(bar)
    return TickSequence(tuple(ticks), alphabet, song_id)


def generate_rhythm_corpus(policy: RhythmPolicy, bars_per_sequence: int = 1):
    """
    Labeled train and test corpora emulating several instruments playing one song.

    Labels come from the distinct rhythms of a legato reference rendition;
    each rendition contributes one item per label (its first occurrence).

    Returns:
        (train, test) lists of labeled TickSequence
    """
    bars = song_layout(policy)
    params = AudioParams(ticks_per_bar=policy.ticks_per_bar, bars_per_sequence=bars_per_sequence)
    reference = render_song(bars, policy, Rendition(policy.ticks_per_bar), None, "reference")
    labels = [label for label, _ in dedupe_rhythms(split_bars(reference, params))]

    def collect(renditions, offset):
        items = []
        for index, rendition in enumerate(renditions):
            rng = np.random.default_rng([policy.seed, offset + index])
            chunks = split_bars(render_song(bars, policy, rendition, rng, f"r{offset + index}"), params)
            seen = set()
            for label, chunk in zip(labels, chunks):
                if label not in seen:
                    seen.add(label)
                    items.append(chunk.with_label(label))
        return items

    train = collect(policy.train, 100)
    test = collect(policy.test, 200)
    logger.info(f"Rhythm corpus: {len(set(labels))} labels, {len(train)} train / {len(test)} test items ({bars_per_sequence} bar(s) each)")
    return train, test


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------


def _build(lengths, alphabet, shared_symbol, seq_id):
    durations, intervals = lengths
    states = tuple(0 for _ in durations) if shared_symbol else tuple(range(len(durations)))
    layout = SegmentSequence.from_lengths(states, durations, intervals)
    return render(layout, alphabet, seq_id, seq_id), layout


def _draw_offset(rng, jitter):
    # three draws per element whatever the outcome
    u, magnitude, sign = rng.random(), int(rng.integers(1, max(jitter.max_shift, 1) + 1)), int(rng.integers(0, 2))
    if jitter.max_shift == 0 or u >= jitter.prob:
        return 0
    return magnitude if sign else -magnitude


def _jitter_once(durations, intervals, jitter, rng, length):
    values = list(durations) + list(intervals)
    n = len(durations)
    for j, value in enumerate(values):
        offset = _draw_offset(rng, jitter)
        is_interval = j >= n
        if jitter.hits(is_interval) and value + offset >= (0 if is_interval else 1):
            values[j] = value + offset
    if length is not None:
        excess = sum(values) - length
        slot = len(values) - 1 if intervals and jitter.hits(True) else n - 1
        floor = 0 if slot >= n else 1
        if values[slot] - excess < floor:
            return durations, intervals
        values[slot] -= excess
    return tuple(values[:n]), tuple(values[n:])


def _rendition(value):
    return value if isinstance(value, Rendition) else Rendition(**value)
