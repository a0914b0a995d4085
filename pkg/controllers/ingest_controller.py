"""
Waveform to on/off tick sequences, bars and rhythm labels
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from constants import OFF_SYMBOL, ON_SYMBOL
from models import Alphabet, DataError, InvalidParameterError, TickSequence, UnsupportedFormatError

logger = logging.getLogger(__name__)

ON_OFF = Alphabet.from_names([ON_SYMBOL], OFF_SYMBOL)


@dataclass(frozen=True)
class AudioParams:
    """
    Tokenizer and bar-splitting options.

    Args:
        sample_rate: Expected rate in Hz (None: take it from the file)
        hop: Samples per tick (None: sample_rate // 16)
        rms_threshold: On/off threshold relative to the loudest window
        ticks_per_bar: Ticks in one bar
        bars_per_sequence: Bars joined into one sequence
    """

    sample_rate: int | None = None
    hop: int | None = None
    rms_threshold: float = 0.1
    ticks_per_bar: int = 16
    bars_per_sequence: int = 1

    def __post_init__(self):
        if self.hop is not None and self.hop < 1:
            raise InvalidParameterError(f"must be >= 1, got {self.hop}", field="hop")
        if not 0.0 < self.rms_threshold < 1.0:
            raise InvalidParameterError(f"must lie in (0, 1), got {self.rms_threshold}", field="rms_threshold")
        if self.ticks_per_bar < 1:
            raise InvalidParameterError(f"must be >= 1, got {self.ticks_per_bar}", field="ticks_per_bar")
        if self.bars_per_sequence < 1:
            raise InvalidParameterError(f"must be >= 1, got {self.bars_per_sequence}", field="bars_per_sequence")

    def hop_for(self, sample_rate: int) -> int:
        if self.hop is not None:
            return self.hop
        return max(int(sample_rate) // 16, 1)

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    def to_dict(self):
        return asdict(self)


def hop_from_tempo(sample_rate: int, bpm: float, ticks_per_beat: int = 4) -> int:
    """Samples per tick for ``ticks_per_beat`` ticks per beat at ``bpm``."""
    if bpm <= 0 or ticks_per_beat < 1:
        raise InvalidParameterError(f"need bpm > 0 and ticks_per_beat >= 1, got {bpm}, {ticks_per_beat}", field="tempo")
    return max(int(round(sample_rate * 60.0 / (bpm * ticks_per_beat))), 1)


def read_wav(path):
    """
    Read a 16-bit PCM mono WAV file.

    Returns:
        (sample_rate, int16 samples)

    Raises:
        UnsupportedFormatError: for stereo, non-16-bit or empty files
    """
    path = Path(path)
    try:
        sample_rate, pcm = wavfile.read(path)
    except ValueError as err:
        raise UnsupportedFormatError(f"unreadable WAV ({err})", field=str(path)) from err
    if pcm.dtype != np.int16:
        raise UnsupportedFormatError(f"expected 16-bit PCM, got {pcm.dtype}", field=str(path))
    if pcm.ndim != 1:
        raise UnsupportedFormatError(f"expected mono, got {pcm.shape[1]} channels", field=str(path))
    if pcm.size == 0:
        raise UnsupportedFormatError("no samples", field=str(path))
    return int(sample_rate), pcm


def tokenize_pcm(pcm, hop: int, rms_threshold: float, seq_id="", label=None) -> TickSequence:
    """
    One tick per hop window: "on" when the window RMS reaches
    ``rms_threshold`` times the loudest window RMS, "off" otherwise.
    """
    samples = np.asarray(pcm, dtype=np.float64)
    n_ticks = samples.size // hop
    if n_ticks == 0:
        raise DataError(f"{samples.size} samples do not fill one hop of {hop}", field=seq_id or "pcm")
    if samples.size % hop:
        logger.warning(f"Dropping {samples.size % hop} trailing samples of {seq_id or 'input'}")

    frames = samples[: n_ticks * hop].reshape(n_ticks, hop)
    rms = np.sqrt(np.mean(frames * frames, axis=1))
    peak = rms.max()
    on = rms >= rms_threshold * peak if peak > 0 else np.zeros(n_ticks, dtype=bool)
    on_id = ON_OFF.index(ON_SYMBOL)
    return TickSequence(tuple(np.where(on, on_id, ON_OFF.gap_id)), ON_OFF, seq_id, label)


def tokenize_wav(source, params: AudioParams, seq_id=None, label=None) -> TickSequence:
    """
    Tokenize a WAV file (path) or an already loaded mono sample array.

    Args:
        source: Path to a WAV file, or a 1-D sample array at ``params.sample_rate``
        params: Tokenizer options
        seq_id: Sequence id (defaults to the file stem)
        label: Optional class label

    Returns:
        TickSequence over the on/off alphabet
    """
    if isinstance(source, (str, Path)):
        sample_rate, pcm = read_wav(source)
        if params.sample_rate is not None and params.sample_rate != sample_rate:
            logger.warning(f"{source}: sample rate {sample_rate} Hz differs from the configured {params.sample_rate} Hz")
        seq_id = Path(source).stem if seq_id is None else seq_id
    else:
        if params.sample_rate is None and params.hop is None:
            raise InvalidParameterError("raw samples need a sample_rate or a hop", field="sample_rate")
        sample_rate, pcm = params.sample_rate, np.asarray(source)
        if pcm.ndim != 1:
            raise UnsupportedFormatError(f"expected mono samples, got shape {pcm.shape}", field="pcm")
    return tokenize_pcm(pcm, params.hop_for(sample_rate or 16), params.rms_threshold, seq_id or "", label)


def split_bars(seq: TickSequence, params: AudioParams) -> list[TickSequence]:
    """Consecutive chunks of ``ticks_per_bar * bars_per_sequence`` ticks; a partial last chunk is dropped."""
    size = params.ticks_per_bar * params.bars_per_sequence
    if seq.length < params.ticks_per_bar:
        logger.warning(f"Sequence {seq.id!r} is shorter than one bar ({seq.length} < {params.ticks_per_bar} ticks)")
    n_chunks = seq.length // size
    prefix = seq.id or "bar"
    return [
        TickSequence(seq.ticks[i * size : (i + 1) * size], seq.alphabet, f"{prefix}#{i}", seq.label)
        for i in range(n_chunks)
    ]


def dedupe_rhythms(bars) -> list[tuple[str, TickSequence]]:
    """Label every bar with the id of its distinct tick pattern (r0, r1, ... in first-occurrence order)."""
    labels = {}
    tagged = []
    for bar in bars:
        label = labels.setdefault(bar.ticks, f"r{len(labels)}")
        tagged.append((label, bar.with_label(label)))
    return tagged
