"""
Extended Viterbi decoding, scoring and multi-model classification
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import softmax

from models import (
    GAP_MODE,
    CompatibilityError,
    DihmmModel,
    InvalidParameterError,
    Score,
    Segment,
    SegmentSequence,
    TickSequence,
    interval_horizon,
    parse_enum,
)
from utils.viterbi_kernel import extended_viterbi

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecodeConfig:
    """
    Decoder options.

    Args:
        gap_mode: STRICT (interval ticks must be the gap symbol) or SKIP (unconstrained, unscored)
        allow_leading_gap: Ticks before the first segment are allowed and unscored
        allow_trailing_gap: Ticks after the last segment are allowed and unscored
        normalize_scores: Attach softmax shares across a model set when classifying
        interval_slack: Extra interval length searched past the widest trained support
    """

    gap_mode: GAP_MODE = GAP_MODE.STRICT
    allow_leading_gap: bool = True
    allow_trailing_gap: bool = True
    normalize_scores: bool = False
    interval_slack: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gap_mode", parse_enum(GAP_MODE, self.gap_mode, field="gap_mode"))
        if int(self.interval_slack) < 0:
            raise InvalidParameterError(f"interval_slack must be >= 0, got {self.interval_slack}", field="interval_slack")

    @classmethod
    def from_dict(cls, data):
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self):
        data = asdict(self)
        data["gap_mode"] = self.gap_mode.value
        return data


@dataclass(frozen=True)
class Classification:
    """Outcome of ranking one sequence against a model set; ``label`` is None when no model explains it."""

    label: str | None
    unique: bool
    scores: dict = field(default_factory=dict)

    @property
    def unclassifiable(self) -> bool:
        return self.label is None


# ----------------------------------------------------------------------
# Decoders
# ----------------------------------------------------------------------


def viterbi_hsmm(model: DihmmModel, seq: TickSequence, cfg: DecodeConfig | None = None) -> Score:
    """
    Best segmentation under the duration-only recursion.

    Intervals between segments consume ticks but contribute no factor, so
    any interval models the model carries are ignored.
    """
    cfg = cfg or DecodeConfig()
    _check_alphabet(model, seq)
    log_int = np.zeros((model.n_states, model.n_states, seq.length + 1))
    return _decode(model, seq, cfg, log_int)


def viterbi_dihmm(model: DihmmModel, seq: TickSequence, cfg: DecodeConfig | None = None) -> Score:
    """
    Best segmentation with the interval factor and an explicit search over
    interval lengths ``0..L_cap``.

    Args:
        model: A DI-HMM variant model
        seq: Observation sequence over the model's alphabet
        cfg: Decoder options

    Returns:
        Score with the best path (empty, with a -inf score, when nothing aligns)
    """
    cfg = cfg or DecodeConfig()
    if not model.is_dihmm:
        raise CompatibilityError("viterbi_dihmm needs a dihmm model", field="variant")
    _check_alphabet(model, seq)
    if not model.intervals:
        logger.warning(f"Model {model.label!r} has no interval models; multi-segment paths are impossible")
        log_int = np.zeros((model.n_states, model.n_states, 0))
    else:
        log_int = _interval_table(model, interval_horizon(model, cfg.interval_slack, seq.length))
    return _decode(model, seq, cfg, log_int)


def score(model: DihmmModel, seq: TickSequence, cfg: DecodeConfig | None = None) -> Score:
    """Decode with the recursion matching the model's variant."""
    if model.is_dihmm:
        return viterbi_dihmm(model, seq, cfg)
    return viterbi_hsmm(model, seq, cfg)


def normalize_log_scores(log_likelihoods) -> np.ndarray:
    """Softmax across models; all-impossible rows give all zeros."""
    values = np.asarray(log_likelihoods, dtype=np.float64)
    if not np.isfinite(values).any():
        return np.zeros_like(values)
    return softmax(values)


def classify(models: dict, seq: TickSequence, cfg: DecodeConfig | None = None) -> Classification:
    """
    Rank ``seq`` against every model and pick the maximum-likelihood label.

    Ties go to the lexicographically smallest label. When every model scores
    -inf the result is unclassifiable (label None).
    """
    cfg = cfg or DecodeConfig()
    if not models:
        raise InvalidParameterError("classify needs at least one model", field="models")
    check_model_set(models)

    labels = sorted(models)
    scores = {label: score(models[label], seq, cfg) for label in labels}
    if cfg.normalize_scores:
        shares = normalize_log_scores([scores[label].log_likelihood for label in labels])
        scores = {label: scores[label].with_normalized(float(share)) for label, share in zip(labels, shares)}

    winner, unique = best_label({label: result.log_likelihood for label, result in scores.items()})
    if winner is None:
        logger.debug(f"Sequence {seq.id!r} is unclassifiable")
    return Classification(winner, unique, scores)


def best_label(log_likelihoods: dict):
    """
    Label with the largest log-likelihood and whether it is the only one.

    Ties go to the lexicographically smallest label; all -inf gives ``(None, False)``.
    """
    labels = sorted(log_likelihoods)
    values = [log_likelihoods[label] for label in labels]
    best = max(values)
    if best == -math.inf:
        return None, False
    return labels[values.index(best)], values.count(best) == 1


def check_model_set(models: dict):
    """All models must share one variant and one alphabet."""
    first = next(iter(models.values()))
    for label, model in models.items():
        if model.variant is not first.variant:
            raise CompatibilityError(f"variant {model.variant.value} differs from {first.variant.value}", field=f"model {label}")
        if model.alphabet != first.alphabet:
            raise CompatibilityError("alphabet differs from the rest of the model set", field=f"model {label}")


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------


def _check_alphabet(model, seq):
    if model.alphabet != seq.alphabet:
        raise CompatibilityError(f"sequence alphabet {seq.alphabet.names} differs from model alphabet {model.alphabet.names}", field=seq.id or "ticks")


def _interval_table(model, l_cap):
    base = model.log_tables.log_int
    width = l_cap + 1
    if width <= base.shape[2]:
        return np.ascontiguousarray(base[:, :, :width])
    pad = np.full((model.n_states, model.n_states, width - base.shape[2]), model.log_tables.log_fallback)
    return np.concatenate([base, pad], axis=2)


@lru_cache(maxsize=4096)
def _timeline_masks(seq, cfg):
    length = seq.length
    if cfg.gap_mode is GAP_MODE.SKIP:
        gap_run = np.arange(length + 1, dtype=np.int64)
        start_ok = np.full(length + 1, cfg.allow_leading_gap)
        end_ok = np.full(length + 1, cfg.allow_trailing_gap)
    else:
        is_gap = [seq.is_gap(t) for t in range(length)]
        gap_run = np.zeros(length + 1, dtype=np.int64)
        for s in range(1, length + 1):
            gap_run[s] = gap_run[s - 1] + 1 if is_gap[s - 1] else 0
        tail_gap = np.zeros(length + 1, dtype=np.bool_)
        tail_gap[length] = True
        for t in range(length - 1, -1, -1):
            tail_gap[t] = tail_gap[t + 1] and is_gap[t]
        start_ok = (gap_run == np.arange(length + 1)) if cfg.allow_leading_gap else np.zeros(length + 1, dtype=np.bool_)
        end_ok = tail_gap if cfg.allow_trailing_gap else np.zeros(length + 1, dtype=np.bool_)
    start_ok = np.array(start_ok, dtype=np.bool_)
    end_ok = np.array(end_ok, dtype=np.bool_)
    start_ok[0] = True
    end_ok[length] = True
    return gap_run, start_ok, end_ok


def _decode(model, seq, cfg, log_int):
    tables = model.log_tables
    ticks = np.asarray(seq.ticks, dtype=np.int64)
    length = ticks.size

    window = tables.log_emit[:, ticks]
    zero = np.isneginf(window)
    cum_log = np.zeros((model.n_states, length + 1))
    cum_log[:, 1:] = np.cumsum(np.where(zero, 0.0, window), axis=1)
    cum_zero = np.zeros((model.n_states, length + 1), dtype=np.int64)
    cum_zero[:, 1:] = np.cumsum(zero, axis=1)

    gap_run, start_ok, end_ok = _timeline_masks(seq, cfg)
    final, t, m, d, back_m, back_d, back_l = extended_viterbi(
        tables.log_pi, tables.log_a, cum_log, cum_zero, log_int, gap_run, start_ok, end_ok, not model.forbid_self
    )
    if final == -np.inf:
        return Score(-math.inf, best_path=SegmentSequence((), length))

    segments = []
    while True:
        segments.append(Segment(int(m), int(t - d), int(d)))
        prev_m = back_m[t, m, d - 1]
        if prev_m < 0:
            break
        t, m, d = t - d - back_l[t, m, d - 1], prev_m, back_d[t, m, d - 1]
    segments.reverse()
    return Score(float(final), best_path=SegmentSequence(tuple(segments), length))
