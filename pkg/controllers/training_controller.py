"""
Counting estimators for the model tables and per-pair interval fits
"""

from __future__ import annotations

import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from constants import DEFAULT_D_CAP, DEFAULT_FALLBACK_C, DEFAULT_SIGMA_FLOOR, DEFAULT_THETA_PT
from models import (
    VARIANT,
    CompatibilityError,
    DataError,
    DihmmModel,
    EmissionTable,
    InitialTable,
    IntervalModel,
    InvalidParameterError,
    TransitionTable,
    parse_enum,
    segments_from_ticks,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingConfig:
    smoothing_alpha: float = 0.0
    sigma_floor: float = DEFAULT_SIGMA_FLOOR
    theta_pt: float = DEFAULT_THETA_PT
    c: float = DEFAULT_FALLBACK_C
    d_cap: int = DEFAULT_D_CAP
    forbid_self_transition: bool = True

    def __post_init__(self):
        if not self.smoothing_alpha >= 0:
            raise InvalidParameterError(f"must be >= 0, got {self.smoothing_alpha}", field="smoothing_alpha")
        if not self.sigma_floor > 0:
            raise InvalidParameterError(f"must be > 0, got {self.sigma_floor}", field="sigma_floor")
        if not self.theta_pt > 0:
            raise InvalidParameterError(f"must be > 0, got {self.theta_pt}", field="theta_pt")
        if not 0 <= self.c <= 1:
            raise InvalidParameterError(f"must lie in [0, 1], got {self.c}", field="c")
        if int(self.d_cap) < 1:
            raise InvalidParameterError(f"must be >= 1, got {self.d_cap}", field="d_cap")

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    def to_dict(self):
        return asdict(self)


def with_segments(sequences):
    """Pair each tick sequence with its run-length segmentation."""
    return [(seq, segments_from_ticks(seq)) for seq in sequences]


def fit_model(data, cfg: TrainingConfig | None = None, variant=VARIANT.DIHMM, label=None) -> DihmmModel:
    """
    Estimate a model from fully segmented sequences.

    States are the alphabet's event symbols in order. Transitions, emissions
    and pi are additive-smoothed relative frequencies; DI-HMM models also get
    one interval Gaussian per observed state pair.

    Args:
        data: List of (TickSequence, SegmentSequence)
        cfg: Training options
        variant: VARIANT.HSMM or VARIANT.DIHMM
        label: Model label (defaults to the first sequence's label)

    Returns:
        The trained DihmmModel

    Raises:
        DataError: empty data, a duration above d_cap, or a forbidden self-transition
    """
    cfg = cfg or TrainingConfig()
    variant = parse_enum(VARIANT, variant, field="variant")
    if not data:
        raise DataError("no training data", field="data")

    alphabet = data[0][0].alphabet
    n_states, d_cap, n_symbols = len(alphabet.event_ids), int(cfg.d_cap), alphabet.size
    if n_states < 1:
        raise DataError("the alphabet has no event symbols", field="alphabet")

    trans_counts = np.zeros((n_states, d_cap, n_states, d_cap))
    emit_counts = np.zeros((n_states, n_symbols))
    pi_counts = np.zeros((n_states, d_cap))
    interval_samples = defaultdict(list)

    n_first = 0
    for seq, segmentation in data:
        name = seq.id or "sequence"
        if seq.alphabet != alphabet:
            raise CompatibilityError("all training sequences must share one alphabet", field=name)
        previous = None
        for n, segment in enumerate(segmentation.segments):
            if not 0 <= segment.state < n_states:
                raise DataError(f"segment {n} has state {segment.state} outside M={n_states}", field=name)
            if segment.duration > d_cap:
                raise DataError(f"segment {n} (start {segment.start}) has duration {segment.duration} > d_cap {d_cap}", field=name)
            np.add.at(emit_counts[segment.state], list(seq.ticks[segment.start : segment.end]), 1.0)
            if previous is None:
                pi_counts[segment.state, segment.duration - 1] += 1
                n_first += 1
            else:
                if cfg.forbid_self_transition and previous.state == segment.state:
                    raise DataError(
                        f"segment {n} repeats state {segment.state} but self-transitions are forbidden"
                        " (set forbid_self_transition=false, or pass --allow-self to train)",
                        field=name,
                    )
                trans_counts[previous.state, previous.duration - 1, segment.state, segment.duration - 1] += 1
                interval_samples[(previous.state, segment.state)].append(segment.start - previous.end)
            previous = segment

    if n_first == 0:
        raise DataError("every training sequence is empty (no segments)", field="data")

    alpha = float(cfg.smoothing_alpha)
    intervals = {}
    if variant is VARIANT.DIHMM:
        intervals = {pair: IntervalModel.fit(samples, cfg.sigma_floor, cfg.theta_pt) for pair, samples in interval_samples.items()}

    model = DihmmModel(
        alphabet=alphabet,
        states=alphabet.event_names,
        transitions=TransitionTable(_smooth_transitions(trans_counts, alpha, cfg.forbid_self_transition)),
        emissions=EmissionTable(_smooth_emissions(emit_counts, alpha)),
        initial=InitialTable((pi_counts + alpha) / (n_first + alpha * pi_counts.size)),
        intervals=intervals,
        variant=variant,
        label=(data[0][0].label or "") if label is None else label,
        c=cfg.c,
        theta_pt=cfg.theta_pt,
        sigma_floor=cfg.sigma_floor,
        forbid_self=cfg.forbid_self_transition,
    )
    logger.debug(f"Trained {variant.value} model {model.label!r} from {len(data)} sequences ({len(intervals)} interval pairs)")
    return model


def fit_label_set(data, cfg: TrainingConfig | None = None, variant=VARIANT.DIHMM, workers: int = 1) -> dict:
    """
    Fit one model per label.

    Args:
        data: List of labeled (TickSequence, SegmentSequence)
        cfg: Training options
        variant: VARIANT.HSMM or VARIANT.DIHMM
        workers: Thread count for fitting labels concurrently

    Returns:
        Mapping label -> DihmmModel in first-occurrence order
    """
    groups = defaultdict(list)
    for seq, segmentation in data:
        if seq.label is None:
            raise DataError("every training item needs a label", field=seq.id or "label")
        groups[seq.label].append((seq, segmentation))

    if workers > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {label: pool.submit(fit_model, items, cfg, variant, label) for label, items in groups.items()}
            models = {label: future.result() for label, future in futures.items()}
    else:
        models = {label: fit_model(items, cfg, variant, label) for label, items in groups.items()}

    logger.info(f"Trained {len(models)} {parse_enum(VARIANT, variant).value} models from {len(data)} sequences")
    return models


# ----------------------------------------------------------------------
# smoothing
# ----------------------------------------------------------------------


def _smooth_transitions(counts, alpha, forbid_self):
    n_states, d_cap = counts.shape[0], counts.shape[1]
    allowed = np.ones((n_states, 1, n_states, 1), dtype=bool)
    if forbid_self:
        allowed[np.arange(n_states), 0, np.arange(n_states), 0] = False
    allowed = np.broadcast_to(allowed, counts.shape)

    row_size = allowed.reshape(n_states * d_cap, -1).sum(axis=1).reshape(n_states, d_cap, 1, 1)
    totals = counts.sum(axis=(2, 3), keepdims=True)
    denominator = totals + alpha * row_size
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(allowed, (counts + alpha) / denominator, 0.0)
    return np.where(denominator > 0, probs, 0.0)


def _smooth_emissions(counts, alpha):
    n_symbols = counts.shape[1]
    totals = counts.sum(axis=1, keepdims=True) + alpha * n_symbols
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = (counts + alpha) / totals
    return np.where(totals > 0, probs, 1.0 / n_symbols)
