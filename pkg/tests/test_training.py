import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from controllers.decoding_controller import viterbi_dihmm
from controllers.synth_controller import GenPolicy, generate
from controllers.training_controller import TrainingConfig, fit_label_set, fit_model, with_segments
from models import (
    VARIANT,
    Alphabet,
    CompatibilityError,
    DataError,
    InvalidParameterError,
    Segment,
    SegmentSequence,
    TickSequence,
    render,
    segments_from_ticks,
)

ABC = Alphabet.from_names(["A", "B", "C"], "_")


# ---------------------------------------------------------------------
# segmentation
# ---------------------------------------------------------------------


def test_run_length_with_interval(ticks):
    layout = segments_from_ticks(ticks("AA__B"))
    assert layout.segments == (Segment(0, 0, 2), Segment(1, 4, 1))
    assert layout.intervals == (2,)


def test_single_run(ticks):
    layout = segments_from_ticks(ticks("AAA"))
    assert layout.segments == (Segment(0, 0, 3),)
    assert layout.intervals == ()


def test_adjacent_symbols_and_gaps(ticks):
    layout = segments_from_ticks(ticks("_ABB__"))
    assert layout.segments == (Segment(0, 1, 1), Segment(1, 2, 2))
    assert layout.leading_gap == 1
    assert layout.length == 6


def test_all_gap_sequence_has_no_segments(ticks):
    assert len(segments_from_ticks(ticks("____"))) == 0


def test_render_inverts_segmentation_exhaustively():
    for length in range(1, 9):
        for names in itertools.product("AB_", repeat=length):
            seq = TickSequence.from_names(names, ABC)
            assert render(segments_from_ticks(seq), ABC) == seq


@st.composite
def layouts(draw):
    n = draw(st.integers(min_value=1, max_value=6))
    states = [draw(st.integers(min_value=0, max_value=2))]
    for _ in range(n - 1):
        states.append(draw(st.sampled_from([s for s in range(3) if s != states[-1]])))
    durations = draw(st.lists(st.integers(min_value=1, max_value=5), min_size=n, max_size=n))
    intervals = draw(st.lists(st.integers(min_value=0, max_value=4), min_size=n - 1, max_size=n - 1))
    trailing = draw(st.integers(min_value=0, max_value=3))
    return SegmentSequence.from_lengths(states, durations, intervals, length=sum(durations) + sum(intervals) + trailing)


@given(layout=layouts())
def test_segmentation_inverts_render(layout):
    assert segments_from_ticks(render(layout, ABC)) == layout


# ---------------------------------------------------------------------
# fit_model
# ---------------------------------------------------------------------


def test_single_sequence_counts(ticks):
    model = fit_model(with_segments([ticks("AA__B")]), TrainingConfig(d_cap=4), VARIANT.DIHMM)
    assert model.initial.p(0, 2) == 1.0
    assert model.transitions.p(0, 2, 1, 1) == 1.0
    assert model.transitions.probs.sum() == 1.0
    interval = model.intervals[(0, 1)]
    assert (interval.mu, interval.sigma, interval.n) == (2.0, 0.5, 1)
    assert model.states == ("A", "B")


def test_interval_spread_across_sequences(ticks):
    model = fit_model(with_segments([ticks("A_B"), ticks("A___B")]), TrainingConfig(d_cap=4), VARIANT.DIHMM)
    interval = model.intervals[(0, 1)]
    assert interval.mu == 2.0
    assert interval.sigma == pytest.approx(math.sqrt(2))
    assert interval.n == 2


def test_hsmm_has_no_interval_models(ticks):
    model = fit_model(with_segments([ticks("AA__B")]), TrainingConfig(d_cap=4), VARIANT.HSMM)
    assert model.intervals == {}
    assert model.variant is VARIANT.HSMM


def test_unseen_transition_stays_impossible(ticks):
    model = fit_model(with_segments([ticks("AA__B")]), TrainingConfig(d_cap=4), VARIANT.DIHMM)
    assert model.transitions.p(1, 1, 0, 2) == 0.0
    assert viterbi_dihmm(model, ticks("B__AA")).impossible


def test_additive_smoothing_values(ticks):
    model = fit_model(with_segments([ticks("AB")]), TrainingConfig(smoothing_alpha=1.0, d_cap=2), VARIANT.HSMM)
    assert model.emissions.probs[0].tolist() == pytest.approx([0.5, 0.25, 0.25])
    assert model.transitions.p(0, 1, 1, 1) == pytest.approx(2 / 3)
    assert model.transitions.p(0, 1, 1, 2) == pytest.approx(1 / 3)
    assert model.transitions.p(0, 2, 1, 1) == pytest.approx(0.5)
    assert model.transitions.p(0, 1, 0, 1) == 0.0
    assert model.initial.p(0, 1) == pytest.approx(0.4)
    assert model.initial.p(1, 2) == pytest.approx(0.2)


def test_unobserved_state_emits_uniformly(ticks):
    model = fit_model(with_segments([ticks("AA")]), TrainingConfig(d_cap=2), VARIANT.HSMM)
    assert model.emissions.probs[1].tolist() == pytest.approx([1 / 3] * 3)


def test_duration_above_cap_names_the_segment(ticks):
    with pytest.raises(DataError, match="duration 5 > d_cap 4"):
        fit_model(with_segments([ticks("AAAAA", "long")]), TrainingConfig(d_cap=4))


def test_forbidden_self_transition(ticks):
    with pytest.raises(DataError, match="--allow-self"):
        fit_model(with_segments([ticks("A_A")]), TrainingConfig(d_cap=4))
    allowed = fit_model(with_segments([ticks("A_A")]), TrainingConfig(d_cap=4, forbid_self_transition=False))
    assert allowed.transitions.p(0, 1, 0, 1) == 1.0


def test_empty_inputs(ticks):
    with pytest.raises(DataError):
        fit_model([])
    with pytest.raises(DataError):
        fit_model(with_segments([ticks("___")]))


def test_mixed_alphabets(ticks):
    other = TickSequence.from_names(["A"], Alphabet.from_names(["A", "B"], "-"))
    with pytest.raises(CompatibilityError):
        fit_model(with_segments([ticks("A"), other]))


@pytest.mark.parametrize("kwargs", [{"smoothing_alpha": -1}, {"sigma_floor": 0}, {"theta_pt": 0}, {"c": 1.5}, {"d_cap": 0}])
def test_training_config_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        TrainingConfig(**kwargs)


@pytest.mark.parametrize("k", [2, 3, 7])
def test_duplicating_data_leaves_model_unchanged(ticks, k):
    data = with_segments([ticks("AA__B_A"), ticks("_BB_A")])
    once = fit_model(data, TrainingConfig(d_cap=4), VARIANT.DIHMM)
    repeated = fit_model(data * k, TrainingConfig(d_cap=4), VARIANT.DIHMM)
    assert repeated.transitions == once.transitions
    assert repeated.emissions == once.emissions
    assert repeated.initial == once.initial
    for pair, interval in once.intervals.items():
        other = repeated.intervals[pair]
        assert (other.mu, other.sigma, other.x_lo, other.x_hi) == (interval.mu, interval.sigma, interval.x_lo, interval.x_hi)
        assert other.n == k * interval.n


@given(
    texts=st.lists(st.text(alphabet="ABC_", min_size=1, max_size=12), min_size=1, max_size=6),
    alpha=st.sampled_from([0.0, 0.1, 1.0]),
)
@settings(max_examples=150, deadline=None)
def test_fitted_models_are_valid(texts, alpha):
    seqs = [TickSequence.from_names(list(text), ABC) for text in texts]
    if all(len(segments_from_ticks(s)) == 0 for s in seqs):
        return
    cfg = TrainingConfig(smoothing_alpha=alpha, d_cap=12, forbid_self_transition=False)
    model = fit_model(with_segments(seqs), cfg, VARIANT.DIHMM)

    assert model.initial.probs.sum() == pytest.approx(1.0)
    rows = model.transitions.probs.reshape(model.n_states * model.d_cap, -1).sum(axis=1)
    assert all(total == 0.0 or total == pytest.approx(1.0) for total in rows)
    assert np.allclose(model.emissions.probs.sum(axis=1), 1.0)

    gaps = {}
    for seq in seqs:
        layout = segments_from_ticks(seq)
        for prev, nxt in zip(layout.segments, layout.segments[1:]):
            gaps.setdefault((prev.state, nxt.state), []).append(nxt.start - prev.end)
    assert set(model.intervals) == set(gaps)
    for pair, samples in gaps.items():
        assert model.intervals[pair].mu == sum(samples) / len(samples)
        assert model.intervals[pair].sigma >= cfg.sigma_floor


def test_generated_corpus_stays_within_policy_ranges():
    policy = GenPolicy(n_states=(3, 4), d_min=1, d_max=10, l_min=1, l_max=4, length=14, count=40, seed=7)
    for seq, layout in generate(policy):
        model = fit_model([(seq, layout)], TrainingConfig(d_cap=16), VARIANT.DIHMM)
        used = np.flatnonzero(model.initial.probs.any(axis=0) | model.transitions.probs.any(axis=(0, 1, 2))) + 1
        assert used.min() >= 1 and used.max() <= 10
        assert all(1 <= interval.mu <= 4 for interval in model.intervals.values())


# ---------------------------------------------------------------------
# fit_label_set
# ---------------------------------------------------------------------


def _labeled(ticks):
    texts = {"x": ["AA__B", "AA___B"], "y": ["A_B", "A__BB"], "z": ["B_A", "BB__A"]}
    return with_segments([ticks(text, f"{label}{i}", label) for label, group in texts.items() for i, text in enumerate(group)])


def test_one_model_per_label(ticks):
    models = fit_label_set(_labeled(ticks), TrainingConfig(d_cap=4))
    assert list(models) == ["x", "y", "z"]
    assert all(model.label == label for label, model in models.items())


def test_threaded_fit_matches_sequential(ticks):
    data = _labeled(ticks)
    assert fit_label_set(data, TrainingConfig(d_cap=4), workers=3) == fit_label_set(data, TrainingConfig(d_cap=4))


def test_single_label_matches_fit_model(ticks):
    data = with_segments([ticks("AA__B", "a", "only"), ticks("A_B", "b", "only")])
    models = fit_label_set(data, TrainingConfig(d_cap=4))
    assert models == {"only": fit_model(data, TrainingConfig(d_cap=4))}


def test_unlabeled_item(ticks):
    with pytest.raises(DataError):
        fit_label_set(with_segments([ticks("AB")]))
