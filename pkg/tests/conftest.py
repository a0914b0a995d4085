import numpy as np
import pytest

from models import VARIANT, Alphabet, DihmmModel, EmissionTable, InitialTable, IntervalModel, TickSequence, TransitionTable


@pytest.fixture
def ab_alphabet():
    return Alphabet.from_names(["A", "B"], "_")


@pytest.fixture
def ticks(ab_alphabet):
    """Build a TickSequence from a string of one-character symbols."""

    def make(text, seq_id="", label=None, alphabet=None):
        return TickSequence.from_names(list(text), alphabet or ab_alphabet, seq_id, label)

    return make


def build_model(
    alphabet,
    n_states,
    d_cap,
    pi,
    emit,
    trans=None,
    intervals=None,
    variant=VARIANT.DIHMM,
    label="m",
    c=0.5,
    forbid_self=True,
    sigma_floor=0.5,
    theta_pt=1e-4,
):
    """
    Hand-built model from sparse dicts.

    pi: {(m, d): p}; trans: {(m', d', m, d): p}; emit: list of rows;
    intervals: {(m', m): IntervalModel}.
    """
    pi_probs = np.zeros((n_states, d_cap))
    for (m, d), p in pi.items():
        pi_probs[m, d - 1] = p
    trans_probs = np.zeros((n_states, d_cap, n_states, d_cap))
    for (mp, dp, m, d), p in (trans or {}).items():
        trans_probs[mp, dp - 1, m, d - 1] = p
    return DihmmModel(
        alphabet=alphabet,
        states=tuple(f"S{m}" for m in range(n_states)),
        transitions=TransitionTable(trans_probs),
        emissions=EmissionTable(np.asarray(emit, dtype=float)),
        initial=InitialTable(pi_probs),
        intervals=intervals or {},
        variant=variant,
        label=label,
        c=c,
        theta_pt=theta_pt,
        sigma_floor=sigma_floor,
        forbid_self=forbid_self,
    )


@pytest.fixture
def model_builder():
    return build_model


@pytest.fixture
def interval_model():
    """IntervalModel with explicit support, bypassing the fit."""

    def make(mu, sigma, x_lo, x_hi, theta_pt=1e-4, n=1):
        return IntervalModel(mu, sigma, theta_pt, x_lo, x_hi, n)

    return make
