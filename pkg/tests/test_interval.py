import math
from decimal import Decimal, getcontext

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models import EmptySupportError, IntervalModel, InvalidParameterError, UntrainedIntervalError, fallback_density, gaussian_pdf, interval_prob, truncate_support

PI_50 = Decimal("3.14159265358979323846264338327950288419716939937510")


def decimal_pdf(x, mu, sigma):
    getcontext().prec = 50
    x, mu, sigma = Decimal(repr(x)), Decimal(repr(mu)), Decimal(repr(sigma))
    z = (x - mu) / sigma
    return float((-(z * z) / 2).exp() / (2 * PI_50 * sigma * sigma).sqrt())


# ---------------------------------------------------------------------
# gaussian_pdf
# ---------------------------------------------------------------------


def test_gaussian_peak_of_unit_normal():
    assert gaussian_pdf(2, 2, 1) == pytest.approx(0.3989422804, abs=1e-10)


def test_gaussian_one_sigma_point():
    assert gaussian_pdf(3, 2, 1) == pytest.approx(0.2419707245, abs=1e-10)


def test_gaussian_matches_high_precision_closed_form():
    assert abs(gaussian_pdf(0, 4, 2) - decimal_pdf(0, 4, 2)) <= 1e-12
    for x in range(0, 9):
        for mu in (0.0, 0.5, 2.0, 4.25):
            for sigma in (0.5, 1.0, 2.0, 3.7):
                assert abs(gaussian_pdf(x, mu, sigma) - decimal_pdf(x, mu, sigma)) <= 1e-12


@pytest.mark.parametrize("sigma", [0.0, -1.0])
def test_gaussian_rejects_non_positive_sigma(sigma):
    with pytest.raises(InvalidParameterError):
        gaussian_pdf(1, 0, sigma)


@given(
    mu=st.floats(min_value=-20, max_value=20),
    sigma=st.floats(min_value=0.1, max_value=10),
    d=st.floats(min_value=0, max_value=30),
)
@settings(max_examples=200)
def test_gaussian_is_symmetric_and_peaks_at_mean(mu, sigma, d):
    left, right = gaussian_pdf(mu - d, mu, sigma), gaussian_pdf(mu + d, mu, sigma)
    assert left == pytest.approx(right, rel=1e-9, abs=1e-300)
    assert gaussian_pdf(mu, mu, sigma) >= max(left, right)
    assert gaussian_pdf(mu, mu, sigma) > 0


# ---------------------------------------------------------------------
# truncate_support
# ---------------------------------------------------------------------


def test_support_one_sigma():
    assert truncate_support(2, 1, 0.24) == (1, 3)


def test_support_threshold_above_peak():
    with pytest.raises(EmptySupportError):
        truncate_support(2, 1, 0.5)


def test_support_clamped_at_zero():
    assert truncate_support(0, 1, 0.05) == (0, 2)


@given(
    mu=st.floats(min_value=0, max_value=20),
    sigma=st.floats(min_value=0.5, max_value=5),
    fraction=st.floats(min_value=0.001, max_value=0.6),
)
@settings(max_examples=200)
def test_support_edges_bracket_the_threshold(mu, sigma, fraction):
    theta = fraction * gaussian_pdf(mu, mu, sigma)
    x_lo, x_hi = truncate_support(mu, sigma, theta)
    assert 0 <= x_lo <= x_hi
    assert gaussian_pdf(x_lo, mu, sigma) >= theta
    assert gaussian_pdf(x_hi, mu, sigma) >= theta
    assert gaussian_pdf(x_hi + 1, mu, sigma) < theta
    assert x_lo == 0 or gaussian_pdf(x_lo - 1, mu, sigma) < theta


@given(
    mu=st.floats(min_value=0, max_value=20),
    sigma=st.floats(min_value=0.5, max_value=5),
    low=st.floats(min_value=0.001, max_value=0.6),
    high=st.floats(min_value=0.001, max_value=0.6),
)
@settings(max_examples=200)
def test_support_shrinks_as_threshold_rises(mu, sigma, low, high):
    low, high = sorted((low, high))
    peak = gaussian_pdf(mu, mu, sigma)
    wide = truncate_support(mu, sigma, low * peak)
    narrow = truncate_support(mu, sigma, high * peak)
    assert wide[0] <= narrow[0] <= narrow[1] <= wide[1]


# ---------------------------------------------------------------------
# IntervalModel and interval_prob
# ---------------------------------------------------------------------


def test_fit_single_sample_uses_sigma_floor():
    model = IntervalModel.fit([2], sigma_floor=0.5, theta_pt=1e-4)
    assert (model.mu, model.sigma, model.n) == (2.0, 0.5, 1)


def test_fit_uses_unbiased_standard_deviation():
    model = IntervalModel.fit([1, 3], sigma_floor=0.5, theta_pt=1e-4)
    assert model.mu == 2.0
    assert model.sigma == pytest.approx(math.sqrt(2))


def test_fit_rejects_empty_samples():
    with pytest.raises(InvalidParameterError):
        IntervalModel.fit([], sigma_floor=0.5, theta_pt=1e-4)


def test_in_support_density(interval_model):
    models = {(0, 1): interval_model(2, 1, 0, 4)}
    assert interval_prob(models, 0, 1, 2, c=0.5) == pytest.approx(0.3989422804, abs=1e-10)


def test_out_of_support_uses_scaled_minimum(interval_model):
    model = interval_model(2, 1, 0, 4)
    models = {(0, 1): model}
    expected = min(gaussian_pdf(0, 2, 1), gaussian_pdf(4, 2, 1)) * 0.5
    assert interval_prob(models, 0, 1, 7, c=0.5) == expected
    assert interval_prob(models, 0, 1, 7, c=0.5) == fallback_density(models, 0.5)


def test_fallback_equals_exhaustive_minimum(interval_model):
    models = {
        (0, 1): interval_model(2, 1, 1, 3),
        (1, 0): interval_model(5, 0.8, 4, 7),
        (1, 2): interval_model(0.5, 2, 0, 5),
    }
    scan = min(gaussian_pdf(x, m.mu, m.sigma) for m in models.values() for x in range(m.x_lo, m.x_hi + 1))
    assert interval_prob(models, 0, 1, 9, c=0.25) == pytest.approx(scan * 0.25, rel=1e-15)
    # a pair that was never trained falls back even at its "natural" length
    assert interval_prob(models, 2, 0, 2, c=0.25) == pytest.approx(scan * 0.25, rel=1e-15)


def test_fallback_is_below_every_in_support_density(interval_model):
    models = {(0, 1): interval_model(2, 1, 0, 4), (1, 0): interval_model(1, 0.5, 0, 2)}
    floor = fallback_density(models, 0.5)
    for (a, b), m in models.items():
        for x in range(m.x_lo, m.x_hi + 1):
            assert interval_prob(models, a, b, x, 0.5) > floor


def test_no_interval_model_anywhere():
    with pytest.raises(UntrainedIntervalError):
        interval_prob({}, 0, 1, 2, c=0.5)
