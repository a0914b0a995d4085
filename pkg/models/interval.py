"""
Gaussian interval model between two consecutive hidden states
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySupportError, InvalidParameterError, UntrainedIntervalError


def gaussian_pdf(x, mu: float, sigma: float):
    """
    Normal density ``exp(-(x - mu)^2 / (2 sigma^2)) / sqrt(2 pi sigma^2)``.

    Args:
        x: Interval length in ticks (scalar or array)
        mu: Mean interval
        sigma: Standard deviation, strictly positive

    Returns:
        The density, same shape as ``x``
    """
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}", field="sigma")
    z = (np.asarray(x, dtype=np.float64) - mu) / sigma
    density = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi * sigma * sigma)
    return float(density) if density.ndim == 0 else density


def truncate_support(mu: float, sigma: float, theta_pt: float) -> tuple[int, int]:
    """
    Integer tick range around ``round(mu)`` on which the density stays at or
    above ``theta_pt``, clamped to non-negative lengths.

    Raises:
        EmptySupportError: if no integer reaches ``theta_pt``
    """
    if not theta_pt > 0:
        raise InvalidParameterError(f"theta_pt must be > 0, got {theta_pt}", field="theta_pt")
    peak = gaussian_pdf(mu, mu, sigma)
    if theta_pt >= peak:
        raise EmptySupportError(f"theta_pt {theta_pt} is not below the peak density {peak:.6g}", field="theta_pt")

    center = max(math.floor(mu + 0.5), 0)
    if gaussian_pdf(center, mu, sigma) < theta_pt:
        raise EmptySupportError(f"no integer interval reaches density {theta_pt} (mu={mu}, sigma={sigma})", field="theta_pt")

    x_lo = center
    while x_lo > 0 and gaussian_pdf(x_lo - 1, mu, sigma) >= theta_pt:
        x_lo -= 1
    x_hi = center
    while gaussian_pdf(x_hi + 1, mu, sigma) >= theta_pt:
        x_hi += 1
    return x_lo, x_hi


@dataclass(frozen=True)
class IntervalModel:
    """
    Truncated Gaussian over the interval between an ordered state pair.

    The truncated density is used as an unnormalized weight.
    """

    mu: float
    sigma: float
    theta_pt: float
    x_lo: int
    x_hi: int
    n: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameterError(f"sigma must be > 0, got {self.sigma}", field="sigma")
        if not 0 <= self.x_lo <= self.x_hi:
            raise InvalidParameterError(f"bad support [{self.x_lo}, {self.x_hi}]", field="x_lo")

    @classmethod
    def fit(cls, samples, sigma_floor: float, theta_pt: float):
        """
        Estimate mean and (n-1) standard deviation from observed intervals.

        Args:
            samples: Observed interval lengths (at least one)
            sigma_floor: Lower bound on sigma
            theta_pt: Density floor used to truncate the support

        Returns:
            A new IntervalModel
        """
        values = np.asarray(samples, dtype=np.float64)
        if values.size == 0:
            raise InvalidParameterError("cannot fit an interval model without samples", field="intervals")
        mu = float(values.mean())
        spread = float(values.std(ddof=1)) if values.size > 1 else 0.0
        sigma = max(spread, sigma_floor)
        x_lo, x_hi = truncate_support(mu, sigma, theta_pt)
        return cls(mu, sigma, theta_pt, x_lo, x_hi, int(values.size))

    def check_support(self):
        """
        Raise unless ``[x_lo, x_hi]`` is exactly the ``theta_pt`` support of the density.

        Raises:
            InvalidParameterError: naming the offending edge
        """
        if self.pdf(self.x_lo) < self.theta_pt or (self.x_lo > 0 and self.pdf(self.x_lo - 1) >= self.theta_pt):
            raise InvalidParameterError(f"x_lo={self.x_lo} is not the lower edge of density >= {self.theta_pt}", field="x_lo")
        if self.pdf(self.x_hi) < self.theta_pt or self.pdf(self.x_hi + 1) >= self.theta_pt:
            raise InvalidParameterError(f"x_hi={self.x_hi} is not the upper edge of density >= {self.theta_pt}", field="x_hi")

    def pdf(self, x):
        return gaussian_pdf(x, self.mu, self.sigma)

    def in_support(self, length: int) -> bool:
        return self.x_lo <= length <= self.x_hi

    def min_density(self) -> float:
        """Smallest density inside the support (always at one of its edges)."""
        return min(self.pdf(self.x_lo), self.pdf(self.x_hi))


def fallback_density(model_set: dict, c: float) -> float:
    """Smallest in-support density over every pair, times ``c``."""
    if not model_set:
        raise UntrainedIntervalError("no interval model has been trained", field="intervals")
    return min(model.min_density() for model in model_set.values()) * c


def interval_prob(model_set: dict, m_prev: int, m_next: int, length: int, c: float) -> float:
    """
    Interval weight for moving from ``m_prev`` to ``m_next`` after ``length`` gap ticks.

    In-support lengths get the pair's density; anything else (including pairs
    never observed) gets the global minimum in-support density times ``c``.

    Args:
        model_set: Mapping (m_prev, m_next) -> IntervalModel
        m_prev: Previous state
        m_next: Next state
        length: Interval length in ticks
        c: Fallback factor in [0, 1]

    Returns:
        The interval weight
    """
    model = model_set.get((m_prev, m_next))
    if model is not None and model.in_support(length):
        return model.pdf(length)
    return fallback_density(model_set, c)
