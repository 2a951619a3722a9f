"""Service-time distributions: moments, fitting, and sampling.

Three families are supported: exponential, two-phase hyperexponential, and
deterministic.  Each carries its first two moments, the residual mean
(second moment over twice the mean, the stationary-excess mean), and the
squared coefficient of variation.  ``fit_two_moments`` maps a (mean, scv)
pair onto a member of the family, using the balanced-means two-phase
hyperexponential when scv > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .rng import Stream


class DistributionError(ValueError):
    """Raised for invalid distribution parameters."""


@dataclass(frozen=True)
class ServiceDistribution:
    """Base class; use one of the concrete subclasses."""

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def second_moment(self) -> float:
        raise NotImplementedError

    @property
    def residual_mean(self) -> float:
        """Mean of the stationary excess: second_moment / (2 * mean)."""
        return self.second_moment / (2.0 * self.mean)

    @property
    def scv(self) -> float:
        """Squared coefficient of variation."""
        return self.second_moment / self.mean ** 2 - 1.0

    @property
    def rate(self) -> float:
        """Service rate 1 / mean."""
        return 1.0 / self.mean

    def sample(self, stream: Stream) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(ServiceDistribution):
    mean_value: float

    def __post_init__(self):
        if not (self.mean_value > 0 and math.isfinite(self.mean_value)):
            raise DistributionError(f"exponential mean must be positive, got {self.mean_value}")

    @property
    def mean(self) -> float:
        return self.mean_value

    @property
    def second_moment(self) -> float:
        return 2.0 * self.mean_value ** 2

    def sample(self, stream: Stream) -> float:
        return stream.exponential(self.mean_value)


@dataclass(frozen=True)
class HyperExponential2(ServiceDistribution):
    """Mixture of two exponentials: rate1 w.p. p1, rate2 w.p. p2 = 1 - p1."""

    p1: float
    rate1: float
    p2: float
    rate2: float

    def __post_init__(self):
        if not (0.0 < self.p1 < 1.0):
            raise DistributionError(f"phase probability p1 must be in (0,1), got {self.p1}")
        if abs(self.p1 + self.p2 - 1.0) > 1e-12:
            raise DistributionError("phase probabilities must sum to 1")
        if self.rate1 <= 0 or self.rate2 <= 0:
            raise DistributionError("phase rates must be positive")

    @property
    def mean(self) -> float:
        return self.p1 / self.rate1 + self.p2 / self.rate2

    @property
    def second_moment(self) -> float:
        return 2.0 * (self.p1 / self.rate1 ** 2 + self.p2 / self.rate2 ** 2)

    def sample(self, stream: Stream) -> float:
        # One uniform picks the phase, a second drives the exponential draw;
        # the simulation kernel consumes its words in the same order.
        if stream.uniform() <= self.p1:
            return stream.exponential(1.0 / self.rate1)
        return stream.exponential(1.0 / self.rate2)


@dataclass(frozen=True)
class Deterministic(ServiceDistribution):
    value: float

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise DistributionError(f"deterministic value must be positive, got {self.value}")

    @property
    def mean(self) -> float:
        return self.value

    @property
    def second_moment(self) -> float:
        return self.value ** 2

    def sample(self, stream: Stream) -> float:
        return self.value


def fit_two_moments(mean: float, scv: float) -> ServiceDistribution:
    """Fit a distribution to a mean and squared coefficient of variation.

    scv == 1 returns an exponential.  scv > 1 returns the balanced-means
    two-phase hyperexponential (both phases contribute mean/2 to the mean):

        p1 = (1 + sqrt((scv - 1) / (scv + 1))) / 2
        rate1 = 2 p1 / mean,  rate2 = 2 (1 - p1) / mean

    scv < 1 is rejected: this family cannot reach it.
    """
    if not (mean > 0 and math.isfinite(mean)):
        raise DistributionError(f"mean must be positive, got {mean}")
    if not math.isfinite(scv):
        raise DistributionError(f"scv must be finite, got {scv}")
    if scv < 1.0:
        raise DistributionError(
            f"scv must be >= 1 for an exponential/hyperexponential fit, got {scv}"
        )
    if scv == 1.0:
        return Exponential(mean)
    p1 = 0.5 * (1.0 + math.sqrt((scv - 1.0) / (scv + 1.0)))
    p2 = 1.0 - p1
    return HyperExponential2(p1=p1, rate1=2.0 * p1 / mean, p2=p2, rate2=2.0 * p2 / mean)
