"""Service-distribution moments, fitting, and sampling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpsnet import (Deterministic, DistributionError, Exponential,
                    HyperExponential2, fit_two_moments)
from lpsnet.rng import Stream


def test_exponential_moments():
    d = Exponential(2.0)
    assert d.mean == 2.0
    assert d.second_moment == 8.0  # 2 * mean^2
    assert d.residual_mean == 2.0
    assert d.scv == 1.0
    assert d.rate == 0.5


def test_deterministic_moments():
    d = Deterministic(3.0)
    assert d.mean == 3.0
    assert d.second_moment == 9.0
    assert d.residual_mean == 1.5
    assert d.scv == 0.0


def test_hyperexp_moments_from_parameters():
    d = HyperExponential2(p1=0.5, rate1=1.0, p2=0.5, rate2=2.0)
    assert d.mean == pytest.approx(0.5 * 1.0 + 0.5 * 0.5, abs=1e-15)
    assert d.second_moment == pytest.approx(0.5 * 2.0 + 0.5 * 0.5, abs=1e-15)


def test_hyperexp_validation():
    with pytest.raises(DistributionError):
        HyperExponential2(p1=0.0, rate1=1.0, p2=1.0, rate2=2.0)
    with pytest.raises(DistributionError):
        HyperExponential2(p1=0.6, rate1=1.0, p2=0.6, rate2=2.0)
    with pytest.raises(DistributionError):
        HyperExponential2(p1=0.5, rate1=-1.0, p2=0.5, rate2=2.0)


def test_fit_known_values():
    d = fit_two_moments(1.0, 4.0)
    assert d.p1 == pytest.approx(0.8872983346207417, abs=1e-12)
    assert d.rate1 == pytest.approx(1.7745966692414834, abs=1e-12)
    assert d.rate2 == pytest.approx(0.22540333075851657, abs=1e-12)
    # Balanced means: each phase carries the same load.
    assert d.p1 / d.rate1 == pytest.approx(d.p2 / d.rate2, abs=1e-12)


def test_fit_unit_scv_degenerates_to_exponential():
    d = fit_two_moments(2.5, 1.0)
    assert isinstance(d, Exponential)
    assert d.mean == 2.5


def test_fit_rejects_low_variability():
    with pytest.raises(DistributionError):
        fit_two_moments(1.0, 0.5)
    with pytest.raises(DistributionError):
        fit_two_moments(-1.0, 4.0)


@settings(max_examples=200, deadline=None)
@given(mean=st.floats(0.1, 10.0), scv=st.floats(1.0, 100.0))
def test_fit_round_trips_first_two_moments(mean, scv):
    d = fit_two_moments(mean, scv)
    assert d.mean == pytest.approx(mean, rel=1e-12)
    assert d.scv == pytest.approx(scv, rel=1e-12, abs=1e-12)


def test_fit_round_trip_mean2_scv10():
    d = fit_two_moments(2.0, 10.0)
    assert d.mean == pytest.approx(2.0, abs=1e-12)
    assert d.scv == pytest.approx(10.0, abs=1e-12)


@pytest.mark.parametrize("dist", [
    Exponential(2.0),
    fit_two_moments(1.0, 4.0),
    fit_two_moments(0.5, 10.0),
    Deterministic(1.25),
])
def test_empirical_mean_within_five_standard_errors(dist):
    stream = Stream.derive(2024, 1)
    n = 1_000_000
    total = 0.0
    for _ in range(n):
        total += dist.sample(stream)
    empirical = total / n
    std = math.sqrt(max(dist.second_moment - dist.mean**2, 0.0))
    assert abs(empirical - dist.mean) <= max(5 * std / math.sqrt(n), 1e-12)


def test_deterministic_sample_is_constant():
    d = Deterministic(3.0)
    stream = Stream.derive(1)
    assert all(d.sample(stream) == 3.0 for _ in range(10))


def test_samples_are_nonnegative():
    stream = Stream.derive(9)
    d = fit_two_moments(1.0, 7.0)
    assert all(d.sample(stream) >= 0.0 for _ in range(1000))


def test_distributions_are_immutable():
    d = Exponential(1.0)
    with pytest.raises(Exception):
        d.mean_value = 2.0
