import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from deconvar.noise import (
    ErrorModel,
    InnovationModel,
    error_cf,
    error_density,
    inverse_error_cf,
    sample_error,
    sample_innovation,
    split_rng,
)

KINDS = ["laplace", "gaussian"]


def test_density_at_zero():
    assert error_density(ErrorModel("laplace", 1.0), 0.0) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert error_density(ErrorModel("gaussian", 1.0), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_density_tails(kind):
    m = ErrorModel(kind, 1.0)
    assert error_density(m, 50.0) < 1e-10
    assert error_density(m, -50.0) < 1e-10


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("sigma", [0.3, 1.0, 2.5])
def test_density_integrates_to_one(kind, sigma):
    m = ErrorModel(kind, sigma)
    total = integrate.quad(lambda x: error_density(m, x), -np.inf, np.inf, points=None, limit=200)[0]
    assert abs(total - 1.0) < 1e-8


def test_cf_values():
    assert error_cf(ErrorModel("laplace", 1.0), math.sqrt(2)) == pytest.approx(0.5, abs=1e-14)
    assert error_cf(ErrorModel("gaussian", 1.0), 1.0) == pytest.approx(math.exp(-0.5), abs=1e-14)
    for kind in KINDS:
        assert error_cf(ErrorModel(kind, 0.7), 0.0) == 1.0


@settings(max_examples=200, deadline=None)
@given(kind=st.sampled_from(KINDS), sigma=st.floats(0.01, 5.0), t=st.floats(-30.0, 30.0))
def test_cf_even_and_in_unit_interval(kind, sigma, t):
    m = ErrorModel(kind, sigma)
    v = error_cf(m, t)
    assert v == error_cf(m, -t)
    assert 0.0 < v <= 1.0 or (kind == "gaussian" and v == 0.0 and (sigma * t) ** 2 > 1400)
    if v > 0:
        assert inverse_error_cf(m, t) == pytest.approx(1.0 / v, rel=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_cf_matches_numerical_fourier_transform(kind):
    m = ErrorModel(kind, 0.8)
    for t in np.linspace(-10, 10, 21):
        num = integrate.quad(lambda x: error_density(m, x) * math.cos(t * x), 0, np.inf, limit=500)[0] * 2
        assert abs(num - error_cf(m, t)) < 1e-6


def test_sample_empty():
    assert sample_error(ErrorModel("laplace", 1.0), np.random.default_rng(0), 0).shape == (0,)
    assert sample_innovation(InnovationModel.two_point(0.25), np.random.default_rng(0), 0).shape == (0,)


@pytest.mark.parametrize("kind,sigma", [("laplace", 1.0), ("gaussian", 2.0)])
def test_sample_variance(kind, sigma):
    m = ErrorModel(kind, sigma)
    x = sample_error(m, np.random.default_rng(11), 10**6)
    # standard error of the sample variance from the fourth moment
    kurt = 6.0 if kind == "laplace" else 3.0
    se = sigma**2 * math.sqrt((kurt - 1.0) / x.size)
    assert abs(x.var() - sigma**2) < 3 * se


@pytest.mark.parametrize("kind", KINDS)
def test_sampler_matches_cdf(kind):
    m = ErrorModel(kind, 0.6)
    x = sample_error(m, np.random.default_rng(5), 10**5)
    assert stats.kstest(x, m.cdf).statistic < 0.01


def test_two_point_innovations():
    m = InnovationModel.two_point(0.25)
    x = sample_innovation(m, np.random.default_rng(3), 10**6)
    assert set(np.unique(x)) == {-0.25, 0.25}
    freq = np.mean(x > 0)
    assert abs(freq - 0.5) < 3 * math.sqrt(0.25 / x.size)
    assert abs(x.mean()) < 3 * 0.25 / math.sqrt(x.size)


def test_gaussian_innovation_variance():
    m = InnovationModel.gaussian(0.1)
    x = sample_innovation(m, np.random.default_rng(4), 10**6)
    se = 0.01 * math.sqrt(2.0 / x.size)
    assert abs(x.var() - 0.01) < 3 * se
    assert m.variance == pytest.approx(0.01)


def test_samplers_deterministic_given_stream():
    m = ErrorModel("laplace", 1.0)
    a = sample_error(m, split_rng(9, 3), 100)
    b = sample_error(m, split_rng(9, 3), 100)
    c = sample_error(m, split_rng(9, 4), 100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_invalid_sigma(bad):
    with pytest.raises(ValueError):
        ErrorModel("laplace", bad)


def test_unknown_kind():
    with pytest.raises(ValueError):
        ErrorModel("cauchy", 1.0)
    with pytest.raises(ValueError):
        InnovationModel("uniform", 1.0)
