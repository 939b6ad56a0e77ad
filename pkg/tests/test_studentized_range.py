import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from rankgauge.errors import InvalidInput, TooFewSamples
from rankgauge.studentized_range import (
    CriticalValues,
    QuantileRequest,
    StudentizedRangeSample,
    critical_value,
    quantile_exact_equal_sigma,
    quantile_mc,
    range_cdf,
    upper_order_index,
)


@pytest.mark.parametrize("alpha", [0.5, 0.2, 0.1, 0.05, 0.01])
def test_two_items_is_half_normal(alpha):
    # |Z1 - Z2| / sqrt(2) is |N(0, 1)|
    assert quantile_exact_equal_sigma(2, alpha) == pytest.approx(stats.norm.ppf(1 - alpha / 2), abs=1e-7)


@pytest.mark.parametrize("n", [3, 5, 10, 30])
@pytest.mark.parametrize("alpha", [0.2, 0.1, 0.05])
def test_exact_matches_scipy_infinite_df(n, alpha):
    ref = stats.studentized_range.ppf(1 - alpha, n, np.inf) / math.sqrt(2)
    assert quantile_exact_equal_sigma(n, alpha) == pytest.approx(ref, abs=2e-5)


def test_range_cdf_limits():
    assert range_cdf(0.0, 5) == pytest.approx(0.0, abs=1e-12)
    assert range_cdf(20.0, 5) == pytest.approx(1.0, abs=1e-9)
    w = np.linspace(0.1, 6, 30)
    vals = [range_cdf(x, 7) for x in w]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("sigma", [(1.0, 1.0), (0.2, 3.0)])
def test_mc_two_items_matches_closed_form(sigma):
    sample = StudentizedRangeSample(np.array(sigma), B=100_000, seed=4)
    q = sample.quantile(0.1)
    assert abs(q - stats.norm.ppf(0.95)) < 3 * sample.std_error(0.1)


@pytest.mark.parametrize("n", [4, 10])
def test_mc_matches_exact_within_three_se(n):
    sample = StudentizedRangeSample(np.ones(n), B=100_000, seed=11)
    for alpha in (0.2, 0.1, 0.05):
        assert abs(sample.quantile(alpha) - quantile_exact_equal_sigma(n, alpha)) < 3 * sample.std_error(alpha)


def test_quantile_monotone_in_alpha():
    crit = CriticalValues([0.1, 0.5, 1.0, 2.0], B=20_000, seed=3)
    alphas = np.linspace(0.01, 0.99, 40)
    qs = [crit(a) for a in alphas]
    assert all(a >= b for a, b in zip(qs, qs[1:]))
    exact = [quantile_exact_equal_sigma(6, a) for a in alphas]
    assert all(a > b for a, b in zip(exact, exact[1:]))


@given(st.floats(0.01, 100))
def test_scale_invariance(c):
    sigma = np.array([0.3, 1.0, 2.0, 0.7])
    q1 = quantile_mc(QuantileRequest(tuple(sigma), 0.1, 2000, 5, "mc"))
    q2 = quantile_mc(QuantileRequest(tuple(sigma * c), 0.1, 2000, 5, "mc"))
    assert q2 == pytest.approx(q1, rel=1e-9)


def test_permutation_invariance_in_distribution():
    a = StudentizedRangeSample(np.array([0.1, 1.0, 3.0]), B=100_000, seed=1)
    b = StudentizedRangeSample(np.array([3.0, 0.1, 1.0]), B=100_000, seed=2)
    se = math.hypot(a.std_error(0.1), b.std_error(0.1))
    assert abs(a.quantile(0.1) - b.quantile(0.1)) < 3 * se


def test_mc_independent_of_worker_count():
    req = QuantileRequest((0.5, 1.0, 1.5, 2.0, 2.5), 0.1, 10_000, 9, "mc")
    assert quantile_mc(req, workers=1) == quantile_mc(req, workers=3)


def test_mc_quantile_grows_with_n():
    qs = [quantile_mc(QuantileRequest((1.0,) * n, 0.1, 20_000, 0, "mc")) for n in (2, 4, 8, 16)]
    assert qs == sorted(qs)


def test_single_item_has_zero_quantile():
    assert critical_value(QuantileRequest((2.0,), 0.1)) == 0.0


def test_auto_dispatch():
    eq = QuantileRequest((1.5,) * 4, 0.1)
    assert critical_value(eq) == quantile_exact_equal_sigma(4, 0.1)
    neq = QuantileRequest((1.0, 2.0, 3.0), 0.1, 5000, 1)
    assert critical_value(neq) == quantile_mc(neq)


def test_upper_order_index():
    assert upper_order_index(0.1, 1000) == 899
    assert upper_order_index(0.05, 100_000) == 94_999
    assert upper_order_index(0.0001, 1000) == 999


@pytest.mark.parametrize(
    "kwargs, exc",
    [
        (dict(sigma=(1.0, 1.0), alpha=0.0), InvalidInput),
        (dict(sigma=(1.0, 1.0), alpha=1.0), InvalidInput),
        (dict(sigma=(1.0, -1.0), alpha=0.1), InvalidInput),
        (dict(sigma=(1.0, 2.0), alpha=0.1, B=10, method="mc"), TooFewSamples),
        (dict(sigma=(1.0, 2.0), alpha=0.1, method="exact"), InvalidInput),
    ],
)
def test_request_validation(kwargs, exc):
    with pytest.raises(exc):
        QuantileRequest(**kwargs)
