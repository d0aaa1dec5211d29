import math

import numpy as np
import pytest

from irrsub.binomial import (binomial_point, binomial_point_vec, binomial_segment_first_moment,
                             binomial_segment_integral, binomial_upper_tail)

# frozen from 30-digit mpmath quadrature of C(t,h) y^h (1-y)^(t-h)
MPMATH_SEGMENTS = [
    (0.0, 1.0, 7, 3, 0.125),
    (0.0, 0.5, 1, 0, 0.375),
    (0.2, 0.9, 12, 5, 0.074612045115353846),
    (0.35, 0.85, 30, 11, 0.019462937167939688),
    (0.1, 0.6, 45, 20, 0.021365382526554046),
    (0.0, 0.25, 60, 7, 0.016272620968125812),
    (0.5, 1.0, 100, 55, 0.008318181580691755),
]


def test_point_examples():
    assert binomial_point(0.5, 2, 1) == pytest.approx(0.5, abs=1e-15)
    assert binomial_point(0.3, 5, -1) == 0.0
    assert binomial_point(0.3, 5, 6) == 0.0
    for x in (0.0, 0.17, 0.5, 1.0):
        assert binomial_point(x, 0, 0) == 1.0


def test_point_matches_direct_product():
    for t in (1, 3, 10, 40):
        for h in range(0, t + 1, max(1, t // 4)):
            x = 0.37
            direct = math.comb(t, h) * x ** h * (1 - x) ** (t - h)
            assert binomial_point(x, t, h) == pytest.approx(direct, rel=1e-12)


def test_point_large_t_no_overflow():
    val = binomial_point(0.5, 1800, 900)
    assert 0 < val < 1
    assert np.isfinite(val)


def test_point_vec_matches_scalar():
    xs = np.array([0.0, 0.1, 0.5, 0.93, 1.0])
    hs = np.array([-1, 0, 3, 5, 6])
    for t in (0, 1, 5, 9):
        vec = binomial_point_vec(xs, t, hs)
        for i in range(xs.size):
            assert vec[i] == pytest.approx(binomial_point(xs[i], t, int(hs[i])), abs=1e-15)


@pytest.mark.parametrize("a,b,t,h,expected", MPMATH_SEGMENTS)
def test_segment_integral_frozen(a, b, t, h, expected):
    assert binomial_segment_integral(a, b, t, h) == pytest.approx(expected, abs=1e-12)


def test_segment_full_interval_is_uniform():
    for t in (0, 1, 4, 25, 120):
        for h in range(0, t + 1, max(1, t // 3)):
            assert binomial_segment_integral(0.0, 1.0, t, h) == pytest.approx(
                1.0 / (t + 1), abs=1e-14)


def test_segment_conventions():
    assert binomial_segment_integral(0.0, 1.0, 6, -1) == 0.0
    assert binomial_segment_integral(0.0, 1.0, 6, 7) == 0.0
    with pytest.raises(ValueError):
        binomial_segment_integral(0.7, 0.3, 6, 2)


def test_segment_additivity():
    total = binomial_segment_integral(0.0, 1.0, 9, 4)
    split = (binomial_segment_integral(0.0, 0.33, 9, 4)
             + binomial_segment_integral(0.33, 0.78, 9, 4)
             + binomial_segment_integral(0.78, 1.0, 9, 4))
    assert split == pytest.approx(total, abs=1e-14)


def test_first_moment_against_quadrature():
    from scipy.integrate import quad
    for (a, b, t, h) in [(0.1, 0.8, 7, 3), (0.0, 1.0, 12, 0), (0.4, 0.9, 20, 15)]:
        expected, _ = quad(lambda y: y * binomial_point(y, t, h), a, b, epsabs=1e-13)
        assert binomial_segment_first_moment(a, b, t, h) == pytest.approx(expected, abs=1e-11)


def test_upper_tail_matches_sum():
    rngs = [(5, 2, 0.3), (12, 7, 0.81), (30, 1, 0.05), (31, 31, 0.99)]
    for n, m, c in rngs:
        direct = sum(math.comb(n, i) * c ** i * (1 - c) ** (n - i) for i in range(m, n + 1))
        assert binomial_upper_tail(c, n, m) == pytest.approx(direct, abs=1e-13)
    assert binomial_upper_tail(0.4, 9, 0) == 1.0
    assert binomial_upper_tail(0.4, 9, -3) == 1.0
    assert binomial_upper_tail(0.4, 9, 10) == 0.0
