"""Binomial point masses and their segment integrals.

These two primitives drive every conditional degree probability in the
vertex-exposure martingale: ``binomial_point(x, t, h)`` is the chance that
exactly h of t pending uniform neighbors exceed the threshold 1-x, and
``binomial_segment_integral`` integrates that mass over a range of candidate
weights via the regularized incomplete beta function, using

    integral_0^c C(t,h) y^h (1-y)^(t-h) dy  =  I_c(h+1, t-h+1) / (t+1)
                                            =  P[Bin(t+1, c) >= h+1] / (t+1).

Out-of-range h (h < 0 or h > t) contributes zero mass by convention.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betainc as _betainc
from scipy.special import gammaln as _gammaln


def binomial_point(x: float, t: int, h: int) -> float:
    """C(t,h) x^h (1-x)^(t-h); zero when h is outside [0, t].

    Evaluated in log space so large t cannot overflow the binomial
    coefficient.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if h < 0 or h > t:
        return 0.0
    if t == 0:
        return 1.0
    if x <= 0.0:
        return 1.0 if h == 0 else 0.0
    if x >= 1.0:
        return 1.0 if h == t else 0.0
    logc = math.lgamma(t + 1) - math.lgamma(h + 1) - math.lgamma(t - h + 1)
    return math.exp(logc + h * math.log(x) + (t - h) * math.log1p(-x))


def binomial_point_vec(x: np.ndarray, t: int, h: np.ndarray) -> np.ndarray:
    """Vectorized binomial_point over x (floats) and h (ints), fixed t."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h)
    ok = (h >= 0) & (h <= t)
    hs = np.where(ok, h, 0).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.where(x > 0.0, np.log(np.where(x > 0.0, x, 1.0)), -np.inf)
        log1mx = np.where(x < 1.0, np.log1p(-np.where(x < 1.0, x, 0.0)), -np.inf)
        logc = (_gammaln(t + 1.0) - _gammaln(hs + 1.0) - _gammaln(t - hs + 1.0))
        val = np.exp(logc + hs * logx + (t - hs) * log1mx)
    # boundary weights: at x=0 only h=0 has mass; at x=1 only h=t
    val = np.where(x <= 0.0, (hs == 0).astype(float), val)
    val = np.where(x >= 1.0, (hs == t).astype(float), val)
    if t == 0:
        val = np.ones_like(val)
    return np.where(ok, val, 0.0)


def binomial_upper_tail(c, t_plus_1: int, h_plus_1) -> np.ndarray | float:
    """P[Bin(t+1, c) >= h+1] as a regularized incomplete beta value."""
    c_arr = np.asarray(c, dtype=np.float64)
    hp = np.asarray(h_plus_1, dtype=np.float64)
    ok = (hp >= 1) & (hp <= t_plus_1)
    a = np.where(ok, hp, 1.0)
    out = _betainc(a, t_plus_1 - a + 1.0, c_arr)
    out = np.where(hp < 1, 1.0, np.where(hp > t_plus_1, 0.0, out))
    return out if out.shape else float(out)


def binomial_segment_integral(a: float, b: float, t: int, h: int) -> float:
    """integral_a^b binomial_point(y, t, h) dy, absolute error <= 1e-12."""
    if not 0.0 <= a <= b <= 1.0:
        raise ValueError(f"need 0 <= a <= b <= 1, got a={a}, b={b}")
    if h < 0 or h > t:
        return 0.0
    ib = _betainc(h + 1.0, t - h + 1.0, b)
    ia = _betainc(h + 1.0, t - h + 1.0, a)
    return (ib - ia) / (t + 1)


def binomial_segment_first_moment(a: float, b: float, t: int, h: int) -> float:
    """integral_a^b y * binomial_point(y, t, h) dy.

    Uses y*p(y,t,h) = (h+1)/(t+1) * p(y,t+1,h+1) and one more beta integral.
    """
    if not 0.0 <= a <= b <= 1.0:
        raise ValueError(f"need 0 <= a <= b <= 1, got a={a}, b={b}")
    if h < 0 or h > t:
        return 0.0
    ib = _betainc(h + 2.0, t - h + 1.0, b)
    ia = _betainc(h + 2.0, t - h + 1.0, a)
    return (h + 1) / ((t + 1) * (t + 2)) * (ib - ia)
