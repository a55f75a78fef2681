"""Welch's t-test and log-linear regression.

The Student-t tail is computed from the regularized incomplete beta
function, evaluated with the modified Lentz continued fraction (Numerical
Recipes ``betacf``) and the symmetry I_x(a, b) = 1 - I_{1-x}(b, a).
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 10_000


class DegenerateSampleError(ValueError):
    """The requested statistic is undefined for the given samples."""


def _betacf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + t * t))
    return tail if t >= 0 else 1.0 - tail


def t_two_sided_p(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def t_ppf(q: float, df: float) -> float:
    """Quantile of Student's t, by bisection on ``t_sf``."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if q == 0.5:
        return 0.0
    target = 1.0 - q
    lo, hi = -1.0, 1.0
    while t_sf(lo, df) < target:
        lo *= 2.0
    while t_sf(hi, df) > target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_sf(mid, df) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def _mean_var(xs: Sequence[float]) -> tuple[float, float]:
    n = len(xs)
    m = math.fsum(xs) / n
    return m, math.fsum((x - m) ** 2 for x in xs) / (n - 1)


class TTestResult(NamedTuple):
    t: float
    df: float
    p: float


def welch_t_test(xs: Sequence[float], ys: Sequence[float]) -> TTestResult:
    """Two-sided Welch's unequal-variance t-test of mean(xs) against mean(ys)."""
    nx, ny = len(xs), len(ys)
    if nx < 2 or ny < 2:
        raise DegenerateSampleError("each sample needs at least two values")
    mx, vx = _mean_var(xs)
    my, vy = _mean_var(ys)
    sx, sy = vx / nx, vy / ny
    se2 = sx + sy
    if se2 <= 0.0:
        raise DegenerateSampleError("both samples have zero variance")
    t = (mx - my) / math.sqrt(se2)
    df = se2 * se2 / (sx * sx / (nx - 1) + sy * sy / (ny - 1))
    return TTestResult(t, df, t_two_sided_p(t, df))


class Regression(NamedTuple):
    slope: float
    intercept: float
    r: float
    p: float


def loglinear_regression(levels: Sequence[float], values: Sequence[float]) -> Regression:
    """OLS of ``values`` on log2(``levels``); ``p`` tests slope != 0 (two-sided)."""
    if len(levels) != len(values):
        raise ValueError("levels and values differ in length")
    n = len(levels)
    if n < 3:
        raise ValueError("need at least three observations")
    if any(lv <= 0 for lv in levels):
        raise ValueError("levels must be positive")
    if len(set(levels)) < 2:
        raise ValueError("levels are all equal; slope is undefined")
    xs = [math.log2(v) for v in levels]
    mx = math.fsum(xs) / n
    my = math.fsum(values) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, values))
    syy = math.fsum((y - my) ** 2 for y in values)
    slope = sxy / sxx
    intercept = my - slope * mx
    sse = math.fsum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, values))
    r = 0.0 if syy == 0.0 else sxy / math.sqrt(sxx * syy)
    df = n - 2
    if sse <= 1e-300 * max(1.0, syy):
        p = 1.0 if slope == 0.0 else 0.0
    else:
        se = math.sqrt(sse / df / sxx)
        p = t_two_sided_p(slope / se, df)
    return Regression(slope, intercept, r, p)


def mean_sd_ci(xs: Sequence[float], level: float = 0.95) -> tuple[float, float, float, float]:
    """Mean, sample SD and a Student-t confidence interval; NaN where undefined."""
    n = len(xs)
    if n == 0:
        nan = float("nan")
        return nan, nan, nan, nan
    m = math.fsum(xs) / n
    if n < 2:
        return m, float("nan"), float("nan"), float("nan")
    _, v = _mean_var(xs)
    sd = math.sqrt(v)
    half = t_ppf(0.5 + level / 2.0, n - 1) * sd / math.sqrt(n)
    return m, sd, m - half, m + half
