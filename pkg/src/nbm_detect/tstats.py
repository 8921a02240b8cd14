"""Student-t distribution and the paired-sample t-test.

The distribution function uses the regularized incomplete beta function

    P(T <= t) = 1 - I_x(df/2, 1/2) / 2   for t > 0,   x = df / (df + t^2)

with ``I_x`` evaluated by the modified Lentz continued fraction (switching to
``1 - I_{1-x}(b, a)`` when ``x > (a+1)/(a+b+2)``).  Upper tails are computed
directly from ``I_x`` so p-values far below machine epsilon keep their
relative accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import StatsError, ZeroVarianceError

_CF_MAX_ITER = 100_000
_CF_TOL = 1e-16
_TINY = 1e-300


def _beta_cf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
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
        if abs(delta - 1.0) < _CF_TOL:
            return h
    raise StatsError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0``, ``0 <= x <= 1``."""
    if a <= 0 or b <= 0:
        raise StatsError("betainc requires a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise StatsError(f"betainc requires 0 <= x <= 1, got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, 1.0 - x) / b


def _check_df(df) -> float:
    if int(df) != df or df < 1:
        raise StatsError(f"degrees of freedom must be an integer >= 1, got {df}")
    return float(df)


def _upper_tail(t: float, df: float) -> float:
    """P(T > |t|)."""
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return 0.5 * betainc_regularized(df / 2.0, 0.5, x)


def student_t_cdf(t: float, df: int) -> float:
    df = _check_df(df)
    if math.isnan(t):
        raise StatsError("t is NaN")
    if t == 0:
        return 0.5
    tail = _upper_tail(t, df)
    return 1.0 - tail if t > 0 else tail


def student_t_sf(t: float, df: int) -> float:
    """``1 - cdf(t)``, accurate in the far upper tail."""
    df = _check_df(df)
    if t == 0:
        return 0.5
    tail = _upper_tail(t, df)
    return tail if t > 0 else 1.0 - tail


ALTERNATIVES = ("a_greater", "a_less", "two_sided")


@dataclass(frozen=True)
class TTestResult:
    n_pairs: int
    mean_difference: float
    t_statistic: float
    degrees_of_freedom: int
    p_one_sided: float
    p_two_sided: float
    alternative: str = "a_greater"

    @property
    def p_value(self) -> float:
        return self.p_two_sided if self.alternative == "two_sided" else self.p_one_sided


def sample_mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (divisor n-1; NaN std for n < 2)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise StatsError("empty sample")
    mean = math.fsum(v.tolist()) / v.size
    if v.size < 2:
        return mean, math.nan
    var = math.fsum(((v - mean) ** 2).tolist()) / (v.size - 1)
    return mean, math.sqrt(var)


def paired_t_test(a: Sequence[float], b: Sequence[float], alternative: str = "a_greater") -> TTestResult:
    """Paired t-test on ``d = a - b``.

    ``p_one_sided`` is for the stated one-sided alternative (``a_greater``:
    ``1 - F(t)``, ``a_less``: ``F(t)``; for ``two_sided`` it reports the
    ``a_greater`` tail).  Raises :class:`ZeroVarianceError` when all
    differences are equal.
    """
    if alternative not in ALTERNATIVES:
        raise StatsError(f"alternative must be one of {ALTERNATIVES}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise StatsError(f"paired samples must have equal length, got {a.shape} and {b.shape}")
    n = len(a)
    if n < 2:
        raise StatsError("paired t-test needs at least 2 pairs")
    d = a - b
    mean, sd = sample_mean_std(d)
    if not sd > 0:
        raise ZeroVarianceError(f"differences have zero variance (all equal to {d[0]})")
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    upper = student_t_sf(t, df)
    lower = student_t_cdf(t, df)
    one = lower if alternative == "a_less" else upper
    two = min(1.0, 2.0 * min(upper, lower))
    return TTestResult(n, mean, t, df, one, two, alternative)
