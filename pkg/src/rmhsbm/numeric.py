"""Chi-square and F tail probabilities.

Both are computed from the regularized incomplete gamma and beta functions
using a power series and a modified-Lentz continued fraction.
"""

from __future__ import annotations

import math
from typing import NamedTuple

MAX_ITER = 500
EPS = 1e-14
# Lentz guard against zero denominators.
TINY = 1e-300
_ULP = 2.220446049250313e-16


class TailProbability(NamedTuple):
    """A tail probability and an estimate of its relative error."""

    value: float
    achieved_relative_error: float
    underflow: bool = False

    def __float__(self) -> float:
        return self.value


class ConvergenceError(ArithmeticError):
    """Raised when a series or continued fraction fails to converge."""


def _log_prefactor_gamma(a: float, x: float) -> float:
    return -x + a * math.log(x) - math.lgamma(a)


def _gamma_series(a: float, x: float) -> tuple[float, float]:
    """Lower regularized gamma P(a, x) by series; returns (value, rel_err)."""
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            break
    else:
        raise ConvergenceError(f"gamma series did not converge (a={a}, x={x})")
    log_p = _log_prefactor_gamma(a, x) + math.log(total)
    # prefactor error grows with the size of the exponent
    err = EPS + 8 * _ULP * (1.0 + abs(log_p) + abs(x))
    return math.exp(log_p), err


def _gamma_cf(a: float, x: float) -> tuple[float, float]:
    """Upper regularized gamma Q(a, x) by continued fraction (modified Lentz)."""
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    delta = 0.0
    for i in range(1, MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    else:
        raise ConvergenceError(f"gamma continued fraction did not converge (a={a}, x={x})")
    log_q = _log_prefactor_gamma(a, x) + math.log(h)
    err = abs(delta - 1.0) + 4 * i * _ULP + 8 * _ULP * (1.0 + abs(log_q) + abs(x))
    if log_q < -745.0:
        return 0.0, err
    return math.exp(log_q), err


def gammaincc(a: float, x: float) -> TailProbability:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise ValueError(f"shape must be positive, got {a}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0:
        return TailProbability(1.0, 0.0)
    if math.isinf(x):
        return TailProbability(0.0, 0.0)
    if x < a + 0.5:
        p, err = _gamma_series(a, x)
        q = 1.0 - p
        # cancellation in 1 - p scales the error by p / q
        rel = err * p / q + _ULP if q > 0 else 1.0
        return TailProbability(min(max(q, 0.0), 1.0), rel)
    q, err = _gamma_cf(a, x)
    return TailProbability(min(q, 1.0), err, underflow=q == 0.0)


def _beta_cf(a: float, b: float, x: float) -> tuple[float, float]:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    delta = 0.0
    for m in range(1, MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    else:
        raise ConvergenceError(f"beta continued fraction did not converge (a={a}, b={b}, x={x})")
    # rounding accumulates roughly linearly in the number of terms
    return h, abs(delta - 1.0) + 4 * m * _ULP


_STIRLING_MIN = 10.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirling_tail(x: float) -> float:
    """lgamma(x) - [(x - 1/2) log x - x + log(2 pi)/2], for x >= 10."""
    inv = 1.0 / x
    inv2 = inv * inv
    return inv * (1 / 12 - inv2 * (1 / 360 - inv2 * (1 / 1260 - inv2 * (1 / 1680 - inv2 / 1188))))


def _log_beta(a: float, b: float) -> float:
    """log B(a, b) without the cancellation of three large lgamma terms."""
    lo, hi = min(a, b), max(a, b)
    if hi < _STIRLING_MIN:
        return math.lgamma(lo) + math.lgamma(hi) - math.lgamma(lo + hi)
    s = lo + hi
    if lo < _STIRLING_MIN:
        # lgamma(hi) - lgamma(hi + lo) written with log1p
        diff = (
            -(hi - 0.5) * math.log1p(lo / hi) - lo * math.log(s) + lo
            + _stirling_tail(hi) - _stirling_tail(s)
        )
        return math.lgamma(lo) + diff
    return (
        (lo - 0.5) * math.log(lo / s) - (hi - 0.5) * math.log1p(lo / hi)
        - 0.5 * math.log(s) + _HALF_LOG_2PI
        + _stirling_tail(lo) + _stirling_tail(hi) - _stirling_tail(s)
    )


def _betainc_direct(a: float, b: float, x: float, y: float) -> tuple[float, float]:
    """I_x(a, b) through the continued fraction, valid for x < (a+1)/(a+b+2).

    ``y`` is 1 - x, supplied separately so callers can keep its precision.
    """
    log_x = math.log(x) if x < 0.5 else math.log1p(-y)
    log_y = math.log(y) if y < 0.5 else math.log1p(-x)
    log_front = a * log_x + b * log_y - _log_beta(a, b)
    h, cf_err = _beta_cf(a, b, x)
    log_val = log_front + math.log(h) - math.log(a)
    err = cf_err + 16 * _ULP * (1.0 + abs(log_front) + abs(log_val))
    if log_val < -745.0:
        return 0.0, err
    return math.exp(log_val), err


def betainc(a: float, b: float, x: float, y: float | None = None) -> TailProbability:
    """Regularized incomplete beta I_x(a, b); ``y`` optionally gives 1 - x exactly."""
    if y is None:
        y = 1.0 - x
    if a <= 0 or b <= 0:
        raise ValueError(f"shapes must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return TailProbability(0.0, 0.0)
    if x == 1.0:
        return TailProbability(1.0, 0.0)
    if x < (a + 1.0) / (a + b + 2.0):
        val, err = _betainc_direct(a, b, x, y)
        return TailProbability(min(val, 1.0), err, underflow=val == 0.0)
    comp, err = _betainc_direct(b, a, y, x)
    val = 1.0 - comp
    rel = err * comp / val + _ULP if val > 0 else 1.0
    return TailProbability(min(max(val, 0.0), 1.0), rel)


def _check_df(name: str, df: int) -> None:
    if isinstance(df, bool) or int(df) != df or df < 1:
        raise ValueError(f"{name} must be a positive integer, got {df!r}")


def chi2_sf(x: float, df: int) -> TailProbability:
    """P(X > x) for X ~ chi-square with `df` degrees of freedom."""
    _check_df("df", df)
    if x < 0 or math.isnan(x):
        raise ValueError(f"x must be nonnegative, got {x}")
    return gammaincc(df / 2.0, x / 2.0)


def chi2_cdf(x: float, df: int) -> float:
    return 1.0 - chi2_sf(x, df).value


def f_sf(x: float, d1: int, d2: int) -> TailProbability:
    """P(X > x) for X ~ F(d1, d2)."""
    _check_df("d1", d1)
    _check_df("d2", d2)
    if x < 0 or math.isnan(x):
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0:
        return TailProbability(1.0, 0.0)
    if math.isinf(x):
        return TailProbability(0.0, 0.0)
    # d2 / (d2 + d1 x) loses precision as x -> 0; use the ratio form instead
    r = d1 * x / d2
    return betainc(d2 / 2.0, d1 / 2.0, 1.0 / (1.0 + r), r / (1.0 + r))


def f_cdf(x: float, d1: int, d2: int) -> float:
    return 1.0 - f_sf(x, d1, d2).value
