"""Bernoulli numbers and the terms a_m of two Bernoulli-number series.

Both series have terms

    a_m = pi (4m+3) / 2^(4m+1) * sum_k (-1)^k C(2m+1,k) C(4m+2-2k,2m+1) / N * L_k,
    N = 2m + 2 - 2k,

with L_k = log((2 pi)^N |B_N| / (2 N^2 (N-2)!))   for "s1"
     L_k = log((2m+1-2k) |B_N| / |B_{N+2}|)       for "s2".

The inner sum alternates and cancels heavily.  In double precision it is
evaluated as a signed log-sum-exp and refused once the cancellation eats
more than ~12 digits; an mpmath path with a chosen number of digits covers
larger m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .errors import DomainError, PrecisionLossError

EXACT = "exact"
STIRLING = "stirling"
SERIES = ("s1", "s2")
COND_LIMIT = 1e12

_B: list = [Fraction(1)]


def _extend(n: int) -> None:
    # B_n = -1/(n+1) sum_{k<n} C(n+1, k) B_k
    while len(_B) <= n:
        m = len(_B)
        if m > 1 and m % 2:
            _B.append(Fraction(0))
            continue
        acc = Fraction(0)
        c = 1  # C(m+1, k)
        for k in range(m):
            if _B[k]:
                acc += c * _B[k]
            c = c * (m + 1 - k) // (k + 1)
        _B.append(-acc / (m + 1))


def bernoulli_exact(n: int) -> Fraction:
    """B_n as an exact fraction (B_1 = -1/2)."""
    if n < 0:
        raise DomainError(f"Bernoulli index must be >= 0, got {n}")
    _extend(n)
    return _B[n]


def bernoulli_float(n: int) -> float:
    """B_n rounded to double; raises OverflowError beyond the double range."""
    return float(bernoulli_exact(n))


@lru_cache(maxsize=None)
def log_abs_bernoulli(n: int) -> float:
    b = bernoulli_exact(n)
    if b == 0:
        raise DomainError(f"B_{n} is zero")
    return math.log(abs(b.numerator)) - math.log(b.denominator)


def log_abs_bernoulli_asymptotic(m) -> float:
    """log|B_2m| from the Stirling form 4 sqrt(pi m) (m/(pi e))^(2m)."""
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    return math.log(4.0 * math.sqrt(math.pi * m)) + 2.0 * m * math.log(m / (math.pi * math.e))


@dataclass(frozen=True)
class BernoulliTermRow:
    m: int
    log_abs_term: float
    sign: int
    mode: str

    def as_row(self):
        return (self.m, self.log_abs_term, self.sign, self.mode)


def _lbinom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _check(series: str, m: int, mode: str):
    if series not in SERIES:
        raise DomainError(f"series must be one of {SERIES}, got {series!r}")
    if mode not in (EXACT, STIRLING):
        raise DomainError(f"mode must be {EXACT!r} or {STIRLING!r}, got {mode!r}")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")


def _inner_logs(series: str, m: int, mode: str):
    """Yield (k, log|weight_k|, L_k, kappa_k) in double precision.

    kappa_k is the condition number of L_k itself: L_k is a short difference
    of logarithms that are individually much larger than the result.
    """
    logB = log_abs_bernoulli if mode == EXACT else (lambda n: log_abs_bernoulli_asymptotic(n / 2))
    for k in range(m + 1):
        N = 2 * m + 2 - 2 * k
        lw = _lbinom(2 * m + 1, k) + _lbinom(4 * m + 2 - 2 * k, 2 * m + 1) - math.log(N)
        if series == "s1":
            parts = (N * math.log(2 * math.pi), logB(N), -math.log(2.0), -2 * math.log(N),
                     -math.lgamma(N - 1))
        else:
            parts = (math.log(2 * m + 1 - 2 * k), logB(N), -logB(N + 2))
        L = math.fsum(parts)
        kappa = sum(abs(x) for x in parts) / abs(L) if L else math.inf
        yield k, lw, L, kappa


def signed_logsumexp(logs, signs) -> tuple[float, int, float]:
    """log|sum|, its sign and log of the largest |term|, from signed log-magnitudes."""
    top = max(logs)
    pos = sum(math.exp(l - top) for l, s in zip(logs, signs) if s > 0)
    neg = sum(math.exp(l - top) for l, s in zip(logs, signs) if s < 0)
    diff = pos - neg
    if diff == 0:
        return -math.inf, 0, top
    return top + math.log(abs(diff)), (1 if diff > 0 else -1), top


def _logsumexp(logs) -> float:
    top = max(logs)
    return top + math.log(sum(math.exp(l - top) for l in logs))


def _term_double(series, m, mode, cond_limit):
    logs, signs, sens = [], [], []
    for k, lw, L, kappa in _inner_logs(series, m, mode):
        if L == 0:
            continue
        lt = lw + math.log(abs(L))
        logs.append(lt)
        signs.append((-1) ** k * (1 if L > 0 else -1))
        # each summand carries the relative error of L_k amplified by kappa_k
        sens.append(lt + math.log(max(kappa, 1.0)))
    inner, sign, _ = signed_logsumexp(logs, signs)
    # condition number of the whole inner sum: sum_k |t_k| kappa_k / |result|
    cond = math.inf if sign == 0 else math.exp(min(_logsumexp(sens) - inner, 700.0))
    if cond > cond_limit:
        raise PrecisionLossError(
            f"a_{m} of {series} ({mode}): inner sum condition number {cond:.3g} "
            f"exceeds {cond_limit:.3g}", condition=cond)
    pre = math.log(math.pi * (4 * m + 3)) - (4 * m + 1) * math.log(2.0)
    return pre + inner, sign


def _term_mp(series, m, mode, digits):
    with mpmath.workdps(digits):
        def absB(n):
            if mode == EXACT:
                b = bernoulli_exact(n)
                return abs(mpmath.mpf(b.numerator) / b.denominator)
            h = mpmath.mpf(n) / 2
            return 4 * mpmath.sqrt(mpmath.pi * h) * (h / (mpmath.pi * mpmath.e)) ** (2 * h)

        total = mpmath.mpf(0)
        top = mpmath.mpf(0)
        for k in range(m + 1):
            N = 2 * m + 2 - 2 * k
            w = mpmath.binomial(2 * m + 1, k) * mpmath.binomial(4 * m + 2 - 2 * k, 2 * m + 1) / N
            if series == "s1":
                L = mpmath.log((2 * mpmath.pi) ** N * absB(N)
                               / (2 * N * N * mpmath.factorial(N - 2)))
            else:
                L = mpmath.log((2 * m + 1 - 2 * k) * absB(N) / absB(N + 2))
            t = w * L
            top = max(top, abs(t))
            total += t if k % 2 == 0 else -t
        if total == 0 or top / abs(total) > mpmath.mpf(10) ** (digits - 10):
            raise PrecisionLossError(
                f"a_{m} of {series} ({mode}): cancellation exceeds {digits} digits")
        val = mpmath.pi * (4 * m + 3) / mpmath.mpf(2) ** (4 * m + 1) * total
        return float(mpmath.log(abs(val))), int(mpmath.sign(val))


def series_term(series: str, m: int, mode: str = EXACT, digits: int | None = None,
                cond_limit: float = COND_LIMIT) -> BernoulliTermRow:
    """log|a_m| and sign for series "s1" or "s2".

    ``digits=None`` uses doubles with a log-sum-exp inner sum and raises
    :class:`PrecisionLossError` when its condition number passes
    ``cond_limit``.  An integer ``digits`` evaluates with mpmath at that
    working precision instead.
    """
    _check(series, m, mode)
    if digits is None:
        la, sg = _term_double(series, m, mode, cond_limit)
    else:
        la, sg = _term_mp(series, m, mode, int(digits))
    return BernoulliTermRow(m, la, sg, mode)


def term_table(series: str, max_m: int, mode: str = EXACT, digits: int | None = None,
               cond_limit: float = COND_LIMIT):
    """Rows for m = 1..max_m, stopping at the first precision failure.

    Returns (rows, ceiling) where ceiling is the first m that could not be
    evaluated, or None.
    """
    rows = []
    for m in range(1, max_m + 1):
        try:
            rows.append(series_term(series, m, mode, digits, cond_limit))
        except PrecisionLossError:
            return rows, m
    return rows, None
