"""Exact rational helpers and the coefficient sequences used throughout the package.

Everything here is exact: values are :class:`fractions.Fraction` (or ``int`` for
double factorials).  Sequences are cached per index; the caches are plain dicts
written at most once per key, so concurrent readers only ever see complete
values.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import List

__all__ = [
    "bernoulli",
    "double_factorial",
    "alpha_coeff",
    "beta_coeff",
    "gamma_shift_coeff",
    "gamma_printed",
    "series_reciprocal",
    "format_rational",
    "parse_rational",
    "CoeffTable",
]


@lru_cache(maxsize=None)
def bernoulli(m: int) -> Fraction:
    """Return the even-index Bernoulli number B_{2m}.

    Uses the binomial recurrence ``sum_{r<=n} C(n+1, r) B_r = 0`` restricted to
    even r, with the odd contribution B_1 = -1/2 folded in explicitly.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return Fraction(1)
    n = 2 * m
    acc = Fraction(n + 1, 1) * Fraction(-1, 2)
    for j in range(m):
        acc += comb(n + 1, 2 * j) * bernoulli(j)
    return -acc / (n + 1)


def double_factorial(n: int) -> int:
    """n!! for odd n >= -1, with (-1)!! = 1."""
    if n < -1 or n % 2 == 0:
        raise ValueError(f"double_factorial expects an odd integer >= -1, got {n}")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


@lru_cache(maxsize=None)
def alpha_coeff(i: int) -> Fraction:
    """(-2)^i / (2i+1)!, the Taylor coefficients of sin(sqrt(2s))/sqrt(2s)."""
    if i < 0:
        raise ValueError("i must be >= 0")
    return Fraction((-2) ** i, factorial(2 * i + 1))


@lru_cache(maxsize=None)
def beta_coeff(i: int) -> Fraction:
    """(-1)^(i-1) 2^i (2^(2i) - 2) B_{2i} / (2i)!.

    These are the Taylor coefficients of sqrt(2s)/sin(sqrt(2s)).  Negative
    indices return 0 so that callers can sum over unbounded ranges.
    """
    if i < 0:
        return Fraction(0)
    sign = -1 if (i - 1) % 2 else 1
    return sign * Fraction(2**i * (4**i - 2), factorial(2 * i)) * bernoulli(i)


def gamma_shift_coeff(j: int) -> Fraction:
    """Coefficient c_j of the time shift t_j -> t_j + c_j s^(j-1).

    c_j = -(2j-1)!! * alpha_{j-1}, which simplifies to (-1)^j / (j-1)!.
    """
    if j < 2:
        raise ValueError("time shifts are only defined for j >= 2")
    return -double_factorial(2 * j - 1) * alpha_coeff(j - 1)


def gamma_printed(j: int) -> Fraction:
    """The alternative closed form (-1)^j / ((2j+1) j!).

    Kept only so the discrepancy with :func:`gamma_shift_coeff` can be
    reported; nothing in the package computes with it.
    """
    if j < 2:
        raise ValueError("j must be >= 2")
    return Fraction((-1) ** j, (2 * j + 1) * factorial(j))


def series_reciprocal(a: List[Fraction], order: int) -> List[Fraction]:
    """Coefficients b_0..b_order of 1/A(s) for a power series with a_0 != 0."""
    if not a or a[0] == 0:
        raise ValueError("series_reciprocal requires a nonzero constant term")
    b = [Fraction(0)] * (order + 1)
    b[0] = 1 / Fraction(a[0])
    for n in range(1, order + 1):
        acc = Fraction(0)
        for k in range(1, min(n, len(a) - 1) + 1):
            acc += a[k] * b[n - k]
        b[n] = -acc * b[0]
    return b


def format_rational(x: Fraction) -> str:
    """Serialize as "p/q" in lowest terms, or "p" for integers."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


class CoeffTable:
    """Prefix tables of alpha, beta, Bernoulli and shift coefficients."""

    def __init__(self, size: int):
        if size < 0:
            raise ValueError("size must be >= 0")
        self.size = size
        self.alpha = [alpha_coeff(i) for i in range(size + 1)]
        self.beta = [beta_coeff(i) for i in range(size + 1)]
        self.bernoulli = [bernoulli(m) for m in range(size + 1)]
        # gammaCoeff[j] holds c_j; slots 0 and 1 are unshifted
        self.gamma_coeff = [Fraction(0), Fraction(0)] + [
            gamma_shift_coeff(j) for j in range(2, size + 1)
        ]

    def convolution(self, n: int) -> Fraction:
        """sum_{i+j=n} alpha_i beta_j; equals 1 for n = 0 and 0 otherwise."""
        return sum((self.alpha[i] * self.beta[n - i] for i in range(n + 1)), Fraction(0))
