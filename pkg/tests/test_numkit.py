from __future__ import annotations

from fractions import Fraction
from math import factorial

import pytest

from wpvol.numkit import (
    CoeffTable,
    alpha_coeff,
    bernoulli,
    beta_coeff,
    double_factorial,
    format_rational,
    gamma_printed,
    gamma_shift_coeff,
    parse_rational,
    series_reciprocal,
)


def _half_coth_series(order):
    """Coefficients of (z/2) cosh(z/2)/sinh(z/2) in z^(2n)/(2n)!, by series division."""
    # cosh(z/2) and sinh(z/2)/(z/2) as power series in z
    num = [Fraction(1, 2**k * factorial(k)) if k % 2 == 0 else Fraction(0) for k in range(2 * order + 2)]
    den = [Fraction(2, 2**(k + 1) * factorial(k + 1)) if k % 2 == 0 else Fraction(0) for k in range(2 * order + 2)]
    inv = series_reciprocal(den, 2 * order + 1)
    prod = [sum(num[i] * inv[k - i] for i in range(k + 1)) for k in range(2 * order + 1)]
    return [prod[2 * n] * factorial(2 * n) for n in range(order + 1)]


def test_bernoulli_examples():
    assert bernoulli(0) == 1
    assert bernoulli(1) == Fraction(1, 6)
    assert bernoulli(2) == Fraction(-1, 30)
    assert bernoulli(6) == Fraction(691, -2730)


def test_bernoulli_matches_defining_series():
    assert [bernoulli(m) for m in range(21)] == _half_coth_series(20)


def test_double_factorial():
    assert double_factorial(-1) == 1
    assert double_factorial(1) == 1
    assert double_factorial(5) == 15
    assert double_factorial(9) == 945
    for bad in (0, 4, -3):
        with pytest.raises(ValueError):
            double_factorial(bad)


def test_alpha_beta_values():
    assert [alpha_coeff(i) for i in range(3)] == [1, Fraction(-1, 3), Fraction(1, 30)]
    assert beta_coeff(0) == 1
    assert beta_coeff(1) == Fraction(1, 3)
    # sqrt(2s)/sin(sqrt(2s)) = 1 + s/3 + 7 s^2/90 + ...
    assert beta_coeff(2) == Fraction(7, 90)
    assert beta_coeff(-1) == 0


def test_alpha_beta_reciprocal():
    table = CoeffTable(20)
    for n in range(21):
        assert table.convolution(n) == (1 if n == 0 else 0)
    assert series_reciprocal(table.alpha, 20) == table.beta


def test_gamma_shift():
    assert [gamma_shift_coeff(j) for j in (2, 3, 4)] == [1, Fraction(-1, 2), Fraction(1, 6)]
    for j in range(2, 21):
        assert gamma_shift_coeff(j) * factorial(j - 1) == (-1) ** j
        assert gamma_shift_coeff(j) == -double_factorial(2 * j - 1) * alpha_coeff(j - 1)
    with pytest.raises(ValueError):
        gamma_shift_coeff(1)
    # the printed form disagrees already at j = 2
    assert gamma_printed(2) != gamma_shift_coeff(2)


def test_rational_format_roundtrip():
    for x in (Fraction(0), Fraction(5), Fraction(-7, 90), Fraction(1, 1152)):
        assert parse_rational(format_rational(x)) == x
    assert format_rational(Fraction(6, 4)) == "3/2"
    assert format_rational(Fraction(-4, 2)) == "-2"
