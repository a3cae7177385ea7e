from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from math import factorial

import pytest

from wpvol.intersect import _partitions
from wpvol.polyalg import EvenPoly
from wpvol.volrec import check_key, v_poly, vol_poly, volume_table


def test_base_cases():
    assert v_poly(0, 3).to_text() == "1"
    assert v_poly(1, 1) == EvenPoly(("q1",), {(0,): Fraction(1, 24), (1,): Fraction(1, 24)})
    assert vol_poly(1, 1).to_text() == "(q1 + 4*P)/48"
    assert vol_poly(0, 3).to_text() == "1"


def test_first_steps():
    assert v_poly(0, 4).to_text() == "1 + q1 + q2 + q3 + q4"
    assert v_poly(1, 2).evaluate({"q1": 0, "q2": 0}) == Fraction(1, 16)
    assert v_poly(0, 5).evaluate({f"q{i}": 0 for i in range(1, 6)}) == Fraction(5, 2)
    # Vol_{1,2} = (4P + q1 + q2)(12P + q1 + q2)/192
    names = EvenPoly.q_names(2, with_pi=True)
    P, q1, q2 = (EvenPoly.var(names, x) for x in ("P", "q1", "q2"))
    assert vol_poly(1, 2) == (P * 4 + q1 + q2) * (P * 12 + q1 + q2) * Fraction(1, 192)


def test_unstable():
    for g, n in ((0, 2), (0, 1), (1, 0), (-1, 4)):
        with pytest.raises(ValueError):
            check_key(g, n)


@pytest.mark.parametrize("g,n", [(0, 5), (0, 6), (1, 3), (1, 4), (2, 1), (2, 2)])
def test_symmetric(g, n):
    v = v_poly(g, n)
    for perm in permutations(range(n)):
        assert v.permute(perm) == v


def test_degree_positivity_and_top_part(numbers):
    for (g, n), v, _ in volume_table(5):
        d = 3 * g - 3 + n
        assert v.degree() == d
        assert all(c > 0 for c in v.terms.values())
        for psi in _partitions(d, n):
            denom = 1
            for e in psi:
                denom *= factorial(e)
            assert v.coefficient(psi) == numbers(g, 0, psi) / denom


def test_table_order():
    keys = [k for k, _, _ in volume_table(2)]
    assert keys == [(0, 3), (0, 4), (1, 1), (0, 5), (1, 2)]
    assert [k for k, _, _ in volume_table(0)] == [(0, 3)]
