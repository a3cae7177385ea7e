"""Volume polynomials from the integral recursion.

``v_poly(g, n)`` returns the rational volume v_{g,n} as an :class:`EvenPoly`
in ``q1..qn`` (q_i = L_i^2).  The integrals over the kernel are never done
numerically: every monomial x^(2a) (y^(2b)) is replaced by its exact kernel
moment from :func:`wpvol.kernelmod.h_closed`, then averaged over t in [0, L_1].
"""
from __future__ import annotations

import threading
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, factorial
from typing import Dict, List, Optional, Tuple

from .kernelmod import h_closed
from .polyalg import EvenPoly, avg_integrate

__all__ = [
    "VolKey",
    "check_key",
    "v_poly",
    "vol_poly",
    "volume_table",
    "VolumeRecursion",
]

VolKey = Tuple[int, int]
Exps = Tuple[int, ...]


def check_key(g: int, n: int) -> VolKey:
    if g < 0 or n < 1:
        raise ValueError(f"need g >= 0 and n >= 1, got (g, n) = ({g}, {n})")
    if 2 * g - 2 + n <= 0:
        raise ValueError(f"(g, n) = ({g}, {n}) is unstable: need 2g - 2 + n > 0")
    return (g, n)


@lru_cache(maxsize=None)
def _pair_moment(k: int) -> Dict[int, Fraction]:
    """(1/L1) int_0^L1 h_{2k+1}(t) dt as {power of q1: coefficient}."""
    h = h_closed(k)
    names = ("q1",)
    p = {power: EvenPoly.constant(names, c) for power, c in h.as_dict().items()}
    avg = avg_integrate(p, "q1")
    return {e[0]: c for e, c in avg.terms.items()}


@lru_cache(maxsize=None)
def _boundary_moment(a: int) -> Dict[Tuple[int, int], Fraction]:
    """(1/L1) int_0^L1 [h_{2a+1}(t+Lj) + h_{2a+1}(t-Lj)] dt as {(e1, ej): coeff}.

    The shifted sum is expanded in powers t^r Lj^(2m-r); terms with r odd
    cancel between the two shifts, and any that did not would be an error.
    """
    h = h_closed(a)
    names = ("q1", "qj")
    by_t: Dict[int, Dict[int, Fraction]] = {}
    for power, c in h.as_dict().items():
        for r in range(power + 1):
            coef = c * comb(power, r) * (1 + (-1) ** (power - r))
            if coef:
                by_t.setdefault(r, {})
                by_t[r][power - r] = by_t[r].get(power - r, Fraction(0)) + coef
    p = {}
    for r, lpowers in by_t.items():
        terms = {}
        for lp, c in lpowers.items():
            if lp % 2:
                raise ArithmeticError("odd power of L_j survived the shifted kernel sum")
            terms[(0, lp // 2)] = c
        p[r] = EvenPoly(names, terms)
    avg = avg_integrate(p, "q1")
    return dict(avg.terms)


class VolumeRecursion:
    """Memoized evaluator of v_{g,n}; one instance may be shared across threads."""

    def __init__(self):
        self._memo: Dict[VolKey, Dict[Exps, Fraction]] = {}
        self._lock = threading.Lock()

    def raw(self, g: int, n: int) -> Dict[Exps, Fraction]:
        key = check_key(g, n)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        val = self._compute(g, n)
        with self._lock:
            return self._memo.setdefault(key, val)

    def v_poly(self, g: int, n: int) -> EvenPoly:
        return EvenPoly(EvenPoly.q_names(n), self.raw(g, n))

    def _compute(self, g: int, n: int) -> Dict[Exps, Fraction]:
        if (g, n) == (0, 3):
            return {(0, 0, 0): Fraction(1)}
        if (g, n) == (1, 1):
            return {(0,): Fraction(1, 24), (1,): Fraction(1, 24)}
        out: Dict[Exps, Fraction] = {}

        def add(exps: Exps, c: Fraction) -> None:
            v = out.get(exps, Fraction(0)) + c
            if v:
                out[exps] = v
            else:
                out.pop(exps, None)

        # non-separating: v_{g-1,n+1}(x, y, L_2..L_n)
        if g >= 1:
            for exps, c in self.raw(g - 1, n + 1).items():
                a, b, rest = exps[0], exps[1], exps[2:]
                w = 2 * c * factorial(2 * a + 1) * factorial(2 * b + 1)
                for e1, mc in _pair_moment(a + b + 1).items():
                    add((e1, *rest), w * mc)

        # separating: ordered (g1, I) with I a subset of the labels 2..n
        labels = list(range(1, n))  # positions of L_2..L_n in the exponent vector
        for size in range(len(labels) + 1):
            for subset in combinations(labels, size):
                complement = [p for p in labels if p not in subset]
                n1, n2 = len(subset) + 1, len(complement) + 1
                for g1 in range(g + 1):
                    g2 = g - g1
                    if 2 * g1 - 2 + n1 <= 0 or 2 * g2 - 2 + n2 <= 0:
                        continue
                    left, right = self.raw(g1, n1), self.raw(g2, n2)
                    for e_l, c_l in left.items():
                        a = e_l[0]
                        wa = c_l * factorial(2 * a + 1)
                        for e_r, c_r in right.items():
                            b = e_r[0]
                            w = 2 * wa * c_r * factorial(2 * b + 1)
                            base = [0] * n
                            for pos, e in zip(subset, e_l[1:]):
                                base[pos] = e
                            for pos, e in zip(complement, e_r[1:]):
                                base[pos] = e
                            for e1, mc in _pair_moment(a + b + 1).items():
                                base[0] = e1
                                add(tuple(base), w * mc)

        # boundary-joining: v_{g,n-1}(x, L_{not 1, not j})
        if n >= 2:
            sub = self.raw(g, n - 1)
            for j in range(1, n):
                others = [p for p in range(1, n) if p != j]
                for exps, c in sub.items():
                    a = exps[0]
                    w = c * factorial(2 * a + 1)
                    base = [0] * n
                    for pos, e in zip(others, exps[1:]):
                        base[pos] = e
                    for (e1, ej), mc in _boundary_moment(a).items():
                        base[0] = e1
                        base[j] = ej
                        add(tuple(base), w * mc)
        return out


_default = VolumeRecursion()


def v_poly(g: int, n: int, recursion: Optional[VolumeRecursion] = None) -> EvenPoly:
    """Normalized volume v_{g,n} in q1..qn."""
    return (recursion or _default).v_poly(g, n)


def vol_poly(g: int, n: int, recursion: Optional[VolumeRecursion] = None) -> EvenPoly:
    """Weil-Petersson volume Vol_{g,n} in q1..qn and P = pi^2.

    Monomial q^e of v maps to 2^d P^(d-|e|) q^e / 4^|e|.
    """
    check_key(g, n)
    d = 3 * g - 3 + n
    v = (recursion or _default).raw(g, n)
    out = {}
    for exps, c in v.items():
        e = sum(exps)
        out[(*exps, d - e)] = c * Fraction(2**d, 4**e)
    return EvenPoly(EvenPoly.q_names(n, with_pi=True), out)


def volume_table(dmax: int, recursion: Optional[VolumeRecursion] = None) -> List[Tuple[VolKey, EvenPoly, EvenPoly]]:
    """All stable (g, n) with 3g - 3 + n <= dmax, ordered by (d, g)."""
    if dmax < 0:
        raise ValueError("dmax must be >= 0")
    rec = recursion or _default
    keys = [
        (g, n)
        for g in range(dmax // 3 + 2)
        for n in range(1, dmax + 4)
        if 2 * g - 2 + n > 0 and 3 * g - 3 + n <= dmax
    ]
    keys.sort(key=lambda k: (3 * k[0] - 3 + k[1], k[0]))
    return [(k, v_poly(*k, rec), vol_poly(*k, rec)) for k in keys]
