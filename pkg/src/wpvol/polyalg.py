"""Sparse exact polynomials and truncated formal series.

Two containers live here:

* :class:`EvenPoly` -- a polynomial in named variables with Fraction
  coefficients.  Volume polynomials use variables ``q1..qn`` standing for the
  squared boundary lengths L_i^2, plus an optional opaque symbol ``P`` for
  pi^2, so only even powers of lengths can ever be represented.
* :class:`TSeries` -- a truncated power series in ``s, t0, t1, ...``.  A
  monomial is a tuple ``(m, n0, n1, ..., nK)`` (s-power first, trailing zero
  t-exponents stripped).  Series attached to a :class:`Window` must consist of
  monomials that each correspond to one stable moduli space (g, n).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .numkit import format_rational

__all__ = [
    "EvenPoly",
    "poly_arith",
    "avg_integrate",
    "Window",
    "Monomial",
    "make_monomial",
    "monomial_gn",
    "TSeries",
    "series_exp",
    "shift_substitute",
    "tseries_from_brackets",
    "bracket_from_monomial",
]

Exps = Tuple[int, ...]


def _grlex_key(exps: Exps) -> Tuple:
    # ascending total degree, then lexicographically largest first
    return (sum(exps), tuple(-e for e in exps))


class EvenPoly:
    """Sparse polynomial over Q in a fixed ordered tuple of variable names."""

    __slots__ = ("variables", "terms")

    def __init__(self, variables: Sequence[str], terms: Optional[Mapping[Exps, Fraction]] = None):
        self.variables: Tuple[str, ...] = tuple(variables)
        nv = len(self.variables)
        clean: Dict[Exps, Fraction] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != nv:
                raise ValueError(f"exponent vector {exps} does not match variables {self.variables}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = Fraction(c)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
                if not clean[exps]:
                    del clean[exps]
        self.terms: Dict[Exps, Fraction] = clean

    @classmethod
    def constant(cls, variables: Sequence[str], c) -> "EvenPoly":
        return cls(variables, {(0,) * len(tuple(variables)): Fraction(c)})

    @classmethod
    def var(cls, variables: Sequence[str], name: str) -> "EvenPoly":
        variables = tuple(variables)
        exps = tuple(1 if v == name else 0 for v in variables)
        if sum(exps) != 1:
            raise ValueError(f"unknown variable {name!r}")
        return cls(variables, {exps: Fraction(1)})

    @staticmethod
    def q_names(n: int, with_pi: bool = False) -> Tuple[str, ...]:
        names = tuple(f"q{i}" for i in range(1, n + 1))
        return names + ("P",) if with_pi else names

    # -- arithmetic -------------------------------------------------------
    def _check(self, other: "EvenPoly") -> None:
        if self.variables != other.variables:
            raise ValueError(f"incompatible variables {self.variables} vs {other.variables}")

    def _coerce(self, other) -> "EvenPoly":
        if isinstance(other, EvenPoly):
            self._check(other)
            return other
        return EvenPoly.constant(self.variables, other)

    def __add__(self, other) -> "EvenPoly":
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, Fraction(0)) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return EvenPoly(self.variables, out)

    __radd__ = __add__

    def __neg__(self) -> "EvenPoly":
        return EvenPoly(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "EvenPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "EvenPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "EvenPoly":
        if not isinstance(other, EvenPoly):
            c = Fraction(other)
            return EvenPoly(self.variables, {e: v * c for e, v in self.terms.items()})
        self._check(other)
        out: Dict[Exps, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return EvenPoly(self.variables, out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, EvenPoly):
            return self.variables == other.variables and self.terms == other.terms
        try:
            return self == EvenPoly.constant(self.variables, other)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self.variables, frozenset(self.terms.items())))

    def __bool__(self) -> bool:
        return bool(self.terms)

    # -- inspection -------------------------------------------------------
    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(exps), Fraction(0))

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def sorted_terms(self) -> List[Tuple[Exps, Fraction]]:
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]))

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for exps, c in self.terms.items():
            term = c
            for name, e in zip(self.variables, exps):
                if e:
                    term *= Fraction(values[name]) ** e
            total += term
        return total

    def permute(self, perm: Sequence[int]) -> "EvenPoly":
        """Rename variable ``i`` to ``perm[i]`` (positions, not names)."""
        out = {}
        for exps, c in self.terms.items():
            new = [0] * len(exps)
            for i, e in enumerate(exps):
                new[perm[i]] = e
            out[tuple(new)] = c
        return EvenPoly(self.variables, out)

    def substitute_zero(self, names: Iterable[str]) -> "EvenPoly":
        zero = {self.variables.index(n) for n in names}
        return EvenPoly(
            self.variables,
            {e: c for e, c in self.terms.items() if all(e[i] == 0 for i in zero)},
        )

    # -- output -----------------------------------------------------------
    def _monomial_text(self, exps: Exps, sep: str = "*") -> str:
        parts = []
        for name, e in zip(self.variables, exps):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return sep.join(parts)

    def to_text(self) -> str:
        """Human-readable form; a common denominator is pulled out front.

        >>> v = EvenPoly(("q1", "P"), {(1, 0): Fraction(1, 48), (0, 1): Fraction(1, 12)})
        >>> v.to_text()
        '(q1 + 4*P)/48'
        """
        if not self.terms:
            return "0"
        den = 1
        for c in self.terms.values():
            den = den * c.denominator // _gcd(den, c.denominator)
        pieces = []
        for exps, c in self.sorted_terms():
            num = c * den
            mono = self._monomial_text(exps)
            mag = abs(num)
            if not mono:
                body = format_rational(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{format_rational(mag)}*{mono}"
            pieces.append((num < 0, body))
        text = ("-" if pieces[0][0] else "") + pieces[0][1]
        for neg, body in pieces[1:]:
            text += (" - " if neg else " + ") + body
        if den == 1:
            return text
        return f"({text})/{den}" if len(pieces) > 1 or pieces[0][0] else f"{text}/{den}"

    __str__ = to_text

    def __repr__(self) -> str:
        return f"EvenPoly({self.variables}, {self.to_text()!r})"

    def to_latex(self, length_symbol: str = "L") -> str:
        """LaTeX with q_i -> L_i^2 and P -> pi^2, terms in canonical order."""
        if not self.terms:
            return "0"
        out = []
        for exps, c in self.sorted_terms():
            factors = []
            for name, e in zip(self.variables, exps):
                if not e:
                    continue
                if name == "P":
                    factors.append(r"\pi^{%d}" % (2 * e))
                else:
                    factors.append("%s_{%s}^{%d}" % (length_symbol, name[1:], 2 * e))
            mono = " ".join(factors)
            mag = abs(c)
            if mag.denominator == 1:
                coef = "" if (mag == 1 and mono) else str(mag.numerator)
            else:
                coef = r"\frac{%d}{%d}" % (mag.numerator, mag.denominator)
            body = f"{coef} {mono}".strip()
            sign = "-" if c < 0 else "+"
            out.append((sign, body))
        text = ("-" if out[0][0] == "-" else "") + out[0][1]
        for sign, body in out[1:]:
            text += f" {sign} {body}"
        return text

    def to_json_obj(self) -> dict:
        return {
            "variables": list(self.variables),
            "terms": [
                {"monomial": list(e), "coeff": format_rational(c)} for e, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "EvenPoly":
        return cls(
            obj["variables"],
            {tuple(t["monomial"]): Fraction(t["coeff"]) for t in obj["terms"]},
        )


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def poly_arith(a: EvenPoly, b: EvenPoly, op: str) -> EvenPoly:
    """Sum or product of two polynomials over the same variables."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def avg_integrate(p: Mapping[int, EvenPoly], upper: str) -> EvenPoly:
    """(1/L) * integral_0^L p(t) dt with L^2 represented by the variable ``upper``.

    ``p`` maps powers of t to coefficient polynomials.  Odd powers of t would
    leave odd powers of L behind, which an :class:`EvenPoly` cannot hold, so
    any nonzero odd-power coefficient is an error.
    """
    result: Optional[EvenPoly] = None
    for k, coeff in p.items():
        if not coeff:
            continue
        if k < 0:
            raise ValueError("negative power of t")
        if k % 2:
            raise ValueError(f"odd power t^{k} survives; the averaged integrand is not even in L")
        idx = coeff.variables.index(upper)
        shifted = {}
        for exps, c in coeff.terms.items():
            e = list(exps)
            e[idx] += k // 2
            shifted[tuple(e)] = c / (k + 1)
        term = EvenPoly(coeff.variables, shifted)
        result = term if result is None else result + term
    if result is None:
        variables = next(iter(p.values())).variables if p else (upper,)
        return EvenPoly(variables)
    return result


# ---------------------------------------------------------------------------
# truncated series in s, t0, t1, ...

Monomial = Tuple[int, ...]


def make_monomial(m: int, t_exps: Sequence[int] = ()) -> Monomial:
    t = list(t_exps)
    while t and t[-1] == 0:
        t.pop()
    if m < 0 or any(e < 0 for e in t):
        raise ValueError("exponents must be nonnegative")
    return (m, *t)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, e in enumerate(b):
        out[i] += e
    return tuple(out)


def monomial_gn(mono: Monomial) -> Optional[Tuple[int, int]]:
    """The (g, n) a series monomial belongs to, or None if it fits no space.

    n counts t-insertions and 3g - 3 + n = m + sum_i i*n_i.
    """
    m, t = mono[0], mono[1:]
    n = sum(t)
    dim = m + sum(i * e for i, e in enumerate(t))
    num = dim + 3 - n
    if num < 0 or num % 3:
        return None
    g = num // 3
    if 2 * g - 2 + n <= 0:
        return None
    return g, n


@dataclass(frozen=True)
class Window:
    """All stable (g, n) with g <= gmax and 1 <= n <= nmax."""

    gmax: int
    nmax: int

    def __post_init__(self):
        if self.gmax < 0 or self.nmax < 1:
            raise ValueError("window needs gmax >= 0 and nmax >= 1")

    def contains(self, g: int, n: int) -> bool:
        return 0 <= g <= self.gmax and 1 <= n <= self.nmax and 2 * g - 2 + n > 0

    def contains_monomial(self, mono: Monomial) -> bool:
        gn = monomial_gn(mono)
        return gn is not None and self.contains(*gn)

    @property
    def dmax(self) -> int:
        """Largest complex dimension 3g - 3 + n inside the window."""
        return max(3 * g - 3 + n for g, n in self.spaces())

    def spaces(self) -> List[Tuple[int, int]]:
        return [
            (g, n)
            for g in range(self.gmax + 1)
            for n in range(1, self.nmax + 1)
            if 2 * g - 2 + n > 0
        ]


class TSeries:
    """Truncated series in s, t0, t1, ... with exact coefficients.

    When ``window`` is given every monomial must map to a stable (g, n) inside
    it; series built from products (exponentials, operator residuals) carry no
    window and are unconstrained.
    """

    __slots__ = ("terms", "window")

    def __init__(self, terms: Optional[Mapping[Monomial, Fraction]] = None, window: Optional[Window] = None):
        clean: Dict[Monomial, Fraction] = {}
        for mono, c in (terms or {}).items():
            mono = make_monomial(mono[0], mono[1:])
            c = Fraction(c)
            if not c:
                continue
            if window is not None and not window.contains_monomial(mono):
                raise ValueError(f"monomial {mono} lies outside {window}")
            v = clean.get(mono, Fraction(0)) + c
            if v:
                clean[mono] = v
            else:
                clean.pop(mono, None)
        self.terms: Dict[Monomial, Fraction] = clean
        self.window = window

    @classmethod
    def one(cls) -> "TSeries":
        return cls({(0,): Fraction(1)})

    def coefficient(self, mono: Sequence[int]) -> Fraction:
        mono = tuple(mono)
        if not mono:
            raise ValueError("a monomial needs at least the s-exponent")
        mono = make_monomial(mono[0], mono[1:])
        if self.window is not None and not self.window.contains_monomial(mono):
            raise ValueError(f"monomial {mono} is not valid for {self.window}")
        return self.terms.get(mono, Fraction(0))

    def items(self) -> List[Tuple[Monomial, Fraction]]:
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0][1:] + (kv[0][0],)))

    def __iter__(self) -> Iterator[Tuple[Monomial, Fraction]]:
        return iter(self.items())

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TSeries):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self) -> str:
        return f"TSeries({len(self.terms)} terms, window={self.window})"

    def __add__(self, other: "TSeries") -> "TSeries":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return TSeries(out)

    def __neg__(self) -> "TSeries":
        return TSeries({m: -c for m, c in self.terms.items()}, self.window)

    def __sub__(self, other: "TSeries") -> "TSeries":
        return self + (-other)

    def scale(self, c) -> "TSeries":
        c = Fraction(c)
        return TSeries({m: v * c for m, v in self.terms.items()}, self.window if c else None)

    def mul(self, other: "TSeries", keep: Optional[Callable[[Monomial], bool]] = None) -> "TSeries":
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                if keep is not None and not keep(m):
                    continue
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return TSeries(out)

    __mul__ = mul

    def tdegree_max(self) -> int:
        return max((sum(m[1:]) for m in self.terms), default=0)

    def derivative(self, i: int) -> "TSeries":
        """Partial derivative in t_i."""
        out = {}
        pos = i + 1
        for m, c in self.terms.items():
            if len(m) > pos and m[pos]:
                new = list(m)
                new[pos] -= 1
                out[tuple(new)] = c * m[pos]
        return TSeries(out)

    def filter(self, keep: Callable[[Monomial], bool]) -> "TSeries":
        return TSeries({m: c for m, c in self.terms.items() if keep(m)})

    def restrict(self, window: Window) -> "TSeries":
        return TSeries(
            {m: c for m, c in self.terms.items() if window.contains_monomial(m)}, window
        )

    def s_part(self, power: int) -> "TSeries":
        """Coefficient of s^power, as an s-free series."""
        return TSeries({(0, *m[1:]): c for m, c in self.terms.items() if m[0] == power})

    def truncate_tdegree(self, nmax: int) -> "TSeries":
        return self.filter(lambda m: sum(m[1:]) <= nmax)

    def to_json_obj(self) -> List[dict]:
        return [{"monomial": list(m), "coeff": format_rational(c)} for m, c in self.items()]

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    def to_latex(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for mono, c in self.items():
            factors = []
            if mono[0]:
                factors.append("s" if mono[0] == 1 else "s^{%d}" % mono[0])
            for i, e in enumerate(mono[1:]):
                if e:
                    factors.append("t_{%d}" % i if e == 1 else "t_{%d}^{%d}" % (i, e))
            mag = abs(c)
            coef = (
                r"\frac{%d}{%d}" % (mag.numerator, mag.denominator)
                if mag.denominator != 1
                else ("" if mag == 1 and factors else str(mag.numerator))
            )
            out.append(("-" if c < 0 else "+", f"{coef} {' '.join(factors)}".strip()))
        text = ("-" if out[0][0] == "-" else "") + out[0][1]
        for sign, body in out[1:]:
            text += f" {sign} {body}"
        return text


def series_exp(f: TSeries, nmax: Optional[int] = None) -> TSeries:
    """exp(f) truncated to total t-degree <= nmax.

    Every monomial of ``f`` must carry at least one t-variable, so the
    truncation is exact: f^r only reaches t-degree >= r.
    """
    if any(sum(m[1:]) == 0 for m in f.terms):
        if f.terms.get((0,)):
            raise ValueError("series_exp requires a zero constant term")
        raise ValueError("series_exp requires every monomial to contain a t-variable")
    if nmax is None:
        nmax = f.window.nmax if f.window is not None else f.tdegree_max()
    keep = lambda m: sum(m[1:]) <= nmax  # noqa: E731
    result = TSeries.one()
    power = TSeries.one()
    for r in range(1, nmax + 1):
        power = power.mul(f, keep).scale(Fraction(1, r))
        if not power:
            break
        result = result + power
    return result


def shift_substitute(
    f: TSeries, shifts: Mapping[int, Fraction], window: Optional[Window] = None
) -> TSeries:
    """Substitute t_j -> t_j + c_j s^(j-1) for the given j >= 2."""
    for j in shifts:
        if j < 2:
            raise ValueError("t0 and t1 are never shifted")
    out: Dict[Monomial, Fraction] = {}
    for mono, c in f.terms.items():
        expansions: List[Tuple[Monomial, Fraction]] = [((mono[0],), c)]
        t = mono[1:]
        for i, e in enumerate(t):
            if not e:
                continue
            cj = Fraction(shifts.get(i, 0))
            step = []
            options = range(e + 1) if cj else (0,)
            for r in options:
                factor = comb(e, r) * cj**r
                piece = [0] * (i + 1)
                piece[i] = e - r
                piece_mono = (r * (i - 1), *piece)
                for base, bc in expansions:
                    step.append((_mono_mul(base, piece_mono), bc * factor))
            expansions = step
        for m, v in expansions:
            m = make_monomial(m[0], m[1:])
            if window is not None and not window.contains_monomial(m):
                continue
            out[m] = out.get(m, Fraction(0)) + v
    return TSeries(out, window)


def tseries_from_brackets(
    entries: Iterable[Tuple[int, int, Sequence[int], Fraction]], window: Optional[Window] = None
) -> TSeries:
    """Build sum value * s^k/k! prod t_i^{n_i}/n_i! from (g, kappa, psi, value)."""
    out: Dict[Monomial, Fraction] = {}
    for _g, kappa, psi, value in entries:
        if not value:
            continue
        counts: List[int] = []
        for d in psi:
            while len(counts) <= d:
                counts.append(0)
            counts[d] += 1
        denom = factorial(kappa)
        for e in counts:
            denom *= factorial(e)
        mono = make_monomial(kappa, counts)
        out[mono] = out.get(mono, Fraction(0)) + Fraction(value) / denom
    return TSeries(out, window)


def bracket_from_monomial(series: TSeries, mono: Monomial) -> Fraction:
    """Undo the s^k/k! prod t^n/n! normalization for one coefficient."""
    mono = make_monomial(mono[0], mono[1:])
    c = series.terms.get(mono, Fraction(0))
    scale = factorial(mono[0])
    for e in mono[1:]:
        scale *= factorial(e)
    return c * scale
