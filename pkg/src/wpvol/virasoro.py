"""Differential operators on truncated series and the constraint families.

A :class:`DiffOp` is a finite sum of terms ``c * s^a * t^mu * d^nu`` with all
multiplications to the left of all derivatives (``mu`` and ``nu`` are
exponent vectors over t0, t1, ...).  Families built here:

* ``L_k``      -- psi-only constraints,
* ``Vhat_k``   -- the beta-deformed constraints annihilating exp(G),
* ``V_k``      -- sum_i alpha_i s^i Vhat_{k+i},
* ``J_p, E_k`` -- the free-boson building blocks in T_{2j+1} = t_j/(2j+1)!!.

Every operator is truncated by an :class:`OpBounds`: terms mentioning a
t-index above ``max_index`` or an s-power above ``max_spow`` are dropped.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Set, Tuple

from .numkit import alpha_coeff, beta_coeff, double_factorial
from .polyalg import Monomial, TSeries, Window, make_monomial

__all__ = [
    "OpBounds",
    "DiffOp",
    "build_L",
    "build_Vhat",
    "build_V",
    "build_J",
    "build_E",
    "commutator",
    "compose",
    "apply",
    "apply_to_exp",
    "safe_predicate",
    "shift_variables",
    "solve_series_from_constraints",
    "ConstraintError",
]

Vec = Tuple[int, ...]
TermKey = Tuple[int, Vec, Vec]  # (s-power, multiplier exponents, derivative exponents)


class ConstraintError(RuntimeError):
    pass


def _strip(v) -> Vec:
    v = list(v)
    while v and v[-1] == 0:
        v.pop()
    return tuple(v)


def _unit(i: int, e: int = 1) -> Vec:
    return tuple([0] * i + [e])


def _vadd(a: Vec, b: Vec) -> Vec:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, e in enumerate(b):
        out[i] += e
    return tuple(out)


def _vsub(a: Vec, b: Vec) -> Vec:
    out = list(a) + [0] * max(0, len(b) - len(a))
    for i, e in enumerate(b):
        out[i] -= e
    return _strip(out)


@dataclass(frozen=True)
class OpBounds:
    max_index: int
    max_spow: int

    @classmethod
    def for_window(cls, window: Window, margin: int = 2) -> "OpBounds":
        # contractions in a commutator can pass through an index one above
        # anything that survives restriction, hence the margin
        return cls(window.dmax + margin, window.dmax)

    def admits(self, key: TermKey) -> bool:
        spow, mult, deriv = key
        return spow <= self.max_spow and len(mult) <= self.max_index + 1 and len(deriv) <= self.max_index + 1


class DiffOp:
    """Finite sum of normally ordered terms; immutable after construction."""

    __slots__ = ("terms", "grade")

    def __init__(self, terms: Optional[Mapping[TermKey, Fraction]] = None, grade: Optional[int] = None):
        clean: Dict[TermKey, Fraction] = {}
        for (a, mu, nu), c in (terms or {}).items():
            key = (a, _strip(mu), _strip(nu))
            v = clean.get(key, Fraction(0)) + Fraction(c)
            if v:
                clean[key] = v
            else:
                clean.pop(key, None)
        self.terms = clean
        self.grade = grade

    # -- algebra ----------------------------------------------------------
    def __add__(self, other: "DiffOp") -> "DiffOp":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        grade = self.grade if self.grade == other.grade else None
        if not self.terms:
            grade = other.grade
        elif not other.terms:
            grade = self.grade
        return DiffOp(out, grade)

    def __neg__(self) -> "DiffOp":
        return DiffOp({k: -c for k, c in self.terms.items()}, self.grade)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def scale(self, c, spow: int = 0) -> "DiffOp":
        """Multiply by the scalar c * s^spow."""
        c = Fraction(c)
        return DiffOp({(a + spow, mu, nu): v * c for (a, mu, nu), v in self.terms.items()}, self.grade)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"DiffOp({len(self.terms)} terms, grade={self.grade})"

    # -- inspection -------------------------------------------------------
    @property
    def order(self) -> int:
        return max((sum(nu) for _, _, nu in self.terms), default=0)

    def items(self) -> List[Tuple[TermKey, Fraction]]:
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0][2]), kv[0][2], kv[0][0], kv[0][1]))

    def restrict(self, bounds: OpBounds) -> "DiffOp":
        return DiffOp({k: c for k, c in self.terms.items() if bounds.admits(k)}, self.grade)

    def at_s_zero(self) -> "DiffOp":
        return DiffOp({k: c for k, c in self.terms.items() if k[0] == 0}, self.grade)

    def constant_part(self) -> Dict[Tuple[int, Vec], Fraction]:
        """The multiplication-only terms, keyed by (s-power, t-exponents)."""
        return {(a, mu): c for (a, mu, nu), c in self.terms.items() if not nu}

    def to_text(self) -> str:
        pieces = []
        for (a, mu, nu), c in self.items():
            f = [str(c)]
            if a:
                f.append("s" if a == 1 else f"s^{a}")
            f += [f"t{i}" if e == 1 else f"t{i}^{e}" for i, e in enumerate(mu) if e]
            f += [f"d{i}" if e == 1 else f"d{i}^{e}" for i, e in enumerate(nu) if e]
            pieces.append("*".join(f))
        return " + ".join(pieces) if pieces else "0"


def _add_term(out: Dict[TermKey, Fraction], key: TermKey, c: Fraction) -> None:
    v = out.get(key, Fraction(0)) + c
    if v:
        out[key] = v
    else:
        out.pop(key, None)


def _leibniz(nu: Vec, mu: Vec) -> List[Tuple[Vec, int]]:
    """Ways the derivatives d^nu act on t^mu: (lambda, weight) with lambda != 0."""
    opts: List[List[Tuple[int, int]]] = []
    for i in range(min(len(nu), len(mu))):
        col = [(0, 1)]
        for l in range(1, min(nu[i], mu[i]) + 1):
            col.append((l, comb(nu[i], l) * factorial(mu[i]) // factorial(mu[i] - l)))
        opts.append(col)
    out: List[Tuple[Vec, int]] = []

    def rec(i: int, lam: List[int], w: int) -> None:
        if i == len(opts):
            if any(lam):
                out.append((tuple(lam), w))
            return
        for l, wl in opts[i]:
            lam.append(l)
            rec(i + 1, lam, w * wl)
            lam.pop()

    rec(0, [], 1)
    return out


def _contractions(a: DiffOp, b: DiffOp, bounds: Optional[OpBounds]) -> Dict[TermKey, Fraction]:
    """a∘b minus its fully normal-ordered part (the terms where a's derivatives hit b's t's)."""
    by_var: Dict[int, List[Tuple[TermKey, Fraction]]] = defaultdict(list)
    for key, c in b.terms.items():
        for i, e in enumerate(key[1]):
            if e:
                by_var[i].append((key, c))
    out: Dict[TermKey, Fraction] = {}
    for (a1, mu1, nu1), c1 in a.terms.items():
        if not nu1:
            continue
        seen: Set[TermKey] = set()
        for i, e in enumerate(nu1):
            if not e:
                continue
            for key2, c2 in by_var.get(i, ()):
                if key2 in seen:
                    continue
                seen.add(key2)
                a2, mu2, nu2 = key2
                for lam, w in _leibniz(nu1, mu2):
                    key = (a1 + a2, _vadd(mu1, _vsub(mu2, lam)), _vadd(_vsub(nu1, lam), nu2))
                    if bounds is not None and not bounds.admits(key):
                        continue
                    _add_term(out, key, c1 * c2 * w)
    return out


def _juxtapose(a: DiffOp, b: DiffOp, bounds: Optional[OpBounds] = None) -> Dict[TermKey, Fraction]:
    out: Dict[TermKey, Fraction] = {}
    for (a1, mu1, nu1), c1 in a.terms.items():
        for (a2, mu2, nu2), c2 in b.terms.items():
            key = (a1 + a2, _vadd(mu1, mu2), _vadd(nu1, nu2))
            if bounds is not None and not bounds.admits(key):
                continue
            _add_term(out, key, c1 * c2)
    return out


def compose(a: DiffOp, b: DiffOp, bounds: Optional[OpBounds] = None) -> DiffOp:
    """The operator product a∘b, normally ordered."""
    out = _juxtapose(a, b, bounds)
    for k, c in _contractions(a, b, bounds).items():
        _add_term(out, k, c)
    grade = a.grade + b.grade if a.grade is not None and b.grade is not None else None
    return DiffOp(out, grade)


def commutator(a: DiffOp, b: DiffOp, bounds: Optional[OpBounds] = None) -> DiffOp:
    """[a, b] = a∘b - b∘a; only contraction terms survive."""
    out = _contractions(a, b, bounds)
    for k, c in _contractions(b, a, bounds).items():
        _add_term(out, k, -c)
    grade = a.grade + b.grade if a.grade is not None and b.grade is not None else None
    return DiffOp(out, grade)


# ---------------------------------------------------------------------------
# operator families

def _df(n: int) -> int:
    return double_factorial(n)


def _first_order_sum(k: int, bounds: OpBounds, weight: Callable[[int], Fraction]) -> Dict[TermKey, Fraction]:
    """(1/2) sum_{i,j} (2(i+j+k)+1)!!/(2j-1)!! weight(i) s^i t_j d_{i+j+k}."""
    out: Dict[TermKey, Fraction] = {}
    for i in range(bounds.max_spow + 1):
        w = weight(i)
        if not w:
            continue
        for j in range(bounds.max_index + 1):
            target = i + j + k
            if target < 0 or target > bounds.max_index:
                continue
            c = Fraction(_df(2 * target + 1), 2 * _df(2 * j - 1)) * w
            _add_term(out, (i, _unit(j), _unit(target)), c)
    return out


def _second_order_sum(k: int, bounds: OpBounds, weight: Callable[[int], Fraction]) -> Dict[TermKey, Fraction]:
    """(1/4) sum_i sum_{d1+d2=i+k-1} (2d1+1)!!(2d2+1)!! weight(i) s^i d_{d1} d_{d2}."""
    out: Dict[TermKey, Fraction] = {}
    for i in range(bounds.max_spow + 1):
        w = weight(i)
        if not w:
            continue
        total = i + k - 1
        for d1 in range(0, total + 1):
            d2 = total - d1
            if max(d1, d2) > bounds.max_index:
                continue
            deriv = _vadd(_unit(d1), _unit(d2))
            c = Fraction(_df(2 * d1 + 1) * _df(2 * d2 + 1), 4) * w
            _add_term(out, (i, (), deriv), c)
    return out


def _leading(k: int, bounds: OpBounds) -> Dict[TermKey, Fraction]:
    if k + 1 > bounds.max_index:
        return {}
    return {(0, (), _unit(k + 1)): Fraction(-_df(2 * k + 3), 2)}


def _constants(k: int, with_s: bool) -> Dict[TermKey, Fraction]:
    out: Dict[TermKey, Fraction] = {}
    if k == -1:
        out[(0, (2,), ())] = Fraction(1, 4)
        if with_s:
            out[(1, (), ())] = Fraction(1, 48)
    if k == 0:
        out[(0, (), ())] = Fraction(1, 16)
    return out


def _check_k(k: int) -> None:
    if k < -1:
        raise ValueError(f"operator index must be >= -1, got {k}")


def build_L(k: int, bounds: OpBounds) -> DiffOp:
    """Psi-only constraint operator L_k (the s = 0 specialization of Vhat_k)."""
    _check_k(k)
    only_zero = lambda i: Fraction(1) if i == 0 else Fraction(0)  # noqa: E731
    terms = _leading(k, bounds)
    for part in (_first_order_sum(k, bounds, only_zero), _second_order_sum(k, bounds, only_zero), _constants(k, False)):
        for key, c in part.items():
            _add_term(terms, key, c)
    return DiffOp(terms, grade=k)


def build_Vhat(k: int, bounds: OpBounds) -> DiffOp:
    """Constraint operator annihilating exp(G), with beta_i s^i weights."""
    _check_k(k)
    terms = _leading(k, bounds)
    for part in (_first_order_sum(k, bounds, beta_coeff), _second_order_sum(k, bounds, beta_coeff), _constants(k, True)):
        for key, c in part.items():
            _add_term(terms, key, c)
    return DiffOp(terms, grade=k).restrict(bounds)


def build_V(k: int, bounds: OpBounds) -> DiffOp:
    """V_k = sum_i alpha_i s^i Vhat_{k+i}, truncated at s^max_spow."""
    _check_k(k)
    total = DiffOp(grade=k)
    for i in range(bounds.max_spow + 1):
        total = total + build_Vhat(k + i, bounds).scale(alpha_coeff(i), spow=i)
    return DiffOp(total.restrict(bounds).terms, grade=k)


def build_J(p: int, bounds: OpBounds) -> DiffOp:
    """Boson mode J_p in t-variables; J_p for p < 0 multiplies by -p T_{-p}."""
    if p % 2 == 0:
        raise ValueError("only odd boson modes J_p act on the odd times T_{2j+1}")
    if p > 0:
        j = (p - 1) // 2
        if j > bounds.max_index:
            return DiffOp(grade=(p - 3) // 2)
        return DiffOp({(0, (), _unit(j)): Fraction(_df(p))}, grade=(p - 3) // 2)
    j = (-p - 1) // 2
    if j > bounds.max_index:
        return DiffOp(grade=(p - 3) // 2)
    return DiffOp({(0, _unit(j), ()): Fraction(-p, _df(-p))}, grade=(p - 3) // 2)


def build_E(k: int, bounds: OpBounds) -> DiffOp:
    """E_k = (1/4) sum_p :J_{2p+1} J_{2(k-p)-1}: + delta_{k,0}/16, multiplications left."""
    terms: Dict[TermKey, Fraction] = {}
    for p in range(-bounds.max_index - 1, bounds.max_index + 1):
        a = build_J(2 * p + 1, bounds)
        b = build_J(2 * (k - p) - 1, bounds)
        if not a or not b:
            continue
        for key, c in _juxtapose(a, b, bounds).items():
            _add_term(terms, key, c / 4)
    if k == 0:
        _add_term(terms, (0, (), ()), Fraction(1, 16))
    return DiffOp(terms, grade=k)


def shift_variables(op: DiffOp, shifts: Mapping[int, Fraction], bounds: Optional[OpBounds] = None) -> DiffOp:
    """Rewrite multipliers t_j as t_j + d_j s^(j-1); derivatives are unchanged."""
    out: Dict[TermKey, Fraction] = {}
    for (a, mu, nu), c in op.terms.items():
        expansions = [((a, ()), c)]
        for j, e in enumerate(mu):
            if not e:
                continue
            d = Fraction(shifts.get(j, 0))
            nxt = []
            for r in (range(e + 1) if d else (0,)):
                w = comb(e, r) * d**r
                for (sa, smu), sc in expansions:
                    nxt.append(((sa + r * (j - 1), _vadd(smu, _unit(j, e - r))), sc * w))
            expansions = nxt
        for (sa, smu), sc in expansions:
            key = (sa, _strip(smu), nu)
            if bounds is not None and not bounds.admits(key):
                continue
            _add_term(out, key, sc)
    return DiffOp(out, op.grade)


# ---------------------------------------------------------------------------
# action on series

def _mono_times(a: Monomial, spow: int, mu: Vec) -> Monomial:
    t = list(a[1:]) + [0] * max(0, len(mu) - len(a) + 1)
    for i, e in enumerate(mu):
        t[i] += e
    return make_monomial(a[0] + spow, t)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, e in enumerate(b):
        out[i] += e
    return tuple(out)


def _deriv(f: TSeries, nu: Vec) -> TSeries:
    out = f
    for i, e in enumerate(nu):
        for _ in range(e):
            out = out.derivative(i)
    return out


def apply(op: DiffOp, f: TSeries) -> TSeries:
    """Plain action op(f)."""
    out: Dict[Monomial, Fraction] = {}
    for (a, mu, nu), c in op.terms.items():
        for m, v in _deriv(f, nu).terms.items():
            key = _mono_times(m, a, mu)
            out[key] = out.get(key, Fraction(0)) + c * v
    return TSeries(out)


def safe_predicate(grade: int, window: Window) -> Callable[[Monomial], bool]:
    """Residual monomials of a grade-k constraint that truncation cannot corrupt.

    A residual at s^m t^mu encodes a relation for <kappa^m tau_{k+1} mu>_g
    with n = |mu| + 1; it involves spaces (g, n), (g, n-1), splits of
    (g, n+1) and (g-1, n+1), so it is exact when g <= gmax and n + 1 <= nmax.
    """

    def safe(mono: Monomial) -> bool:
        m, t = mono[0], mono[1:]
        n = sum(t) + 1
        num = m + grade + 1 + sum(i * e for i, e in enumerate(t)) + 3 - n
        if num < 0 or num % 3:
            return False
        g = num // 3
        return g <= window.gmax and n + 1 <= window.nmax and 2 * g - 2 + n > 0

    return safe


def apply_to_exp(
    op: DiffOp,
    f: TSeries,
    window: Optional[Window] = None,
    keep: Optional[Callable[[Monomial], bool]] = None,
    tdeg_max: Optional[int] = None,
    spow_max: Optional[int] = None,
) -> TSeries:
    """e^{-f} op e^{f} for an operator of order <= 2.

    With ``window`` the result is restricted to the safe sub-window of the
    operator's grade; ``keep`` further filters monomials.  ``tdeg_max`` and
    ``spow_max`` are pruning hints that must cover every kept monomial.
    """
    if f.terms.get((0,)):
        raise ValueError("apply_to_exp requires a series without constant term")
    if op.order > 2:
        raise ValueError("apply_to_exp handles operators of order <= 2 only")
    preds = []
    if window is not None:
        if op.grade is None:
            raise ValueError("restricting to a safe sub-window needs an operator grade")
        preds.append(safe_predicate(op.grade, window))
        tdeg_max = window.nmax - 2 if tdeg_max is None else min(tdeg_max, window.nmax - 2)
        spow_max = window.dmax if spow_max is None else min(spow_max, window.dmax)
    if keep is not None:
        preds.append(keep)
    accept = (lambda m: all(p(m) for p in preds)) if preds else (lambda m: True)

    def prune(series: TSeries) -> TSeries:
        if tdeg_max is None and spow_max is None:
            return series
        return series.filter(
            lambda m: (tdeg_max is None or sum(m[1:]) <= tdeg_max) and (spow_max is None or m[0] <= spow_max)
        )

    first: Dict[int, TSeries] = {}

    def d1(i: int) -> TSeries:
        if i not in first:
            first[i] = prune(f.derivative(i))
        return first[i]

    out: Dict[Monomial, Fraction] = {}

    def put(m: Monomial, v: Fraction) -> None:
        if accept(m):
            out[m] = out.get(m, Fraction(0)) + v

    for (a, mu, nu), c in op.terms.items():
        idx = [i for i, e in enumerate(nu) for _ in range(e)]
        if not idx:
            put(_mono_times((0,), a, mu), c)
            continue
        if len(idx) == 1:
            for m, v in d1(idx[0]).terms.items():
                put(_mono_times(m, a, mu), c * v)
            continue
        i, j = idx
        # the second derivative starts from f itself: pruning f_i first would
        # drop terms that only fall under the bound after the second derivative
        for m, v in prune(f.derivative(i).derivative(j)).terms.items():
            put(_mono_times(m, a, mu), c * v)
        left, right = d1(i), d1(j)
        for m1, v1 in left.terms.items():
            for m2, v2 in right.terms.items():
                m = _mono_times(_mono_mul(m1, m2), a, mu)
                if tdeg_max is not None and sum(m[1:]) > tdeg_max:
                    continue
                put(m, c * v1 * v2)
    return TSeries(out)


# ---------------------------------------------------------------------------
# solving for the generating function

def _closure_spaces(window: Window) -> List[Tuple[int, int]]:
    """Spaces reachable from the window by the constraint recursion."""
    spaces = []
    for g in range(window.gmax + 1):
        for n in range(1, window.nmax + window.gmax - g + 1):
            if 2 * g - 2 + n > 0:
                spaces.append((g, n))
    return spaces


def _targets(g: int, n: int, with_kappa: bool):
    from .intersect import _partitions

    d = 3 * g - 3 + n
    for kappa in range(d + 1 if with_kappa else 1):
        for psi in _partitions(d - kappa, n):
            yield kappa, psi


def solve_series_from_constraints(family: str, window: Window) -> TSeries:
    """Determine the generating function from its constraints alone.

    ``family`` is ``"L"`` (psi-only, gives F) or ``"Vhat"`` (gives G).  Targets
    are processed by increasing 2g - 2 + n; a target whose largest psi
    exponent is d >= 1 is read off the grade d - 1 constraint, otherwise from
    the grade -1 constraint.  Nothing is seeded.
    """
    if family not in ("L", "Vhat"):
        raise ValueError("family must be 'L' or 'Vhat'")
    with_kappa = family == "Vhat"
    spaces = _closure_spaces(window)
    closure_dmax = max(3 * g - 3 + n for g, n in spaces)
    bounds = OpBounds(closure_dmax + 2, closure_dmax if with_kappa else 0)
    builder = build_Vhat if with_kappa else build_L
    ops: Dict[int, DiffOp] = {}

    levels: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
    for g, n in spaces:
        levels[2 * g - 2 + n].append((g, n))

    f = TSeries()
    for level in sorted(levels):
        # group this level's targets by the constraint that determines them
        plan: Dict[int, Dict[Monomial, Tuple[Monomial, int]]] = defaultdict(dict)
        for g, n in levels[level]:
            for kappa, psi in _targets(g, n, with_kappa):
                top = psi[0]
                k = top - 1 if top >= 1 else -1
                counts = [0] * (max(psi) + 1)
                for d in psi:
                    counts[d] += 1
                target = make_monomial(kappa, counts)
                counts[k + 1] -= 1
                residual_mono = make_monomial(kappa, counts)
                plan[k][residual_mono] = (target, counts[k + 1] + 1)
        solved: Dict[Monomial, Fraction] = {}
        for k, wanted in plan.items():
            if k not in ops:
                ops[k] = builder(k, bounds)
            keys = set(wanted)
            res = apply_to_exp(
                ops[k],
                f,
                keep=keys.__contains__,
                tdeg_max=max(sum(m[1:]) for m in keys),
                spow_max=max(m[0] for m in keys),
            )
            lead = Fraction(double_factorial(2 * k + 3), 2)
            for mono, (target, mult) in wanted.items():
                known = res.terms.get(mono, Fraction(0))
                if not lead * mult:
                    raise ConstraintError(f"constraint {k} does not determine {target}")
                value = known / (lead * mult)
                if value:
                    solved[target] = value
        if solved:
            f = f + TSeries(solved)
    return f.restrict(window)
