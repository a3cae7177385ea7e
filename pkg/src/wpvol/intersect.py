"""Mixed kappa_1 / psi intersection numbers.

Three evaluators live here:

* :class:`IntersectionNumbers` -- the memoized recursion for
  <kappa_1^k0 tau_d1 ... tau_dn>_g derived from the volume recursion,
* :func:`genus0_string_oracle` -- genus-0 pure-psi numbers from the string
  equation alone,
* :func:`kappa_from_psi` -- kappa_1 powers traded for psi insertions through
  the time shift t_j -> t_j + c_j s^(j-1).

Keys are ``(g, kappa, psi)`` with ``psi`` a tuple sorted in descending order.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb, factorial
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .numkit import beta_coeff, double_factorial, format_rational, gamma_shift_coeff

__all__ = [
    "BracketKey",
    "canonical_key",
    "IntersectionNumbers",
    "bracket",
    "default_numbers",
    "genus0_string_oracle",
    "kappa_from_psi",
    "iter_keys",
    "CONVENTION",
    "CacheError",
]

log = logging.getLogger(__name__)

BracketKey = Tuple[int, int, Tuple[int, ...]]

# Bumped whenever a change could alter stored values.
CONVENTION = "wpv-brackets/v1: double-factorial recursion, kappa_1 only, M11 stack normalization"


class CacheError(ValueError):
    pass


def canonical_key(g: int, kappa: int, psi: Iterable[int]) -> BracketKey:
    psi = tuple(sorted((int(d) for d in psi), reverse=True))
    if g < 0 or kappa < 0 or any(d < 0 for d in psi):
        raise ValueError("genus, kappa power and psi exponents must be nonnegative")
    if not psi:
        raise ValueError("at least one psi insertion (marked point) is required")
    if 2 * g - 2 + len(psi) <= 0:
        raise ValueError(f"(g, n) = ({g}, {len(psi)}) is unstable: need 2g - 2 + n > 0")
    return (g, kappa, psi)


def _dim_ok(g: int, kappa: int, psi: Sequence[int]) -> bool:
    return kappa + sum(psi) == 3 * g - 3 + len(psi)


def _stable(g: int, n: int) -> bool:
    return g >= 0 and n >= 1 and 2 * g - 2 + n > 0


def _df(n: int) -> int:
    return double_factorial(n)


def _submultisets(counts: Dict[int, int]) -> Iterator[Tuple[Dict[int, int], Dict[int, int], int]]:
    """All ways to split a multiset; yields (left, right, prod of binomials)."""
    items = sorted(counts.items())
    for choice in product(*(range(c + 1) for _, c in items)):
        left, right, mult = {}, {}, 1
        for (d, c), l in zip(items, choice):
            if l:
                left[d] = l
            if c - l:
                right[d] = c - l
            mult *= comb(c, l)
        yield left, right, mult


def _expand(counts: Dict[int, int]) -> List[int]:
    out: List[int] = []
    for d, c in counts.items():
        out.extend([d] * c)
    return out


class IntersectionNumbers:
    """Memoized evaluator for <kappa_1^k0 prod tau_di>_g.

    The memo is a get-or-compute table: entries are published once and never
    mutated, so several threads may share an instance.  ``computed`` counts
    values produced by the recursion (cache hits and loaded entries do not
    count).
    """

    def __init__(self, cache_path: Optional[os.PathLike] = None):
        self._memo: Dict[BracketKey, Fraction] = {}
        self._lock = threading.Lock()
        self.computed = 0
        self.loaded = 0
        self.cache_path = Path(cache_path) if cache_path else None
        if self.cache_path is not None and self.cache_path.exists():
            self.load(self.cache_path)

    # -- public API -------------------------------------------------------
    def __call__(self, g: int, kappa: int, psi: Iterable[int]) -> Fraction:
        return self.value(canonical_key(g, kappa, psi))

    def value(self, key: BracketKey) -> Fraction:
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        g, kappa, psi = key
        if not _dim_ok(g, kappa, psi):
            return Fraction(0)
        val = self._compute(g, kappa, psi)
        with self._lock:
            val = self._memo.setdefault(key, val)
            self.computed += 1
        return val

    def __len__(self) -> int:
        return len(self._memo)

    def entries(self) -> List[Tuple[BracketKey, Fraction]]:
        return sorted(self._memo.items())

    # -- recursion --------------------------------------------------------
    def _sub(self, g: int, kappa: int, psi: List[int]) -> Fraction:
        if kappa < 0 or any(d < 0 for d in psi) or not _stable(g, len(psi)):
            return Fraction(0)
        if not _dim_ok(g, kappa, psi):
            return Fraction(0)
        return self.value((g, kappa, tuple(sorted(psi, reverse=True))))

    def _compute(self, g: int, k0: int, psi: Tuple[int, ...]) -> Fraction:
        n = len(psi)
        if (g, n) == (0, 3):
            return Fraction(1)
        if (g, n) == (1, 1):
            # <tau_1>_1 = <kappa_1 tau_0>_1 = 1/24
            return Fraction(1, 24)
        k = psi[0]
        rest = Counter(psi[1:])
        k0fact = factorial(k0)
        total = Fraction(0)

        # nonseparating: glue two new points onto genus g-1
        if g >= 1:
            top = k0 + k - 2
            for d0 in range(0, min(k0, top) + 1):
                b = beta_coeff(k0 - d0)
                if not b:
                    continue
                w0 = Fraction(k0fact, factorial(d0)) * b
                for d1 in range(0, top - d0 + 1):
                    d2 = top - d0 - d1
                    v = self._sub(g - 1, d0, [d1, d2, *psi[1:]])
                    if v:
                        total += Fraction(1, 2) * w0 * _df(2 * d1 + 1) * _df(2 * d2 + 1) * v

        # separating: ordered splits of genus and of the remaining insertions
        top = k0 + k - 2
        if top >= 0:
            for left, right, mult in _submultisets(dict(rest)):
                l_list, r_list = _expand(left), _expand(right)
                n1, n2 = len(l_list) + 1, len(r_list) + 1
                for g1 in range(g + 1):
                    g2 = g - g1
                    if not (_stable(g1, n1) and _stable(g2, n2)):
                        continue
                    for d0 in range(0, k0 + 1):
                        for d0p in range(0, k0 - d0 + 1):
                            b = beta_coeff(k0 - d0 - d0p)
                            if not b:
                                continue
                            # each factor's dimension fixes its new psi exponent
                            d1 = 3 * g1 - 3 + n1 - d0 - sum(l_list)
                            d1p = 3 * g2 - 3 + n2 - d0p - sum(r_list)
                            if d1 < 0 or d1p < 0 or d0 + d1 + d0p + d1p != top:
                                continue
                            v1 = self._sub(g1, d0, [d1] + l_list)
                            if not v1:
                                continue
                            v2 = self._sub(g2, d0p, [d1p] + r_list)
                            if not v2:
                                continue
                            w = Fraction(k0fact, factorial(d0) * factorial(d0p)) * b
                            total += Fraction(1, 2) * w * _df(2 * d1 + 1) * _df(2 * d1p + 1) * mult * v1 * v2

        # boundary joining: tau_j merges with the distinguished point
        for j, nj in rest.items():
            reduced = list(psi[1:])
            reduced.remove(j)
            top = k0 + k + j - 1
            for d0 in range(0, min(k0, top) + 1):
                b = beta_coeff(k0 - d0)
                if not b:
                    continue
                d1 = top - d0
                v = self._sub(g, d0, [d1] + reduced)
                if v:
                    total += (
                        Fraction(k0fact, factorial(d0)) * b
                        * Fraction(_df(2 * d1 + 1), _df(2 * j - 1)) * nj * v
                    )

        return total / _df(2 * k + 1)

    def value_with_distinguished(self, g: int, kappa: int, psi: Sequence[int], index: int) -> Fraction:
        """Evaluate one recursion step with ``psi[index]`` as the distinguished point.

        Sub-brackets come from the memoized evaluator; only the top-level
        choice changes.  Used to check that the result does not depend on
        which insertion the recursion consumes.
        """
        key = canonical_key(g, kappa, psi)
        if not _dim_ok(*key):
            return Fraction(0)
        psi = list(psi)
        chosen = psi.pop(index)
        # reorder so the chosen insertion comes first, keeping the rest intact
        return self._compute(g, kappa, (chosen, *psi))

    # -- persistence ------------------------------------------------------
    @staticmethod
    def _header(body_digest: str, count: int) -> dict:
        return {
            "kind": "wpv-bracket-cache",
            "convention": CONVENTION,
            "convention_sha256": hashlib.sha256(CONVENTION.encode()).hexdigest(),
            "entries": count,
            "body_sha256": body_digest,
        }

    def save(self, path: Optional[os.PathLike] = None) -> Path:
        path = Path(path or self.cache_path or "")
        if not str(path):
            raise CacheError("no cache path given")
        lines = [
            json.dumps(
                {"g": g, "kappa": k, "psi": list(psi), "value": format_rational(v)},
                separators=(",", ":"),
            )
            for (g, k, psi), v in self.entries()
        ]
        body = "\n".join(lines)
        header = self._header(hashlib.sha256(body.encode()).hexdigest(), len(lines))
        tmp = path.with_name(path.name + ".tmp")
        with self._lock:
            tmp.write_text(json.dumps(header) + "\n" + body + ("\n" if body else ""))
            os.replace(tmp, path)
        return path

    def load(self, path: os.PathLike) -> int:
        """Merge a cache file; returns the number of entries loaded.

        The header must record the current convention and the body digest
        must match, otherwise :class:`CacheError` is raised and nothing is
        loaded.
        """
        text = Path(path).read_text()
        head, _, body = text.partition("\n")
        try:
            header = json.loads(head)
        except json.JSONDecodeError as exc:
            raise CacheError(f"{path}: unreadable header") from exc
        if header.get("kind") != "wpv-bracket-cache":
            raise CacheError(f"{path}: not a bracket cache")
        if header.get("convention_sha256") != hashlib.sha256(CONVENTION.encode()).hexdigest():
            raise CacheError(f"{path}: written under a different convention ({header.get('convention')!r})")
        body = body.rstrip("\n")
        if hashlib.sha256(body.encode()).hexdigest() != header.get("body_sha256"):
            raise CacheError(f"{path}: body checksum mismatch")
        loaded = {}
        for line in body.splitlines() if body else []:
            rec = json.loads(line)
            key = canonical_key(rec["g"], rec["kappa"], rec["psi"])
            loaded[key] = Fraction(rec["value"])
        with self._lock:
            for key, v in loaded.items():
                self._memo.setdefault(key, v)
        self.loaded += len(loaded)
        log.info("loaded %d brackets from %s", len(loaded), path)
        return len(loaded)


_default: Optional[IntersectionNumbers] = None
_default_lock = threading.Lock()


def default_numbers() -> IntersectionNumbers:
    """Process-wide evaluator, seeded from $WPV_CACHE when set."""
    global _default
    with _default_lock:
        if _default is None:
            path = os.environ.get("WPV_CACHE")
            _default = IntersectionNumbers(path if path else None)
        return _default


def bracket(g: int, kappa: int, psi: Iterable[int]) -> Fraction:
    """<kappa_1^kappa prod tau_psi>_g via the memoized recursion."""
    return default_numbers()(g, kappa, psi)


@lru_cache(maxsize=None)
def _string0(psi: Tuple[int, ...]) -> Fraction:
    n = len(psi)
    if sum(psi) != n - 3:
        return Fraction(0)
    if n == 3:
        return Fraction(1)
    # dimension forces a tau_0 whenever n >= 4
    rest = list(psi)
    rest.remove(0)
    total = Fraction(0)
    for i, d in enumerate(rest):
        if d == 0:
            continue
        lowered = rest.copy()
        lowered[i] = d - 1
        total += _string0(tuple(sorted(lowered, reverse=True)))
    return total


def genus0_string_oracle(psi: Iterable[int]) -> Fraction:
    """Genus-0 <prod tau_di> from the string equation and <tau_0^3> = 1 only."""
    psi = tuple(sorted(psi, reverse=True))
    if len(psi) < 3:
        raise ValueError("genus 0 needs at least three marked points")
    return _string0(psi)


def _shift_patterns(m: int, jmax: int) -> Iterator[Dict[int, int]]:
    """All {j: r_j} (j >= 2) with sum r_j (j - 1) = m."""

    def rec(remaining: int, j: int) -> Iterator[Dict[int, int]]:
        if remaining == 0:
            yield {}
            return
        if j > jmax or j - 1 > remaining:
            return
        for r in range(remaining // (j - 1), -1, -1):
            for tail in rec(remaining - r * (j - 1), j + 1):
                out = dict(tail)
                if r:
                    out[j] = r
                yield out

    yield from rec(m, 2)


def kappa_from_psi(
    m: int, psi: Iterable[int], g: int, numbers: Optional[IntersectionNumbers] = None
) -> Fraction:
    """<kappa_1^m prod tau_psi>_g computed from pure-psi numbers alone.

    m! * sum over {r_j} with sum r_j (j-1) = m of prod c_j^r_j / r_j!
    times <prod tau_psi prod_j tau_j^r_j>_g.
    """
    psi = list(psi)
    if m + sum(psi) != 3 * g - 3 + len(psi):
        return Fraction(0)
    numbers = numbers or default_numbers()
    total = Fraction(0)
    for pattern in _shift_patterns(m, m + 1):
        weight = Fraction(1)
        extra: List[int] = []
        for j, r in pattern.items():
            weight *= gamma_shift_coeff(j) ** r / factorial(r)
            extra.extend([j] * r)
        total += weight * numbers(g, 0, psi + extra)
    return factorial(m) * total


def iter_keys(dmax: int) -> Iterator[BracketKey]:
    """Every dimension-admissible key with 3g - 3 + n <= dmax."""
    for g in range(0, dmax // 3 + 2):
        for n in range(1, dmax + 4):
            d = 3 * g - 3 + n
            if d < 0 or d > dmax or not _stable(g, n):
                continue
            for kappa in range(d + 1):
                for psi in _partitions(d - kappa, n):
                    yield (g, kappa, psi)


def _partitions(total: int, parts: int, largest: Optional[int] = None) -> Iterator[Tuple[int, ...]]:
    """Descending tuples of ``parts`` nonnegative integers summing to ``total``."""
    if largest is None:
        largest = total
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, largest), -1, -1):
        if first * parts < total:
            break
        for tail in _partitions(total - first, parts - 1, first):
            yield (first, *tail)
