"""The integral kernel K(x, t), its exact moment polynomials, and quadrature checks.

This is the only module that uses floating point.  The exact moments
``h_closed(k)`` are what the volume recursion consumes; the quadrature
routines exist to check those closed forms against the defining integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy.special import expit, gammaincc

from .numkit import bernoulli

__all__ = [
    "HPoly",
    "h_closed",
    "kernel_eval",
    "QuadReport",
    "adaptive_gauss_legendre",
    "quad_check_single",
    "quad_check_double",
    "tail_bound",
]


@dataclass(frozen=True)
class HPoly:
    """Even polynomial in t: ``coeffs[m]`` is the coefficient of t^(2m)."""

    k: int
    coeffs: Tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return 2 * (len(self.coeffs) - 1)

    def __call__(self, t) -> float:
        t2 = float(t) ** 2
        return float(sum(float(c) * t2**m for m, c in enumerate(self.coeffs)))

    def exact(self, t: Fraction) -> Fraction:
        t2 = Fraction(t) ** 2
        return sum((c * t2**m for m, c in enumerate(self.coeffs)), Fraction(0))

    def as_dict(self) -> Dict[int, Fraction]:
        """Map power of t -> coefficient, zero entries dropped."""
        return {2 * m: c for m, c in enumerate(self.coeffs) if c}


@lru_cache(maxsize=None)
def h_closed(k: int) -> HPoly:
    """Closed form of integral_0^inf x^(2k+1)/(2k+1)! K(x,t) dx."""
    if k < 0:
        raise ValueError("k must be >= 0")
    coeffs = [Fraction(0)] * (k + 2)
    for m in range(k + 2):
        sign = -1 if (m - 1) % 2 else 1
        c = sign * (4**m - 2) * bernoulli(m) / factorial(2 * m)
        power = 2 * k + 2 - 2 * m
        coeffs[power // 2] += c / factorial(power)
    return HPoly(k, tuple(coeffs))


def kernel_eval(x, t):
    """K(x,t) = 1/(1+e^{pi(x+t)}) + 1/(1+e^{pi(x-t)}); vectorized, overflow-safe."""
    x = np.asarray(x, dtype=float)
    return expit(-math.pi * (x + t)) + expit(-math.pi * (x - t))


@dataclass
class QuadReport:
    numeric: float
    exact: float
    abs_err: float
    panels_used: int
    tol: float
    converged: bool = True

    @property
    def ok(self) -> bool:
        return self.converged and self.abs_err < self.tol


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _gl_panel(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * float(np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES)))


def adaptive_gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float,
    max_panels: int = 20000,
) -> Tuple[float, int, bool]:
    """Integrate vectorized ``f`` over [a, b] with bisected 10-point panels.

    A panel is accepted when splitting it changes the estimate by less than
    its share of ``tol`` (proportional to panel width).  Returns
    ``(value, panels_used, converged)``.
    """
    if b <= a:
        return 0.0, 0, True
    width = b - a
    stack = [(a, b, _gl_panel(f, a, b))]
    total = 0.0
    panels = 0
    converged = True
    while stack:
        lo, hi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _gl_panel(f, lo, mid)
        right = _gl_panel(f, mid, hi)
        share = tol * (hi - lo) / width
        if abs(left + right - whole) <= share or panels + len(stack) >= max_panels:
            if abs(left + right - whole) > share:
                converged = False
            total += left + right
            panels += 2
        else:
            stack.append((lo, mid, left))
            stack.append((mid, hi, right))
    return total, panels, converged


def tail_bound(power: int, t: float, xmax: float) -> float:
    """Bound on integral_xmax^inf x^power/power! K(x,t) dx using K <= 2 e^{-pi(x-|t|)}."""
    # integral_X^inf x^p e^{-pi x} dx = Gamma(p+1, pi X) / pi^(p+1)
    return 2.0 * math.exp(math.pi * abs(t)) * float(gammaincc(power + 1, math.pi * xmax)) / math.pi ** (power + 1)


def _cutoff(power: int, t: float, tol: float) -> float:
    xmax = abs(t) + math.log(10.0 / tol) / math.pi + 5.0
    while tail_bound(power, t, xmax) >= tol / 10:
        xmax += 1.0
    return xmax


def quad_check_single(k: int, t: float, tol: float = 1e-10) -> QuadReport:
    """Compare integral_0^inf x^(2k+1)/(2k+1)! K(x,t) dx with h_closed(k)(t)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = 2 * k + 1
    norm = float(factorial(p))
    xmax = _cutoff(p, t, tol)
    f = lambda x: x**p / norm * kernel_eval(x, t)  # noqa: E731
    value, panels, converged = adaptive_gauss_legendre(f, 0.0, xmax, tol / 10)
    exact = h_closed(k)(t)
    return QuadReport(value, exact, abs(value - exact), panels, tol, converged)


def quad_check_double(i: int, j: int, t: float, tol: float = 1e-8) -> QuadReport:
    """Compare the double moment of K(x+y, t) with h_closed(i+j+1)(t).

    The region x + y <= U is integrated as an iterated integral (outer x,
    inner y in [0, U-x]); the discarded region x + y > U has the same tail
    bound as the single moment of order 2(i+j)+3.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a, b = 2 * i + 1, 2 * j + 1
    na, nb = float(factorial(a)), float(factorial(b))
    umax = _cutoff(a + b + 1, t, tol)
    inner_tol = tol / (20 * umax)
    panel_count = [0]
    ok = [True]

    def inner(xs: np.ndarray) -> np.ndarray:
        out = np.empty_like(xs)
        for idx, x in enumerate(xs):
            g = lambda y, x=x: y**b / nb * kernel_eval(x + y, t)  # noqa: E731
            val, panels, conv = adaptive_gauss_legendre(g, 0.0, umax - x, inner_tol)
            panel_count[0] += panels
            ok[0] = ok[0] and conv
            out[idx] = x**a / na * val
        return out

    value, outer_panels, converged = adaptive_gauss_legendre(inner, 0.0, umax, tol / 10)
    exact = h_closed(i + j + 1)(t)
    return QuadReport(
        value, exact, abs(value - exact), outer_panels + panel_count[0], tol, converged and ok[0]
    )


def kernel_sweep(kmax: int, ts: List[float], tol: float, pairs_max: int | None = None) -> List[dict]:
    """Rows for the kernel verification table (single, then double moments)."""
    rows = []
    for k in range(kmax + 1):
        for t in ts:
            r = quad_check_single(k, t, tol)
            rows.append({"kind": "single", "k": str(k), "t": t, "report": r})
    if pairs_max is None:
        pairs_max = max(kmax - 1, 0)
    for s in range(pairs_max + 1):
        for i in range(s + 1):
            j = s - i
            for t in ts:
                r = quad_check_double(i, j, t, tol)
                rows.append({"kind": "double", "k": f"{i},{j}", "t": t, "report": r})
    return rows
