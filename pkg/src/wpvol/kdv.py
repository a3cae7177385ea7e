"""Generating functions F (psi only) and G (kappa and psi), and the KdV check.

F = sum <tau_d1 ... tau_dn>_g prod t/n! and G adds s^m/m! for kappa_1^m.
Both are assembled straight from the recursion numbers; G can also be
obtained from F by the time shift t_j -> t_j + c_j s^(j-1), which is the
cross-check that the two pipelines agree.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, List, Optional

from .intersect import IntersectionNumbers, _partitions, default_numbers
from .numkit import gamma_shift_coeff
from .polyalg import Monomial, TSeries, Window, shift_substitute, tseries_from_brackets

__all__ = [
    "assemble_F",
    "assemble_G",
    "assemble_G_by_shift",
    "kdv_terms",
    "kdv1_residual",
    "kdv_safe",
    "dispersion_fit",
]


def _assemble(window: Window, with_kappa: bool, numbers: Optional[IntersectionNumbers],
              keep: Optional[Callable[[int, int, tuple], bool]] = None) -> TSeries:
    numbers = numbers or default_numbers()
    entries = []
    for g, n in window.spaces():
        d = 3 * g - 3 + n
        for kappa in range(d + 1 if with_kappa else 1):
            for psi in _partitions(d - kappa, n):
                if keep is not None and not keep(g, kappa, psi):
                    continue
                entries.append((g, kappa, psi, numbers(g, kappa, list(psi))))
    return tseries_from_brackets(entries, window)


def assemble_F(window: Window, numbers: Optional[IntersectionNumbers] = None) -> TSeries:
    """Psi-only generating function over the window."""
    return _assemble(window, False, numbers)


def assemble_G(window: Window, numbers: Optional[IntersectionNumbers] = None) -> TSeries:
    """Kappa-psi generating function over the window, from the recursion directly."""
    return _assemble(window, True, numbers)


def assemble_G_by_shift(window: Window, numbers: Optional[IntersectionNumbers] = None) -> TSeries:
    """G over the window computed as F(t_j + c_j s^(j-1)).

    A term of F keeps its t0 and t1 insertions under the shift, so only F
    monomials with at most nmax such insertions can land in the window; F
    itself is needed up to nmax + dmax points.
    """
    wide = Window(window.gmax, window.nmax + window.dmax)
    f = _assemble(wide, False, numbers, keep=lambda g, k, psi: sum(1 for d in psi if d <= 1) <= window.nmax)
    shifts = {j: gamma_shift_coeff(j) for j in range(2, window.dmax + 2)}
    return shift_substitute(f, shifts).restrict(window)


def kdv_terms(f: TSeries) -> Dict[str, TSeries]:
    """The three pieces of the first KdV flow for u = d0^2 F."""
    u = f.derivative(0).derivative(0)
    return {
        "u_t1": u.derivative(1),
        "u_u_t0": u.mul(u.derivative(0)),
        "u_t0_3": u.derivative(0).derivative(0).derivative(0),
    }


def kdv_safe(window: Window) -> Callable[[Monomial], bool]:
    """Monomials of the residual whose every contribution lies inside the window.

    At t^mu the residual relates genus g brackets with |mu| + 3 points (and
    their splits) to genus g - 1 brackets with |mu| + 5 points.
    """

    def safe(mono: Monomial) -> bool:
        if mono[0]:
            return False
        t = mono[1:]
        size = sum(t)
        num = 1 + sum(i * e for i, e in enumerate(t)) - size
        if num < 0 or num % 3:
            return False
        g = num // 3
        if g > window.gmax or size + 3 > window.nmax:
            return False
        return g == 0 or size + 5 <= window.nmax

    return safe


def kdv1_residual(f: TSeries, window: Window, dispersion: Fraction = Fraction(1, 12)) -> TSeries:
    """u_t1 - u u_t0 - dispersion * u_t0t0t0 on the safe part of the window."""
    parts = kdv_terms(f)
    res = parts["u_t1"] - parts["u_u_t0"] - parts["u_t0_3"].scale(dispersion)
    return res.filter(kdv_safe(window))


def _kdv_genus(mono: Monomial) -> int:
    t = mono[1:]
    return (1 + sum(i * e for i, e in enumerate(t)) - sum(t)) // 3


def dispersion_fit(f: TSeries, window: Window) -> List[dict]:
    """Solve the KdV residual for the dispersion constant, monomial by monomial.

    Rows with ``constant`` None are monomials without a dispersion
    contribution; there ``mismatch`` must vanish on its own.
    """
    parts = kdv_terms(f)
    safe = kdv_safe(window)
    lhs = (parts["u_t1"] - parts["u_u_t0"]).filter(safe)
    disp = parts["u_t0_3"].filter(safe)
    rows = []
    for mono in sorted(set(lhs.terms) | set(disp.terms)):
        a = lhs.terms.get(mono, Fraction(0))
        b = disp.terms.get(mono, Fraction(0))
        rows.append({
            "monomial": mono,
            "genus": _kdv_genus(mono),
            "constant": a / b if b else None,
            "mismatch": Fraction(0) if b else a,
        })
    return rows
