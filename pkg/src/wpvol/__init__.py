"""Exact Weil-Petersson volumes and kappa_1 / psi intersection numbers.

Three pipelines compute the same numbers and are checked against each
other: the volume recursion (:mod:`wpvol.volrec`), the bracket recursion
and its constraint operators (:mod:`wpvol.intersect`, :mod:`wpvol.virasoro`),
and the time shift from psi-only numbers (:mod:`wpvol.kdv`).
"""
from __future__ import annotations

from .intersect import IntersectionNumbers, bracket, genus0_string_oracle, kappa_from_psi
from .numkit import alpha_coeff, bernoulli, beta_coeff, double_factorial, gamma_shift_coeff
from .polyalg import EvenPoly, TSeries, Window
from .volrec import v_poly, vol_poly, volume_table

__all__ = [
    "IntersectionNumbers",
    "bracket",
    "genus0_string_oracle",
    "kappa_from_psi",
    "alpha_coeff",
    "bernoulli",
    "beta_coeff",
    "double_factorial",
    "gamma_shift_coeff",
    "EvenPoly",
    "TSeries",
    "Window",
    "v_poly",
    "vol_poly",
    "volume_table",
]

__version__ = "0.1.0"
