"""Command-line front end: ``wpvol <command> ...``.

Exit codes: 0 success, 1 a verification failed, 2 bad usage.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from math import factorial
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, TextIO, Tuple

from .intersect import (
    CacheError,
    IntersectionNumbers,
    _partitions,
    canonical_key,
    genus0_string_oracle,
    iter_keys,
    kappa_from_psi,
)
from .kdv import assemble_F, assemble_G, assemble_G_by_shift, dispersion_fit, kdv1_residual, kdv_safe, kdv_terms
from .numkit import beta_coeff, format_rational
from .polyalg import Window
from .virasoro import (
    DiffOp,
    OpBounds,
    apply_to_exp,
    build_E,
    build_J,
    build_L,
    build_V,
    build_Vhat,
    commutator,
    solve_series_from_constraints,
)
from .volrec import VolumeRecursion, check_key, vol_poly

__all__ = ["RunConfig", "UsageError", "build_parser", "main"]

KERNEL_TS = (0.0, 0.5, 1.0, 2.0)


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    gmax: int = 2
    nmax: int = 4
    dmax: int = 3
    kmax: int = 4
    cache_path: Optional[Path] = None
    fmt: str = "text"
    tol: float = 1e-8
    jobs: int = 1

    def __post_init__(self):
        if self.gmax < 0:
            raise UsageError("--gmax must be >= 0")
        if self.nmax < 1:
            raise UsageError("--nmax must be >= 1")
        if self.dmax < 0:
            raise UsageError("--dmax must be >= 0")
        if self.kmax < -1:
            raise UsageError("--kmax must be >= -1")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.jobs < 1:
            raise UsageError("--jobs must be a positive integer")
        if self.fmt not in ("text", "json", "latex", "csv"):
            raise UsageError(f"unknown format {self.fmt!r}")

    @property
    def window(self) -> Window:
        return Window(self.gmax, self.nmax)


def _pmap(fn: Callable, items: Sequence, jobs: int) -> List:
    if jobs == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _parse_psi(text: str) -> List[int]:
    try:
        psi = [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise UsageError(f"malformed --psi {text!r}: expected comma-separated nonnegative integers")
    if not psi:
        raise UsageError("--psi needs at least one entry")
    if any(d < 0 for d in psi):
        raise UsageError("--psi entries must be nonnegative")
    return psi


def _numbers(cfg: RunConfig) -> IntersectionNumbers:
    try:
        return IntersectionNumbers(cfg.cache_path)
    except CacheError as exc:
        raise UsageError(f"cache rejected: {exc}")


def _persist(numbers: IntersectionNumbers, cfg: RunConfig) -> None:
    if cfg.cache_path is not None and numbers.computed:
        numbers.save(cfg.cache_path)


def _mono_text(mono: Tuple[int, ...]) -> str:
    parts = []
    if mono[0]:
        parts.append("s" if mono[0] == 1 else f"s^{mono[0]}")
    for i, e in enumerate(mono[1:]):
        if e:
            parts.append(f"t{i}" if e == 1 else f"t{i}^{e}")
    return "*".join(parts) or "1"


class Report:
    """Collects (identity, window, status, detail) rows and the overall verdict."""

    def __init__(self, out: TextIO):
        self.out = out
        self.failures = 0

    def row(self, identity: str, window: str, ok: bool, detail: str = "") -> None:
        if not ok:
            self.failures += 1
        fields = [identity, window, "PASS" if ok else "FAIL"]
        if detail:
            fields.append(detail)
        print("\t".join(fields), file=self.out)

    def note(self, text: str) -> None:
        print(text, file=self.out)


# ---------------------------------------------------------------------------
# commands

def cmd_volume(args, cfg: RunConfig, out: TextIO) -> int:
    try:
        check_key(args.g, args.n)
    except ValueError as exc:
        raise UsageError(str(exc))
    rec = VolumeRecursion()
    poly = rec.v_poly(args.g, args.n) if args.normalized else _vol(rec, args.g, args.n)
    if cfg.fmt == "json":
        print(json.dumps(poly.to_json_obj()), file=out)
    elif cfg.fmt == "latex":
        print(poly.to_latex(), file=out)
    else:
        print(poly.to_text(), file=out)
    return 0


def _vol(rec: VolumeRecursion, g: int, n: int):
    return vol_poly(g, n, rec)


def cmd_intersect(args, cfg: RunConfig, out: TextIO) -> int:
    psi = _parse_psi(args.psi)
    try:
        canonical_key(args.g, args.kappa, psi)
    except ValueError as exc:
        raise UsageError(str(exc))
    numbers = _numbers(cfg)
    print(format_rational(numbers(args.g, args.kappa, psi)), file=out)
    _persist(numbers, cfg)
    return 0


def _table_rows(numbers: IntersectionNumbers, dmax: int) -> List[dict]:
    return [
        {"g": g, "kappa": k, "psi": list(psi), "value": format_rational(numbers.value((g, k, psi)))}
        for g, k, psi in sorted(iter_keys(dmax))
    ]


def cmd_table(args, cfg: RunConfig, out: TextIO) -> int:
    numbers = _numbers(cfg)
    rows = [json.dumps(r, separators=(", ", ": ")) for r in _table_rows(numbers, cfg.dmax)]
    text = "[\n" + ",\n".join(rows) + "\n]"
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text, file=out)
    _persist(numbers, cfg)
    return 0


def cmd_emit(args, cfg: RunConfig, out: TextIO) -> int:
    numbers = _numbers(cfg)
    series = assemble_F(cfg.window, numbers) if args.which == "F" else assemble_G(cfg.window, numbers)
    if cfg.fmt == "latex":
        print(series.to_latex(), file=out)
    else:
        print(json.dumps(series.to_json_obj()), file=out)
    _persist(numbers, cfg)
    return 0


def cmd_cache(args, cfg: RunConfig, out: TextIO) -> int:
    if cfg.cache_path is None:
        raise UsageError("no cache path: pass --cache FILE or set WPV_CACHE")
    numbers = _numbers(cfg)
    if args.action == "warm":
        for key in iter_keys(cfg.dmax):
            numbers.value(key)
        numbers.save(cfg.cache_path)
    print(f"path\t{cfg.cache_path}", file=out)
    print(f"entries\t{len(numbers)}", file=out)
    print(f"loaded\t{numbers.loaded}", file=out)
    print(f"computed\t{numbers.computed}", file=out)
    return 0


# -- verification ------------------------------------------------------------

def verify_kernel(cfg: RunConfig, out: TextIO) -> int:
    from .kernelmod import quad_check_double, quad_check_single

    tasks = [("single", (k,), t) for k in range(cfg.kmax + 1) for t in KERNEL_TS]
    tasks += [
        ("double", (i, s - i), t) for s in range(max(cfg.kmax, 0)) for i in range(s + 1) for t in KERNEL_TS
    ]

    def run(task):
        kind, idx, t = task
        if kind == "single":
            return quad_check_single(idx[0], t, cfg.tol)
        return quad_check_double(idx[0], idx[1], t, cfg.tol)

    reports = _pmap(run, tasks, cfg.jobs)
    print("kind,k,t,numeric,exact,abs_err,panels_used,status", file=out)
    failures = 0
    for (kind, idx, t), r in zip(tasks, reports):
        failures += not r.ok
        k = ";".join(str(i) for i in idx)
        print(
            f"{kind},{k},{t:.12g},{r.numeric:.12g},{r.exact:.12g},{r.abs_err:.12g},{r.panels_used},"
            f"{'PASS' if r.ok else 'FAIL'}",
            file=out,
        )
    return 1 if failures else 0


def _first(series) -> str:
    items = series.items()
    return "" if not items else f"first nonzero at {_mono_text(items[0][0])}: {format_rational(items[0][1])}"


def _op_diff(a: DiffOp, b: DiffOp) -> str:
    d = (a - b).items()
    return "" if not d else f"{len(d)} differing terms, e.g. {DiffOp(dict(d[:1])).to_text()}"


def verify_virasoro(cfg: RunConfig, out: TextIO) -> int:
    rep = Report(out)
    w = cfg.window
    wtext = f"g<={w.gmax},n<={w.nmax}"
    bounds = OpBounds.for_window(w)
    inner = OpBounds(w.dmax, w.dmax)
    numbers = _numbers(cfg)
    G = assemble_G(w, numbers)
    F = assemble_F(w, numbers)
    ks = list(range(-1, cfg.kmax + 1))

    def residuals(k):
        return (
            apply_to_exp(build_Vhat(k, bounds), G, window=w),
            apply_to_exp(build_L(k, bounds), F, window=w).filter(lambda m: m[0] == 0),
        )

    for k, (rv, rl) in zip(ks, _pmap(residuals, ks, cfg.jobs)):
        rep.row(f"Vhat_{k} exp(G) = 0", wtext, not rv, _first(rv))
        rep.row(f"L_{k} exp(F) = 0", wtext, not rl, _first(rl))

    for k in ks:
        lhs = build_Vhat(k, bounds).at_s_zero()
        rhs = build_L(k, bounds)
        rep.row(f"Vhat_{k}|s=0 = L_{k}", wtext, lhs == rhs, _op_diff(lhs, rhs))

    for k in range(-1, min(cfg.kmax, 3) + 1):
        lhs = build_Vhat(k, bounds).restrict(inner)
        rhs = build_J(2 * k + 3, bounds).scale(Fraction(-1, 2))
        for i in range(bounds.max_spow + 1):
            rhs = rhs + build_E(k + i, bounds).scale(beta_coeff(i), i)
        rhs = rhs.restrict(inner)
        rep.row(f"boson form of Vhat_{k}", wtext, lhs == rhs, _op_diff(lhs, rhs))

    top = 6
    vs = {k: build_V(k, bounds) for k in range(-1, top + 1)}
    vh = {k: build_Vhat(k, bounds) for k in range(-1, top + bounds.max_spow + 1)}
    pairs = [(n, m) for n in range(-1, 4) for m in range(-1, 4)]

    def relations(pair):
        n, m = pair
        lhs = commutator(vs[n], vs[m], bounds).restrict(inner)
        rhs = vs[n + m].scale(n - m).restrict(inner) if n + m >= -1 else DiffOp()
        lhs_h = commutator(vh[n], vh[m], bounds).restrict(inner)
        rhs_h = DiffOp()
        for i in range(bounds.max_spow + 1):
            if n + m + i >= -1:
                rhs_h = rhs_h + vh[n + m + i].scale((n - m) * beta_coeff(i), i)
        return (lhs, rhs), (lhs_h, rhs_h.restrict(inner))

    for (n, m), ((a, b), (c, d)) in zip(pairs, _pmap(relations, pairs, cfg.jobs)):
        rep.row(f"[V_{n},V_{m}] = ({n - m})V_{n + m}", wtext, a == b, _op_diff(a, b))
        rep.row(f"[Vhat_{n},Vhat_{m}] = ({n - m}) sum beta_i s^i Vhat_{n + m}+i", wtext, c == d, _op_diff(c, d))

    for family, target in (("L", F), ("Vhat", G)):
        solved = solve_series_from_constraints(family, w)
        diff = solved - target
        rep.row(f"constraints alone determine {'F' if family == 'L' else 'G'}", wtext, not diff, _first(diff))

    for k in range(-1, 1):
        consts = vs[k].constant_part()
        text = " + ".join(
            f"{format_rational(c)}*{_mono_text((a, *mu))}" for (a, mu), c in sorted(consts.items())
        )
        rep.note(f"# constant part of V_{k} up to s^{bounds.max_spow}: {text or '0'}")
    _persist(numbers, cfg)
    return 1 if rep.failures else 0


def verify_kdv(cfg: RunConfig, out: TextIO) -> int:
    rep = Report(out)
    w = cfg.window
    wtext = f"g<={w.gmax},n<={w.nmax}"
    numbers = _numbers(cfg)
    F = assemble_F(w, numbers)
    res = kdv1_residual(F, w)
    checked = sorted(m for m in _kdv_candidates(F) if kdv_safe(w)(m))
    rep.row("first KdV flow, dispersion 1/12", wtext, not res, _first(res))
    fits = dispersion_fit(F, w)
    constants = sorted({r["constant"] for r in fits if r["constant"] is not None})
    mism = [r for r in fits if r["mismatch"]]
    rep.row("dispersion constant fitted per monomial", wtext, constants in ([], [Fraction(1, 12)]) and not mism,
            "fitted " + ", ".join(format_rational(c) for c in constants) if constants else "")
    G = assemble_G(w, numbers)
    Gs = assemble_G_by_shift(w, numbers)
    rep.row("G = F(t_j + c_j s^(j-1))", wtext, G == Gs, _first(G - Gs))
    rep.row("F = G at s^0", wtext, G.filter(lambda m: m[0] == 0) == F)
    rep.note("# checked KdV monomials: " + " ".join(_mono_text(m) for m in checked))
    _persist(numbers, cfg)
    return 1 if rep.failures else 0


def _kdv_candidates(F) -> Iterable[Tuple[int, ...]]:
    seen = set()
    for part in kdv_terms(F).values():
        seen.update(part.terms)
    return seen


def verify_cross(cfg: RunConfig, out: TextIO) -> int:
    rep = Report(out)
    numbers = _numbers(cfg)
    rec = VolumeRecursion()
    cells = sorted({(g, len(psi)) for g, _, psi in iter_keys(cfg.dmax)}, key=lambda c: (3 * c[0] - 3 + c[1], c[0]))

    def check(cell):
        g, n = cell
        d = 3 * g - 3 + n
        v = rec.raw(g, n)
        bad = []
        count = 0
        for kappa in range(d + 1):
            for psi in _partitions(d - kappa, n):
                b = numbers(g, kappa, psi)
                if kappa_from_psi(kappa, psi, g, numbers) != b:
                    bad.append(f"kappa shift at kappa={kappa}, psi={psi}")
                if g == 0 and kappa == 0 and genus0_string_oracle(psi) != b:
                    bad.append(f"genus-0 oracle at {psi}")
                # every arrangement of psi on the n boundaries
                for exps in set(permutations(psi)):
                    count += 1
                    denom = factorial(kappa)
                    for e in exps:
                        denom *= factorial(e)
                    if v.get(exps, Fraction(0)) != b / denom:
                        bad.append(f"v coefficient at {exps}")
        if len(v) != count:
            bad.append(f"v has {len(v)} monomials, expected {count}")
        return count, bad

    for (g, n), (count, bad) in zip(cells, _pmap(check, cells, cfg.jobs)):
        rep.row(f"v_{{{g},{n}}} = brackets = kappa shift ({count} coefficients)", f"d<={cfg.dmax}", not bad,
                "; ".join(bad[:3]))
    _persist(numbers, cfg)
    return 1 if rep.failures else 0


def cmd_verify(args, cfg: RunConfig, out: TextIO) -> int:
    return {
        "kernel": verify_kernel,
        "virasoro": verify_virasoro,
        "kdv": verify_kdv,
        "cross": verify_cross,
    }[args.which](cfg, out)


# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wpvol", description="Exact Weil-Petersson volumes and kappa/psi intersection numbers.")
    p.add_argument("--cache", help="bracket cache file (falls back to $WPV_CACHE)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for verification sweeps")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("volume", help="volume polynomial of M_{g,n}(L)")
    v.add_argument("--g", type=int, required=True)
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--normalized", action="store_true", help="print the rational volume v_{g,n}")
    v.add_argument("--format", choices=("text", "json", "latex"), default="text")

    i = sub.add_parser("intersect", help="one intersection number")
    i.add_argument("--g", type=int, required=True)
    i.add_argument("--kappa", type=int, default=0)
    i.add_argument("--psi", required=True, help="comma-separated psi exponents")

    t = sub.add_parser("table", help="all brackets with 3g-3+n <= dmax as JSON")
    t.add_argument("--dmax", type=int, required=True)
    t.add_argument("--out")

    e = sub.add_parser("emit", help="generating function F or G on a window")
    e.add_argument("which", choices=("F", "G"))
    e.add_argument("--gmax", type=int, default=2)
    e.add_argument("--nmax", type=int, default=4)
    e.add_argument("--format", choices=("json", "latex"), default="json")

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("which", choices=("kernel", "virasoro", "kdv", "cross"))
    ver.add_argument("--gmax", type=int, default=2)
    ver.add_argument("--nmax", type=int, default=4)
    ver.add_argument("--dmax", type=int, default=3)
    ver.add_argument("--kmax", type=int, default=4)
    ver.add_argument("--tol", type=float, default=1e-8)

    c = sub.add_parser("cache", help="inspect or warm the bracket cache")
    c.add_argument("action", choices=("info", "warm"))
    c.add_argument("--dmax", type=int, default=3)
    return p


def _config(args) -> RunConfig:
    cache = args.cache or os.environ.get("WPV_CACHE") or None
    return RunConfig(
        gmax=getattr(args, "gmax", 2),
        nmax=getattr(args, "nmax", 4),
        dmax=getattr(args, "dmax", 3),
        kmax=getattr(args, "kmax", 4),
        cache_path=Path(cache) if cache else None,
        fmt=getattr(args, "format", "text"),
        tol=getattr(args, "tol", 1e-8),
        jobs=args.jobs,
    )


COMMANDS = {
    "volume": cmd_volume,
    "intersect": cmd_intersect,
    "table": cmd_table,
    "emit": cmd_emit,
    "verify": cmd_verify,
    "cache": cmd_cache,
}


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg, out)
    except UsageError as exc:
        print(f"wpvol: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
