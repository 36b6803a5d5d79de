"""Command-line entry point.

Exit status: 0 success, 1 usage or input error, 2 a failed exact identity,
3 a resource limit (sieve, class-group bound, enumeration budget, cache).
"""

from __future__ import annotations

import argparse
import functools
import json
import os
import random
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Sequence, TextIO

from . import __version__
from . import bounds as bc
from . import primes as pc
from .errors import AbeliaError, EvenEllRealField, IdentityFailure, InvalidParams
from .fields import (
    AbelianExtension,
    construct_extension,
    disc_lower_bound_check,
    extensions_with_conductor,
    parse_record,
    quadratic_compositum,
    subfield_csv_rows,
    verify_disc_product,
)
from .group_modules import GroupRingModule, idempotent_decomposition, verify_decomposition_exhaustive
from .output import dump_json, write_csv
from .quadratic import ClassGroupCache, class_group, is_fundamental, reduced_forms
from .torsion import CSV_COLUMNS, family_scan, multiquadratic_torsion, second_layer_consistency

ENV_PREFIX = "ABELIA_"


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    sieve_limit: int = pc.DEFAULT_SIEVE_LIMIT
    classgroup_disc_bound: int = 10**6
    cache_path: str | None = None
    epsilon_delta: Fraction = Fraction(0)
    output_format: str = "json"
    parallelism: int = 1

    def __post_init__(self):
        if self.sieve_limit < 10**3:
            raise InvalidParams("sieve_limit must be at least 1000")
        if self.classgroup_disc_bound < 100:
            raise InvalidParams("classgroup_disc_bound must be at least 100")
        if self.parallelism < 1:
            raise InvalidParams("parallelism must be at least 1")
        if self.output_format not in ("json", "csv"):
            raise InvalidParams("output_format must be json or csv")
        if not 0 <= self.epsilon_delta < 1:
            raise InvalidParams("epsilon_delta must lie in [0, 1)")

    @property
    def policy(self) -> bc.DeltaPolicy:
        return bc.DeltaPolicy(self.epsilon_delta)


_CONVERTERS = {
    "sieve_limit": int,
    "classgroup_disc_bound": int,
    "cache_path": lambda s: s or None,
    "epsilon_delta": Fraction,
    "output_format": str.lower,
    "parallelism": int,
}


def _coerce(key: str, value: str) -> object:
    try:
        return _CONVERTERS[key](value.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParams(f"bad value for {key}: {value!r}") from exc


def read_config_file(path: str | os.PathLike) -> dict[str, object]:
    """Parse key=value lines; '#' starts a comment."""
    out: dict[str, object] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidParams(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParams(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONVERTERS:
            raise InvalidParams(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config(
    path: str | os.PathLike | None = None,
    overrides: dict[str, object] | None = None,
    environ: dict[str, str] | None = None,
) -> RunConfig:
    """Defaults, then the config file, then ABELIA_* variables, then explicit overrides."""
    env = os.environ if environ is None else environ
    values: dict[str, object] = {}
    if path is None:
        path = env.get(ENV_PREFIX + "CONFIG")
    if path:
        values.update(read_config_file(path))
    for f in fields(RunConfig):
        raw = env.get(ENV_PREFIX + f.name.upper())
        if raw is not None:
            values[f.name] = _coerce(f.name, raw)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# argument parsing


class UsageError(AbeliaError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message: str):  # exit 1, not argparse's 2
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"expected a rational number, got {text!r}") from exc


def _add_ext_args(p: argparse.ArgumentParser) -> None:
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--ext", help="extension record f=..;H=..;p=..;r=..")
    grp.add_argument("--discs", type=_int_list, help="fundamental discriminants of a multiquadratic field")


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", choices=("json", "csv"), help="output format (overrides the config)")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="abelia", description="Class groups, discriminants and torsion savings for elementary abelian fields.")
    top.add_argument("--version", action="version", version=f"abelia {__version__}")
    top.add_argument("--config", help="key=value configuration file")
    top.add_argument("--sieve-limit", type=int)
    top.add_argument("--disc-bound", type=int, dest="classgroup_disc_bound")
    top.add_argument("--cache", dest="cache_path")
    top.add_argument("--workers", type=int, dest="parallelism")
    top.add_argument("--format", choices=("json", "csv"), dest="output_format")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)

    # bounds
    b = sub.add_parser("bounds", help="exponent calculus")
    bs = b.add_subparsers(dest="action", parser_class=_Parser)
    d = bs.add_parser("delta", help="final saving for (l, p, r)")
    d.add_argument("--ell", type=int, required=True)
    d.add_argument("--p", type=int, required=True)
    d.add_argument("--r", type=int, required=True)
    d.add_argument("--beta", type=_fraction)
    d.add_argument("--gamma", type=_fraction)
    d.add_argument("--eps-delta", type=_fraction)
    _add_out(d)
    t = bs.add_parser("table", help="saving table over l and p")
    t.add_argument("--ell-min", type=int, default=2)
    t.add_argument("--ell-max", type=int, required=True)
    t.add_argument("--p-list", type=_int_list, default=[2])
    t.add_argument("--r", type=int)
    t.add_argument("--beta", type=_fraction)
    t.add_argument("--gamma", type=_fraction)
    t.add_argument("--eps-delta", type=_fraction)
    _add_out(t)
    c = bs.add_parser("crossover", help="least rank beating the conditional saving")
    c.add_argument("--ell", type=int, required=True)
    c.add_argument("--p", type=int, required=True)
    c.add_argument("--alternative", action="store_true", help="use the special l = 3 value")
    c.add_argument("--beta", type=_fraction)
    c.add_argument("--gamma", type=_fraction)
    c.add_argument("--eps-delta", type=_fraction)
    _add_out(c)
    pr = bs.add_parser("profile", help="saving at a given eta")
    pr.add_argument("--ell", type=int, required=True)
    pr.add_argument("--p", type=int, required=True)
    pr.add_argument("--r", type=int, required=True)
    pr.add_argument("--eta", type=_fraction, required=True)
    pr.add_argument("--beta", type=_fraction)
    pr.add_argument("--gamma", type=_fraction)
    pr.add_argument("--eps-delta", type=_fraction)
    _add_out(pr)

    # torsion
    t = sub.add_parser("torsion", help="l-torsion of multiquadratic fields")
    ts = t.add_subparsers(dest="action", parser_class=_Parser)
    f = ts.add_parser("field", help="one field")
    _add_ext_args(f)
    f.add_argument("--ell", type=int, required=True)
    _add_out(f)
    s = ts.add_parser("scan", help="all fields up to a conductor bound")
    s.add_argument("--cond-max", type=int, required=True)
    s.add_argument("--rank", type=int, default=2)
    s.add_argument("--ell", type=int, required=True)
    _add_out(s)
    sl = ts.add_parser("second-layer", help="quadratic route against the quartic route")
    _add_ext_args(sl)
    sl.add_argument("--ell", type=int, required=True)
    _add_out(sl)

    # primes
    p = sub.add_parser("primes", help="prime counting")
    ps = p.add_subparsers(dest="action", parser_class=_Parser)
    pi = ps.add_parser("pi", help="primes <= x congruent to a mod q")
    pi.add_argument("--x", type=int, required=True)
    pi.add_argument("--q", type=int, default=1)
    pi.add_argument("--a", type=int, default=0)
    _add_out(pi)
    bt = ps.add_parser("bt-check", help="Brun-Titchmarsh inequality")
    bt.add_argument("--grid", action="store_true", help="scan q <= q-max at x in {q+1, q^2, q^4, x-cap}")
    bt.add_argument("--q-max", type=int, default=200)
    bt.add_argument("--x-cap", type=int, default=10**6)
    bt.add_argument("--x", type=int)
    bt.add_argument("--q", type=int)
    bt.add_argument("--a", type=int)
    _add_out(bt)
    gb = ps.add_parser("goodbad", help="classify subfields by split-prime counts")
    _add_ext_args(gb)
    gb.add_argument("--theta", type=_fraction, required=True)
    gb.add_argument("--c", type=_fraction, default=Fraction(1, 20))
    gb.add_argument("--degree-exp", type=int, default=1, help="subfields of degree p^t; 0 means L itself")
    _add_out(gb)
    ph = ps.add_parser("pigeonhole", help="where primes not split in the smallest subfield do split")
    _add_ext_args(ph)
    ph.add_argument("--x", type=int, required=True)
    _add_out(ph)
    dn = ps.add_parser("density", help="normalized progression densities (reported only)")
    dn.add_argument("--q-max", type=int, default=50)
    dn.add_argument("--s-list", default="8", help="comma-separated exponents")
    dn.add_argument("--a", type=int, default=1)
    _add_out(dn)

    # classgroup
    cg = sub.add_parser("classgroup", help="class groups of quadratic fields")
    grp = cg.add_mutually_exclusive_group(required=True)
    grp.add_argument("--disc", type=int)
    grp.add_argument("--range", type=int, nargs=2, metavar=("A", "B"))
    cg.add_argument("--ell", type=int)
    _add_out(cg)

    # field
    fd = sub.add_parser("field", help="abelian field queries")
    fs = fd.add_subparsers(dest="action", parser_class=_Parser)
    for name, hlp in (
        ("info", "record, degree, discriminant"),
        ("subfields", "subfield lattice as CSV rows"),
        ("disc-check", "discriminant product identities and lower bounds"),
        ("frobenius", "Frobenius class of a prime"),
    ):
        q = fs.add_parser(name, help=hlp)
        grp = q.add_mutually_exclusive_group(required=True)
        grp.add_argument("--ext")
        grp.add_argument("--discs", type=_int_list)
        grp.add_argument("--f", type=int, help="modulus; needs --p, --r and optionally --gens")
        q.add_argument("--gens", type=_int_list, default=[])
        q.add_argument("--p", type=int)
        q.add_argument("--r", type=int)
        if name == "subfields":
            q.add_argument("--degree-exp", type=int)
        if name == "frobenius":
            q.add_argument("--q", type=int, required=True)
        _add_out(q)
    en = fs.add_parser("enumerate", help="all extensions with a given conductor")
    en.add_argument("--f", type=int, required=True)
    en.add_argument("--p", type=int, required=True)
    en.add_argument("--r", type=int, required=True)
    _add_out(en)

    # algebra
    al = sub.add_parser("algebra", help="idempotent decomposition of group-ring modules")
    als = al.add_subparsers(dest="action", parser_class=_Parser)
    v = als.add_parser("verify", help="exhaustive or sampled verification")
    v.add_argument("--ell", type=int, required=True)
    v.add_argument("--p", type=int, required=True)
    v.add_argument("--r", type=int, default=2)
    v.add_argument("--max-dim", type=int, default=2)
    v.add_argument("--budget", type=int, default=20000)
    v.add_argument("--samples", type=int, default=400)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--mode", choices=("auto", "sample", "exhaustive"), default="auto")
    dc = als.add_parser("augmentation", help="decompose the augmentation ideal")
    dc.add_argument("--ell", type=int, required=True)
    dc.add_argument("--p", type=int, required=True)
    dc.add_argument("--r", type=int, default=2)

    st = sub.add_parser("selftest", help="reduced-scale run of every exact identity")
    st.add_argument("--seed", type=int, default=0)
    return top


# ---------------------------------------------------------------------------
# helpers


class _Ctx:
    def __init__(self, cfg: RunConfig, out: TextIO):
        self.cfg = cfg
        self.out = out
        self._cache: ClassGroupCache | None = None

    @property
    def cache(self) -> ClassGroupCache | None:
        if self._cache is None and self.cfg.cache_path:
            self._cache = ClassGroupCache(self.cfg.cache_path, self.cfg.classgroup_disc_bound)
        return self._cache

    def fmt(self, args: argparse.Namespace) -> str:
        return getattr(args, "out", None) or self.cfg.output_format

    def emit(self, args: argparse.Namespace, payload: object, rows: list[dict] | None = None, columns: Sequence[str] = ()) -> None:
        if self.fmt(args) == "csv" and rows is not None:
            write_csv(rows, columns, self.out)
        else:
            dump_json(payload, self.out)


def _policy(args: argparse.Namespace, cfg: RunConfig) -> bc.DeltaPolicy:
    eps = getattr(args, "eps_delta", None)
    return bc.DeltaPolicy(eps if eps is not None else cfg.epsilon_delta)


def _base(args: argparse.Namespace) -> bc.Base:
    beta, gamma = getattr(args, "beta", None), getattr(args, "gamma", None)
    if beta is None and gamma is None:
        return bc.RATIONALS
    return bc.over_k(beta if beta is not None else bc.DEFAULT_BETA, gamma if gamma is not None else bc.DEFAULT_GAMMA)


def _extension(args: argparse.Namespace) -> AbelianExtension:
    if getattr(args, "ext", None):
        return parse_record(args.ext)
    if getattr(args, "discs", None):
        for d in args.discs:
            if not is_fundamental(d):
                raise InvalidParams(f"{d} is not a fundamental discriminant")
        return quadratic_compositum(args.discs)
    if getattr(args, "f", None) is not None:
        if args.p is None or args.r is None:
            raise UsageError("--f needs --p and --r")
        return construct_extension(args.f, args.gens, args.p, args.r)
    raise UsageError("an extension is required")


# ---------------------------------------------------------------------------
# subcommands


def cmd_bounds(args: argparse.Namespace, ctx: _Ctx) -> int:
    policy, base = _policy(args, ctx.cfg), _base(args)
    if args.action == "delta":
        fd = bc.final_delta(args.ell, args.p, args.r, base, policy)
        payload = fd.as_dict()
        payload["grh_delta"] = str(bc.grh_delta(args.ell, args.p, args.r))
        cols = ("ell", "ell_reduced", "p", "r", "base", "eta0", "delta", "source", "grh_delta")
        ctx.emit(args, payload, [payload], cols)
    elif args.action == "table":
        rows = bc.saving_table(range(args.ell_min, args.ell_max + 1), args.p_list, base, policy, args.r)
        ctx.emit(args, rows, rows, bc.TABLE_COLUMNS)
    elif args.action == "crossover":
        co = bc.grh_crossover_rank(args.ell, args.p, base, policy, use_alternative=args.alternative)
        payload = {"ell": co.ell, "p": co.p, "r0": co.r0, "delta": co.delta, "source": co.source, "note": co.note}
        ctx.emit(args, payload, [payload], list(payload))
    elif args.action == "profile":
        prof = bc.bound_profile(args.ell, args.p, args.r, args.eta, base, policy)
        payload = {
            "ell": prof.ell,
            "p": prof.p,
            "r": prof.r,
            "eta": prof.eta,
            "regime": prof.regime.value,
            "base": prof.base.label(),
            "epsilon_delta": prof.policy.epsilon_delta,
            "delta": prof.delta,
            "grh_delta": prof.grh_delta,
            "exact": prof.exact,
        }
        ctx.emit(args, payload, [payload], list(payload))
    else:
        raise UsageError("bounds needs an action: delta, table, crossover, profile")
    return 0


def cmd_torsion(args: argparse.Namespace, ctx: _Ctx) -> int:
    bound = ctx.cfg.classgroup_disc_bound
    if args.action == "field":
        rep = multiquadratic_torsion(_extension(args), args.ell, ctx.cache, bound)
        ctx.emit(args, rep.as_dict(), [rep.csv_row()], CSV_COLUMNS)
    elif args.action == "scan":
        cache = ctx.cache if ctx.cfg.parallelism == 1 else None
        scan = family_scan(args.cond_max, args.rank, args.ell, cache, bound, ctx.cfg.parallelism)
        if ctx.fmt(args) == "csv":
            write_csv(scan.rows(), CSV_COLUMNS, ctx.out)
            print(f"# {scan.caption}", file=sys.stderr)
            print(
                f"# fields={len(scan.reports)} max_exponent={scan.max_exponent:.12g} "
                f"half_minus_delta={scan.half_minus_delta}",
                file=sys.stderr,
            )
        else:
            payload = scan.summary()
            payload["rows"] = [dict(rep.csv_row(), record=rep.record) for rep in scan.reports]
            payload["running_max"] = scan.running_max()
            dump_json(payload, ctx.out)
    elif args.action == "second-layer":
        rep = second_layer_consistency(_extension(args), args.ell, ctx.cache, bound)
        payload = {
            "record": rep.record,
            "ell": rep.ell,
            "direct_total": rep.direct_total,
            "multiplicity": rep.multiplicity,
            "quartic_torsions": [{"discs": list(d), "torsion": t} for d, t in rep.quartic_torsions],
            "lhs": rep.lhs,
            "rhs": rep.rhs,
            "passed": rep.passed,
        }
        ctx.emit(args, payload, [payload], ("record", "ell", "direct_total", "multiplicity", "lhs", "rhs", "passed"))
    else:
        raise UsageError("torsion needs an action: field, scan, second-layer")
    return 0


def cmd_primes(args: argparse.Namespace, ctx: _Ctx) -> int:
    if args.action == "pi":
        count = pc.pi_progression(args.x, args.q, args.a)
        payload = {"x": args.x, "q": args.q, "a": args.a, "count": count}
        ctx.emit(args, payload, [payload], list(payload))
        return 0
    if args.action == "bt-check":
        if args.grid:
            rep = pc.brun_titchmarsh_grid(args.q_max, min(args.x_cap, ctx.cfg.sieve_limit))
            payload = {
                "q_max": rep.q_max,
                "x_cap": rep.x_cap,
                "cells": rep.cells,
                "violations": rep.violations,
                "max_ratio": rep.max_ratio,
                "worst": rep.worst,
                "passed": rep.passed,
            }
            ctx.emit(args, payload, [{k: v for k, v in payload.items() if k not in ("violations", "worst")}], ("q_max", "x_cap", "cells", "max_ratio", "passed"))
            return 0 if rep.passed else 2
        if args.x is None or args.q is None or args.a is None:
            raise UsageError("bt-check needs --grid or all of --x, --q, --a")
        one = pc.brun_titchmarsh_check(args.x, args.q, args.a)
        payload = {"x": one.x, "q": one.q, "a": one.a, "count": one.count, "bound": one.bound, "ratio": one.ratio, "holds": one.holds}
        ctx.emit(args, payload, [payload], list(payload))
        return 0 if one.holds else 2
    if args.action == "goodbad":
        ext = _extension(args)
        targets = [ext] if args.degree_exp == 0 else ext.subfields(args.degree_exp)
        rows = []
        for tgt in targets:
            v = pc.classify_good_bad(tgt, args.theta, args.c)
            row = v.as_dict()
            row["degree"] = tgt.degree
            rows.append(row)
        cols = ("record", "degree", "disc", "theta", "constant", "y_range", "y_floor", "split_count", "threshold", "verdict")
        ctx.emit(args, rows, rows, cols)
        return 0
    if args.action == "pigeonhole":
        rep = pc.pigeonhole_report(_extension(args), args.x)
        payload = dict(vars(rep), passed=rep.passed)
        ctx.emit(args, payload, rep.outside_tallies, ("disc", "conductor", "split_and_ref_inert"))
        return 0 if rep.passed else 2
    if args.action == "density":
        try:
            s_list = [float(s) for s in args.s_list.split(",") if s.strip()]
        except ValueError as exc:
            raise UsageError(f"bad --s-list {args.s_list!r}") from exc
        rows = pc.density_scan(range(2, args.q_max + 1), s_list, args.a, ctx.cfg.sieve_limit)
        ctx.emit(args, rows, rows, ("q", "s", "x", "a", "count", "density", "lower_stat", "status"))
        return 0
    raise UsageError("primes needs an action: pi, bt-check, goodbad, pigeonhole, density")


def _group_row(D: int, ctx: _Ctx, ell: int | None) -> dict:
    cache = ctx.cache
    grp = cache.get(D) if cache is not None else class_group(D, ctx.cfg.classgroup_disc_bound)
    row = {"D": D, "narrow": grp.narrow, "factors": list(grp.invariant_factors), "order": grp.order}
    if ell is not None:
        # even l on a real field is left blank rather than guessed
        row["ell"] = ell
        row["torsion"] = None if D > 0 and ell % 2 == 0 else grp.torsion(ell)
    return row


def cmd_classgroup(args: argparse.Namespace, ctx: _Ctx) -> int:
    cols = ("D", "narrow", "factors", "order", "ell", "torsion")
    if args.disc is not None:
        if args.ell is not None and args.disc > 0 and args.ell % 2 == 0:
            raise EvenEllRealField("even l on a real field is refused (narrow vs wide ambiguity)")
        row = _group_row(args.disc, ctx, args.ell)
        ctx.emit(args, row, [row], cols)
        return 0
    lo, hi = sorted(args.range)
    rows = [_group_row(D, ctx, args.ell) for D in range(lo, hi + 1) if D not in (0, 1) and is_fundamental(D)]
    ctx.emit(args, rows, rows, cols)
    return 0


def cmd_field(args: argparse.Namespace, ctx: _Ctx) -> int:
    if args.action == "enumerate":
        exts = extensions_with_conductor(args.f, args.p, args.r)
        rows = [{"record": e.record(), "disc": e.discriminant} for e in exts]
        ctx.emit(args, rows, rows, ("record", "disc"))
        return 0
    ext = _extension(args)
    if args.action == "info":
        payload = {
            "record": ext.record(),
            "modulus": ext.modulus,
            "p": ext.p,
            "r": ext.r,
            "degree": ext.degree,
            "discriminant": ext.discriminant,
            "subfield_counts": {t: len(ext.subfields(t)) for t in range(1, ext.r + 1)},
        }
        ctx.emit(args, payload, [payload], ("record", "modulus", "p", "r", "degree", "discriminant"))
        return 0
    if args.action == "subfields":
        rows = subfield_csv_rows(ext, args.degree_exp)
        ctx.emit(args, rows, rows, ("degree", "conductor", "disc", "subgroup_generators"))
        return 0
    if args.action == "disc-check":
        prod = verify_disc_product(ext, all_layers=True)
        payload: dict = {"record": prod.record, "disc": prod.disc, "layers": prod.layers, "product_passed": prod.passed}
        ok = prod.passed
        if ext.r == 2 or (ext.r == 3 and ext.p == 2):
            lb = disc_lower_bound_check(ext)
            payload["lower_bounds"] = {"shape": lb.shape, "small": lb.small, "large": lb.large, "eta": lb.eta, "inequalities": lb.inequalities}
            ok = ok and lb.passed
        payload["passed"] = ok
        ctx.emit(args, payload, [payload], ("record", "disc", "product_passed", "passed"))
        return 0 if ok else 2
    if args.action == "frobenius":
        fr = ext.frobenius(args.q)
        payload = {"record": ext.record(), "q": args.q, "ramified": fr.ramified, "coset": None if fr.ramified else list(fr.coset), "identity": fr.is_identity}
        ctx.emit(args, payload, [payload], list(payload))
        return 0
    raise UsageError("field needs an action: info, subfields, disc-check, frobenius, enumerate")


def cmd_algebra(args: argparse.Namespace, ctx: _Ctx) -> int:
    if args.action == "verify":
        rep = verify_decomposition_exhaustive(args.ell, args.p, args.r, args.max_dim, args.budget, args.samples, args.seed, args.mode)
        dump_json(rep.as_dict(), ctx.out)
        return 0 if rep.passed else 2
    if args.action == "augmentation":
        mod = GroupRingModule.augmentation_ideal(args.ell, args.p, args.r)
        dec = idempotent_decomposition(mod)
        payload = {
            "ell": args.ell,
            "p": args.p,
            "r": args.r,
            "dimension": dec.dimension,
            "pieces": [{"functional": list(pc_.idempotent.functional), "order": pc_.order, "rank": pc_.rank} for pc_ in dec.pieces],
        }
        dump_json(payload, ctx.out)
        return 0
    raise UsageError("algebra needs an action: verify, augmentation")


# ---------------------------------------------------------------------------
# selftest


def _suite(name: str, fn) -> dict:
    try:
        detail = fn()
        return {"suite": name, "passed": True, "detail": detail}
    except IdentityFailure as exc:
        return {"suite": name, "passed": False, "detail": str(exc)}


def selftest(cfg: RunConfig, seed: int = 0) -> list[dict]:
    """Reduced-scale run of the exact identities; raises on resource problems."""
    rng = random.Random(seed)
    pc.set_sieve_limit(cfg.sieve_limit)
    cache = ClassGroupCache(cfg.cache_path, cfg.classgroup_disc_bound) if cfg.cache_path else None
    results = []

    def disc_products():
        count = 0
        for p, r, fmax, n in ((2, 2, 400, 20), (2, 3, 600, 5), (3, 2, 400, 5)):
            pool = [e for f in range(3, fmax + 1) for e in extensions_with_conductor(f, p, r)]
            for ext in rng.sample(pool, min(n, len(pool))):
                if not verify_disc_product(ext, all_layers=True).passed or not disc_lower_bound_check(ext).passed:
                    raise IdentityFailure(f"discriminant identity failed for {ext.record()}")
                count += 1
        return {"extensions": count}

    def decompositions():
        rep = verify_decomposition_exhaustive(3, 2, 2, 2)
        rep2 = verify_decomposition_exhaustive(5, 2, 2, 3, samples=50, seed=seed, mode="sample")
        if rep.failures or rep2.failures:
            raise IdentityFailure("idempotent decomposition failed")
        return {"instances": rep.instances_tested + rep2.instances_tested}

    def brun_titchmarsh():
        rep = pc.brun_titchmarsh_grid(50, min(10**5, cfg.sieve_limit))
        if not rep.passed:
            raise IdentityFailure(f"{len(rep.violations)} Brun-Titchmarsh violations")
        return {"cells": rep.cells, "max_ratio": rep.max_ratio}

    def pigeonhole():
        x = min(10**4, cfg.sieve_limit)
        checked = 0
        for ext in (quadratic_compositum([-3, 5]), quadratic_compositum([-3, 5, -8]), construct_extension(63, [8, 55], 3, 2)):
            rep = pc.pigeonhole_report(ext, x)
            if not rep.passed:
                raise IdentityFailure(f"pigeonhole violation for {ext.record()}")
            checked += rep.unramified
        return {"primes": checked}

    def closed_forms():
        for ell in range(3, 100, 2):
            if bc.final_delta(ell, 2, 2).delta != Fraction(1, 64 * ell * ell + 4 * ell):
                raise IdentityFailure(f"rank-2 closed form failed at l = {ell}")
            if bc.final_delta(ell, 2, 3).delta != Fraction(1, 48 * ell * ell + 12 * ell):
                raise IdentityFailure(f"rank-3 closed form failed at l = {ell}")
        return {"ells": 49}

    def class_numbers():
        n = 0
        for D in range(-2000, 0):
            if is_fundamental(D):
                grp = cache.get(D) if cache is not None else class_group(D)
                if grp.order != len(reduced_forms(D)):
                    raise IdentityFailure(f"class number mismatch at D = {D}")
                n += 1
        return {"discriminants": n}

    def torsion_routes():
        exts = [e for f in range(3, 400) for e in extensions_with_conductor(f, 2, 3)]
        for ext in rng.sample(exts, min(5, len(exts))):
            second_layer_consistency(ext, 3, cache)
        return {"extensions": min(5, len(exts))}

    for name, fn in (
        ("disc_products", disc_products),
        ("idempotent_decomposition", decompositions),
        ("brun_titchmarsh", brun_titchmarsh),
        ("pigeonhole", pigeonhole),
        ("closed_forms", closed_forms),
        ("class_numbers", class_numbers),
        ("torsion_routes", torsion_routes),
    ):
        results.append(_suite(name, fn))
    return results


def cmd_selftest(args: argparse.Namespace, ctx: _Ctx) -> int:
    results = selftest(ctx.cfg, args.seed)
    dump_json(results, ctx.out)
    return 0 if all(r["passed"] for r in results) else 2


# ---------------------------------------------------------------------------


_HANDLERS = {
    "bounds": cmd_bounds,
    "torsion": cmd_torsion,
    "primes": cmd_primes,
    "classgroup": cmd_classgroup,
    "field": cmd_field,
    "algebra": cmd_algebra,
    "selftest": cmd_selftest,
}

_VALUE_OPTIONS = {"--discs", "--disc", "--range", "--a", "--gens"}


@functools.lru_cache(maxsize=1)
def _shared_parser() -> argparse.ArgumentParser:
    # parse_args never mutates the parser, so one instance serves every call
    return build_parser()


def _protect_negative_values(argv: Sequence[str]) -> list[str]:
    """Let list values like '-23,5' follow their option without '='."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _VALUE_OPTIONS and nxt is not None and nxt.startswith("-") and "," in nxt:
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _error_record(exc: BaseException, code: int) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code})


def run(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _shared_parser()
    if not argv:
        parser.print_usage(err)
        return 1
    try:
        args = parser.parse_args(_protect_negative_values(argv))
        if args.command is None:
            raise UsageError(parser.format_usage())
        if args.command in ("bounds", "torsion", "primes", "field", "algebra") and args.action is None:
            raise UsageError(f"{args.command} needs an action; see 'abelia {args.command} --help'")
        overrides = {
            "sieve_limit": args.sieve_limit,
            "classgroup_disc_bound": args.classgroup_disc_bound,
            "cache_path": args.cache_path,
            "parallelism": args.parallelism,
            "output_format": args.output_format,
        }
        cfg = load_config(args.config, overrides)
        pc.set_sieve_limit(cfg.sieve_limit)
        return _HANDLERS[args.command](args, _Ctx(cfg, out))
    except UsageError as exc:
        err.write(str(exc).rstrip() + "\n")
        return 1
    except AbeliaError as exc:
        err.write(_error_record(exc, exc.exit_code) + "\n")
        return exc.exit_code
    except MemoryError as exc:
        err.write(_error_record(exc, 3) + "\n")
        return 3


def main() -> None:
    sys.exit(run())


__all__ = ["RunConfig", "load_config", "read_config_file", "run", "main", "selftest", "build_parser"]
