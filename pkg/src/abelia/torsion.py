"""l-torsion of multiquadratic fields assembled from their quadratic subfields.

For L = Q(sqrt(D1), ..., sqrt(Dr)) and odd l, |Cl_L[l]| is taken to be the
product of |Cl_K[l]| over the 2^r - 1 quadratic subfields K. That product is
the definition used here (the number is labelled accordingly in every report);
no class group of degree above 2 is ever computed directly.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .arith import gaussian_binomial
from .bounds import final_delta
from .errors import EvenEll, IdentityFailure, InvalidParams, WrongShape
from .fields import AbelianExtension, extensions_with_conductor
from .quadratic import DEFAULT_DISC_BOUND, ClassGroupCache, ell_torsion

SOURCE_LABEL = "product over quadratic subfields"

NON_FALSIFIABILITY_CAPTION = (
    "The bound |Cl_L[l]| << Disc(L)^(1/2 - delta + eps) is asymptotic with an "
    "unspecified constant. Exponents observed at finite height can neither confirm "
    "nor refute it; the comparison below is descriptive only."
)

SANITY_BAND = 0.6


def _check_ell(ell: int) -> None:
    if not isinstance(ell, int) or ell < 2:
        raise InvalidParams(f"l must be an integer > 1, got {ell!r}")
    if ell % 2 == 0:
        raise EvenEll(f"l = {ell} is even; only odd l is supported for multiquadratic fields")


def _torsion_of(D: int, ell: int, cache: ClassGroupCache | None, bound: int) -> int:
    if cache is not None:
        return cache.ell_torsion(D, ell)
    return ell_torsion(D, ell, bound=bound)


@dataclass
class TorsionReport:
    record: str
    ell: int
    subfield_torsions: list[tuple[int, int]]
    total: int
    disc_L: int
    exponent: float
    delta_ref: Fraction
    delta_source: str
    source: str = SOURCE_LABEL

    @property
    def half_minus_delta(self) -> float:
        return 0.5 - float(self.delta_ref)

    def csv_row(self) -> dict:
        return {
            "disc_L": self.disc_L,
            "subfield_discs": " ".join(str(d) for d, _ in self.subfield_torsions),
            "subfield_torsions": " ".join(str(t) for _, t in self.subfield_torsions),
            "total": self.total,
            "exponent": self.exponent,
            "half_minus_delta": self.half_minus_delta,
        }

    def as_dict(self) -> dict:
        return {
            "record": self.record,
            "ell": self.ell,
            "subfield_torsions": [{"D": d, "torsion": t} for d, t in self.subfield_torsions],
            "total": self.total,
            "disc_L": self.disc_L,
            "exponent": self.exponent,
            "delta_ref": str(self.delta_ref),
            "delta_source": self.delta_source,
            "half_minus_delta": self.half_minus_delta,
            "source": self.source,
        }


CSV_COLUMNS = ("disc_L", "subfield_discs", "subfield_torsions", "total", "exponent", "half_minus_delta")


def multiquadratic_torsion(
    ext: AbelianExtension,
    ell: int,
    cache: ClassGroupCache | None = None,
    bound: int = DEFAULT_DISC_BOUND,
) -> TorsionReport:
    if ext.p != 2:
        raise WrongShape("the torsion pipeline handles (Z/2Z)^r-extensions only")
    _check_ell(ell)
    quads = ext.subfields(1)
    pairs = [(k.signed_disc, _torsion_of(k.signed_disc, ell, cache, bound)) for k in quads]
    if len(pairs) != 2**ext.r - 1:
        raise IdentityFailure(f"expected {2**ext.r - 1} quadratic subfields, found {len(pairs)}")
    disc_L = ext.discriminant
    if disc_L != math.prod(abs(d) for d, _ in pairs):
        raise IdentityFailure("Disc(L) differs from the product of quadratic discriminants")
    total = math.prod(t for _, t in pairs)
    fd = final_delta(ell, 2, ext.r)
    return TorsionReport(
        ext.record(),
        ell,
        pairs,
        total,
        disc_L,
        math.log(total) / math.log(disc_L),
        fd.delta,
        fd.source,
    )


@dataclass
class FamilyScan:
    cond_max: int
    r: int
    ell: int
    reports: list[TorsionReport]
    caption: str = NON_FALSIFIABILITY_CAPTION

    @property
    def max_exponent(self) -> float:
        return max((rep.exponent for rep in self.reports), default=0.0)

    @property
    def half_minus_delta(self) -> float | None:
        return self.reports[0].half_minus_delta if self.reports else None

    @property
    def within_sanity_band(self) -> bool:
        return self.max_exponent <= SANITY_BAND

    def rows(self) -> list[dict]:
        return [rep.csv_row() for rep in self.reports]

    def running_max(self) -> list[float]:
        out, best = [], 0.0
        for rep in self.reports:
            best = max(best, rep.exponent)
            out.append(best)
        return out

    def summary(self) -> dict:
        return {
            "cond_max": self.cond_max,
            "r": self.r,
            "ell": self.ell,
            "fields": len(self.reports),
            "max_exponent": self.max_exponent,
            "half_minus_delta": self.half_minus_delta,
            "within_sanity_band": self.within_sanity_band,
            "sanity_band": SANITY_BAND,
            "caption": self.caption,
        }


def _reports_for_conductor(args: tuple[int, int, int, int]) -> list[TorsionReport]:
    f, r, ell, bound = args
    return [multiquadratic_torsion(ext, ell, None, bound) for ext in extensions_with_conductor(f, 2, r)]


def family_scan(
    cond_max: int,
    r: int,
    ell: int,
    cache: ClassGroupCache | None = None,
    bound: int = DEFAULT_DISC_BOUND,
    workers: int = 1,
) -> FamilyScan:
    """Every (Z/2Z)^r-extension of Q with conductor <= cond_max, ordered by conductor.

    Fields are enumerated once each as (conductor, character group), which is
    the same as enumerating sets of independent fundamental discriminants up
    to the group they generate. With ``workers > 1`` conductors are spread over
    a process pool and the persistent cache is bypassed; output order is the
    same either way.
    """
    _check_ell(ell)
    if r < 1:
        raise InvalidParams("rank must be positive")
    if workers > 1:
        jobs = [(f, r, ell, bound) for f in range(3, cond_max + 1)]
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_reports_for_conductor, jobs, chunksize=32))
        reports = [rep for chunk in chunks for rep in chunk]
    else:
        reports = [
            multiquadratic_torsion(ext, ell, cache, bound)
            for f in range(3, cond_max + 1)
            for ext in extensions_with_conductor(f, 2, r)
        ]
    return FamilyScan(cond_max, r, ell, reports)


@dataclass
class SecondLayerReport:
    record: str
    ell: int
    direct_total: int
    quartic_torsions: list[tuple[tuple[int, ...], int]]
    multiplicity: int
    lhs: int
    rhs: int

    @property
    def passed(self) -> bool:
        return self.lhs == self.rhs


def second_layer_consistency(
    ext: AbelianExtension,
    ell: int,
    cache: ClassGroupCache | None = None,
    bound: int = DEFAULT_DISC_BOUND,
) -> SecondLayerReport:
    """Compare the quadratic-subfield product with the quartic-subfield route.

    Each quadratic subfield lies in m = 2^(r-1) - 1 quartic subfields, so the
    quartic route gives the total raised to m. The check is
    total^m == prod over quartics M of |Cl_M[l]|, in integers.
    """
    if ext.p != 2 or ext.r < 3:
        raise WrongShape("second-layer check needs p = 2 and r >= 3")
    _check_ell(ell)
    direct = multiquadratic_torsion(ext, ell, cache, bound)
    by_line = {k.basis[0]: t for k, (_, t) in zip(ext.subfields(1), direct.subfield_torsions)}
    quartic = []
    for M in ext.subfields(2):
        t = math.prod(by_line[line] for line in M.lines)
        quartic.append((tuple(sorted(_signed_discs(ext, M))), t))
    multiplicity = gaussian_binomial(ext.r - 1, 1, 2)
    lhs = direct.total**multiplicity
    rhs = math.prod(t for _, t in quartic)
    report = SecondLayerReport(ext.record(), ell, direct.total, quartic, multiplicity, lhs, rhs)
    if not report.passed:
        raise IdentityFailure(f"second-layer mismatch for {ext.record()}: {lhs} != {rhs}")
    return report


def _signed_discs(ext: AbelianExtension, M) -> list[int]:
    lines = set(M.lines)
    return [k.signed_disc for k in ext.subfields(1) if k.basis[0] in lines]
