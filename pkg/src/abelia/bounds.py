"""Exponent calculus for pointwise l-torsion savings.

Every quantity is an exact ``Fraction`` when its inputs are rational. A float
``eta`` (a ratio of logarithms taken from real field data) switches the
result to float; nothing else does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Union

from .arith import coprime_part, is_prime
from .errors import EtaBelowThreshold, InvalidParams, RegimeMismatch, WrongShape
from .fields import AbelianExtension, rank3_layout

Number = Union[Fraction, float]

# lower-bound exponents for split-prime counts over a general base field
DEFAULT_BETA = Fraction(35)
DEFAULT_GAMMA = Fraction(19)
# the same pair over Q for quadratic fields (a least-prime bound with exponent 8)
RATIONAL_QUADRATIC_BETA = Fraction(8)
RATIONAL_QUADRATIC_GAMMA = Fraction(1, 2)


class Regime(str, Enum):
    COMPARABLE = "comparable"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class DeltaPolicy:
    """Delta(l, d) = (1 - epsilon_delta) / (2 l (d - 1)); 0 gives the supremum."""

    epsilon_delta: Fraction = Fraction(0)

    def __post_init__(self):
        eps = Fraction(self.epsilon_delta)
        if not 0 <= eps < 1:
            raise InvalidParams("epsilon_delta must lie in [0, 1)")
        object.__setattr__(self, "epsilon_delta", eps)

    def delta(self, ell: int, d: int) -> Fraction:
        if ell < 2 or d < 2:
            raise InvalidParams("Delta needs l > 1 and d > 1")
        return (1 - self.epsilon_delta) / (2 * ell * (d - 1))


SUPREMUM = DeltaPolicy()


@dataclass(frozen=True)
class Base:
    """The base field: Q, or a general k described only by its (beta, gamma) pair."""

    beta: Fraction | None = None
    gamma: Fraction | None = None

    @property
    def rational(self) -> bool:
        return self.beta is None

    def label(self) -> str:
        return "Q" if self.rational else f"k(beta={self.beta},gamma={self.gamma})"


RATIONALS = Base()


def over_k(beta: Fraction | int | str = DEFAULT_BETA, gamma: Fraction | int | str = DEFAULT_GAMMA) -> Base:
    beta, gamma = Fraction(beta), Fraction(gamma)
    if beta <= 0 or gamma <= 0:
        raise InvalidParams("beta and gamma must be positive")
    return Base(beta, gamma)


def _check_common(ell: int, p: int) -> None:
    if not isinstance(ell, int) or ell < 2:
        raise InvalidParams(f"l must be an integer > 1, got {ell!r}")
    if not is_prime(p):
        raise InvalidParams(f"p must be prime, got {p!r}")


def _eta(eta: Number | int) -> Number:
    if isinstance(eta, float):
        if not math.isfinite(eta):
            raise InvalidParams("eta must be finite")
        out: Number = eta
    else:
        out = Fraction(eta)
    if out < 1:
        raise InvalidParams(f"eta must be >= 1, got {eta}")
    return out


def delta_value(ell: int, d: int, policy: DeltaPolicy = SUPREMUM) -> Fraction:
    return policy.delta(ell, d)


# ---------------------------------------------------------------------------
# eta


@dataclass(frozen=True)
class EtaValue:
    """ln(numerator_disc) / ln(denominator_disc), kept exact as the pair."""

    numerator_disc: int
    denominator_disc: int
    shape: str

    @property
    def value(self) -> float:
        return math.log(self.numerator_disc) / math.log(self.denominator_disc)

    def at_most(self, bound: Fraction) -> bool:
        # ln A / ln B <= m/n  <=>  A^n <= B^m  (B > 1)
        bound = Fraction(bound)
        return self.numerator_disc**bound.denominator <= self.denominator_disc**bound.numerator

    def __float__(self) -> float:
        return self.value


def eta_of_extension(ext: AbelianExtension) -> EtaValue:
    if ext.r == 2:
        k1, k2 = ext.subfields(1)[:2]
        return EtaValue(k2.disc, k1.disc, "rank2")
    if ext.r == 3 and ext.p == 2:
        lay = rank3_layout(ext)
        return EtaValue(lay.smallest_outside.disc, lay.smallest_quartic.disc, "rank3")
    raise WrongShape("eta is defined for rank 2, or rank 3 with p = 2")


# ---------------------------------------------------------------------------
# thresholds and savings


def eta0(ell: int, p: int, r: int = 2, base: Base = RATIONALS, policy: DeltaPolicy = SUPREMUM) -> Fraction:
    """Regime-switching threshold for eta."""
    _check_common(ell, p)
    if r < 2:
        raise InvalidParams("rank must be at least 2")
    if not base.rational:
        dl = policy.delta(ell, p)
        return max(base.beta, base.gamma + dl) / dl
    if p == 2:
        d2 = policy.delta(ell, 2)
        if r == 2:
            return max(RATIONAL_QUADRATIC_BETA, RATIONAL_QUADRATIC_GAMMA + d2) / d2
        return 1 / d2
    return 1 / ((p - 1) * policy.delta(ell, p) * (1 - Fraction(2, p)))


def delta_comparable(eta: Number | int, ell: int, p: int, policy: DeltaPolicy = SUPREMUM) -> Number:
    _check_common(ell, p)
    eta = _eta(eta)
    dl = policy.delta(ell, p)
    if isinstance(eta, float):
        return float(dl) / (p * (eta + 1))
    return dl / (p * (eta + 1))


def delta_ic_gamma_formula(eta: Number, dl: Number, gamma: Number, p: int) -> Number:
    """(Delta - gamma/eta) * eta / (p (eta + 1)), with no threshold checks."""
    return (dl - gamma / eta) * eta / (p * (eta + 1))


def delta_incomparable(
    eta: Number | int,
    ell: int,
    p: int,
    base: Base = RATIONALS,
    policy: DeltaPolicy = SUPREMUM,
    strict: bool = True,
) -> Number:
    """Saving for eta above the threshold.

    Over Q with odd p the split-prime lower bound has no gamma loss. Over Q with
    p = 2 (rank 2) the quadratic-field pair (8, 1/2) applies; over k the given
    (beta, gamma). ``strict=False`` also admits eta equal to the threshold.
    """
    _check_common(ell, p)
    eta = _eta(eta)
    threshold = eta0(ell, p, 2, base, policy)
    below = eta <= threshold if strict else eta < threshold
    if below:
        raise EtaBelowThreshold(f"eta = {eta} does not exceed eta0 = {threshold}")
    dl = policy.delta(ell, p)
    if base.rational and p != 2:
        out = dl * eta / (p * (eta + 1)) if not isinstance(eta, float) else float(dl) * eta / (p * (eta + 1))
    else:
        gamma = RATIONAL_QUADRATIC_GAMMA if base.rational else base.gamma
        if isinstance(eta, float):
            out = delta_ic_gamma_formula(eta, float(dl), float(gamma), p)
        else:
            out = delta_ic_gamma_formula(eta, dl, gamma, p)
    if out < 0:
        raise AssertionError("negative incomparable saving above threshold")
    return out


def delta_incomparable_both(
    eta: Number | int, ell: int, p: int, gamma: Fraction | int | str, policy: DeltaPolicy = SUPREMUM
) -> dict[str, Number]:
    """Over Q with odd p: the plain saving next to the gamma-corrected one.

    The plain value is what the threshold argument over Q yields; the corrected
    value is what the general-base formula gives if ``gamma`` is imposed anyway.
    Both are reported and neither is preferred.
    """
    plain = delta_incomparable(eta, ell, p, RATIONALS, policy)
    eta = _eta(eta)
    gamma = Fraction(gamma)
    dl = policy.delta(ell, p)
    if isinstance(eta, float):
        corrected = delta_ic_gamma_formula(eta, float(dl), float(gamma), p)
    else:
        corrected = delta_ic_gamma_formula(eta, dl, gamma, p)
    return {"plain": plain, "gamma_corrected": corrected}


def delta_rank3_even(
    eta: Number | int, ell: int, regime: Regime | str, policy: DeltaPolicy = SUPREMUM
) -> Number:
    """Savings for (Z/2Z)^3 over Q; eta compares K_m against M_1."""
    _check_common(ell, 2)
    regime = Regime(regime)
    eta = _eta(eta)
    threshold = 1 / policy.delta(ell, 2)
    if regime is Regime.COMPARABLE:
        if eta > threshold:
            raise RegimeMismatch(f"comparable needs eta <= {threshold}, got {eta}")
        d4 = policy.delta(ell, 4)
        return float(d4) / (4 * eta + 2) if isinstance(eta, float) else d4 / (4 * eta + 2)
    if eta < threshold:
        raise RegimeMismatch(f"incomparable needs eta >= {threshold}, got {eta}")
    d2 = policy.delta(ell, 2)
    return float(d2) * eta / (2 * eta + 1) if isinstance(eta, float) else d2 * eta / (2 * eta + 1)


def grh_delta(ell: int, p: int, r: int) -> Fraction:
    return Fraction(1, 2 * ell * (p**r - 1))


# ---------------------------------------------------------------------------
# final savings


@dataclass(frozen=True)
class Alternative:
    delta: Fraction
    source: str
    note: str
    min_rank: int


@dataclass(frozen=True)
class FinalDelta:
    ell: int
    ell_reduced: int
    p: int
    r: int
    base: str
    eta0: Fraction
    delta: Fraction
    source: str
    alternatives: tuple[Alternative, ...] = ()

    def as_dict(self) -> dict:
        return {
            "ell": self.ell,
            "ell_reduced": self.ell_reduced,
            "p": self.p,
            "r": self.r,
            "base": self.base,
            "eta0": str(self.eta0),
            "delta": str(self.delta),
            "delta_float": float(self.delta),
            "source": self.source,
            "alternatives": [
                {"delta": str(a.delta), "source": a.source, "note": a.note, "min_rank": a.min_rank}
                for a in self.alternatives
            ],
        }


def final_delta(ell: int, p: int, r: int, base: Base = RATIONALS, policy: DeltaPolicy = SUPREMUM) -> FinalDelta:
    """The applicable rank-independent saving, evaluated at l_(p)."""
    _check_common(ell, p)
    if r < 2:
        raise InvalidParams("rank must be at least 2")
    red = coprime_part(ell, p)
    if red == 1:
        raise InvalidParams(f"l = {ell} is a power of p = {p}; only the genus-theory bound applies")
    alts: tuple[Alternative, ...] = ()
    if p != 2:
        e0 = eta0(red, p, 2, base, policy)
        value = delta_comparable(e0, red, p, policy)
        if base.rational:
            source = "odd-rank2-Q" if r == 2 else "odd-induction-Q"
        else:
            source = "odd-over-k"
    elif r == 2 or not base.rational:
        e0 = eta0(red, 2, 2, base, policy)
        value = delta_comparable(e0, red, 2, policy)
        if base.rational:
            source = "even-rank2-Q"
        else:
            source = "even-rank2-over-k" if r == 2 else "even-induction-over-k"
    else:
        e0 = eta0(red, 2, 3, base, policy)
        value = delta_rank3_even(e0, red, Regime.COMPARABLE, policy)
        source = "even-rank3-Q" if r == 3 else "even-induction-Q"
        if red == 3:
            alts = (
                Alternative(
                    Fraction(1, 3),
                    "cubic-torsion-special",
                    "value as stated for l = 3 via the 1/3 cubic-torsion exponent of quadratic fields; "
                    "a saving of 1/6 is what that exponent yields against the trivial 1/2",
                    3,
                ),
            )
    assert isinstance(value, Fraction)
    return FinalDelta(ell, red, p, r, base.label(), e0, value, source, alts)


@dataclass(frozen=True)
class Crossover:
    ell: int
    p: int
    r0: int
    delta: Fraction
    source: str
    note: str = ""


def grh_crossover_rank(
    ell: int,
    p: int,
    base: Base = RATIONALS,
    policy: DeltaPolicy = SUPREMUM,
    use_alternative: bool = False,
    r_max: int = 256,
) -> Crossover:
    """Least r with final_delta(l, p, r) >= 1 / (2 l (p^r - 1))."""
    _check_common(ell, p)
    for r in range(2, r_max + 1):
        fd = final_delta(ell, p, r, base, policy)
        value, source, note = fd.delta, fd.source, ""
        if use_alternative:
            if not fd.alternatives:
                if r < 3:
                    continue
                raise InvalidParams("no alternative value exists for these parameters")
            alt = fd.alternatives[0]
            if r < alt.min_rank:
                continue
            value, source = alt.delta, alt.source
            if value >= grh_delta(ell, p, alt.min_rank - 1):
                note = f"inequality already holds below rank {alt.min_rank}; clamped to the valid range"
        if value >= grh_delta(ell, p, r):
            return Crossover(ell, p, r, value, source, note)
    raise InvalidParams(f"no crossover found up to rank {r_max}")


# ---------------------------------------------------------------------------
# profiles and tables


@dataclass(frozen=True)
class BoundProfile:
    ell: int
    p: int
    r: int
    eta: Number
    regime: Regime
    base: Base
    policy: DeltaPolicy
    delta: Number
    grh_delta: Fraction
    exact: bool = field(default=True)


def bound_profile(
    ell: int, p: int, r: int, eta: Number | int, base: Base = RATIONALS, policy: DeltaPolicy = SUPREMUM
) -> BoundProfile:
    """Saving for a single extension shape at a given eta, picking the regime from eta0."""
    eta = _eta(eta)
    if p == 2 and r == 3 and base.rational:
        e0 = eta0(ell, 2, 3, base, policy)
        regime = Regime.COMPARABLE if eta <= e0 else Regime.INCOMPARABLE
        delta = delta_rank3_even(eta, ell, regime, policy)
    else:
        if r != 2:
            raise WrongShape("per-eta profiles exist for rank 2, or rank 3 with p = 2 over Q")
        e0 = eta0(ell, p, 2, base, policy)
        if eta <= e0:
            regime, delta = Regime.COMPARABLE, delta_comparable(eta, ell, p, policy)
        else:
            regime, delta = Regime.INCOMPARABLE, delta_incomparable(eta, ell, p, base, policy)
    return BoundProfile(ell, p, r, eta, regime, base, policy, delta, grh_delta(ell, p, r), not isinstance(eta, float))


TABLE_COLUMNS = (
    "ell",
    "p",
    "r",
    "eta0",
    "delta_final",
    "grh_delta",
    "r0",
    "source",
    "rank2_closed_form",
    "rank3_closed_form",
    "rank3_beats_rank2",
)


def _closed_forms(ell: int, policy: DeltaPolicy) -> tuple[Fraction, Fraction]:
    r2 = delta_comparable(eta0(ell, 2, 2, RATIONALS, policy), ell, 2, policy)
    r3 = delta_rank3_even(eta0(ell, 2, 3, RATIONALS, policy), ell, Regime.COMPARABLE, policy)
    return r2, r3


def saving_table(
    ells: Iterable[int],
    ps: Iterable[int],
    base: Base = RATIONALS,
    policy: DeltaPolicy = SUPREMUM,
    r: int | None = None,
) -> list[dict]:
    """One row per (l, p). Rank defaults to 3 for p = 2 over Q and 2 otherwise."""
    rows = []
    ps = list(ps)
    for ell in ells:
        for p in ps:
            rank = r if r is not None else (3 if p == 2 and base.rational else 2)
            row: dict = {"ell": ell, "p": p, "r": rank}
            try:
                fd = final_delta(ell, p, rank, base, policy)
            except InvalidParams:
                row.update(eta0=None, delta_final=None, grh_delta=grh_delta(ell, p, rank), r0=None, source="genus-theory")
            else:
                row.update(
                    eta0=fd.eta0,
                    delta_final=fd.delta,
                    grh_delta=grh_delta(ell, p, rank),
                    r0=grh_crossover_rank(ell, p, base, policy).r0,
                    source=fd.source,
                )
            if p == 2 and base.rational:
                r2, r3 = _closed_forms(ell, policy)
                row.update(rank2_closed_form=r2, rank3_closed_form=r3, rank3_beats_rank2=r3 > r2)
            else:
                row.update(rank2_closed_form=None, rank3_closed_form=None, rank3_beats_rank2=None)
            rows.append(row)
    return rows
