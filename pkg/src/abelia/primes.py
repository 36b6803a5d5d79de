"""Prime counting in progressions and by Frobenius class.

Counting convention: every count includes primes p <= x (not p < x).
"""

from __future__ import annotations

import math
import threading
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .arith import euler_phi, factorint, iroot
from .errors import InvalidParams, NotCoprime, RangeViolation, SieveTooSmall, WrongShape
from .fields import AbelianExtension, SubfieldDescriptor, rank3_layout

DEFAULT_SIEVE_LIMIT = 10**8
_SEGMENT = 1 << 22


class SieveTable:
    """Primality table for 0..limit, built by a segmented sieve of Eratosthenes."""

    def __init__(self, limit: int):
        if limit < 2:
            raise InvalidParams("sieve limit must be at least 2")
        self.limit = limit
        root = math.isqrt(limit)
        small = np.ones(root + 1, dtype=bool)
        small[:2] = False
        for q in range(2, math.isqrt(root) + 1):
            if small[q]:
                small[q * q :: q] = False
        base = np.flatnonzero(small)
        is_prime = np.ones(limit + 1, dtype=bool)
        is_prime[:2] = False
        for lo in range(0, limit + 1, _SEGMENT):
            hi = min(lo + _SEGMENT, limit + 1)
            seg = is_prime[lo:hi]
            for q in base:
                q = int(q)
                if q * q >= hi:
                    break
                start = max(q * q, (lo + q - 1) // q * q)
                seg[start - lo :: q] = False
        self.is_prime = is_prime
        self.primes = np.flatnonzero(is_prime).astype(np.int64)

    def __contains__(self, n: int) -> bool:
        if n > self.limit:
            raise SieveTooSmall(f"{n} exceeds sieve limit {self.limit}")
        return bool(self.is_prime[n]) if n >= 0 else False

    def primes_upto(self, x: int) -> np.ndarray:
        if x > self.limit:
            raise SieveTooSmall(f"x = {x} exceeds sieve limit {self.limit}")
        return self.primes[: np.searchsorted(self.primes, x, side="right")]

    def pi(self, x: int) -> int:
        return len(self.primes_upto(x))


_shared: SieveTable | None = None
_shared_lock = threading.Lock()
_max_limit = DEFAULT_SIEVE_LIMIT


def set_sieve_limit(limit: int) -> None:
    global _max_limit, _shared
    with _shared_lock:
        _max_limit = limit
        if _shared is not None and _shared.limit > limit:
            _shared = None


def get_sieve(x: int) -> SieveTable:
    """Shared sieve covering at least x (grown on demand, never past the configured limit)."""
    global _shared
    if x > _max_limit:
        raise SieveTooSmall(f"x = {x} exceeds the sieve limit {_max_limit}")
    with _shared_lock:
        if _shared is None or _shared.limit < x:
            size = min(_max_limit, max(x, 2 * (_shared.limit if _shared else 0), 10**5))
            _shared = SieveTable(size)
        return _shared


def _sieve_for(x: int, sieve: SieveTable | None) -> SieveTable:
    if sieve is None:
        return get_sieve(max(x, 2))
    if x > sieve.limit:
        raise SieveTooSmall(f"x = {x} exceeds sieve limit {sieve.limit}")
    return sieve


def pi_progression(x: int, q: int, a: int, sieve: SieveTable | None = None) -> int:
    """Number of primes p <= x with p = a mod q."""
    if q < 1:
        raise InvalidParams("modulus must be positive")
    if math.gcd(a, q) != 1:
        raise NotCoprime(f"gcd({a}, {q}) != 1")
    if x < 2:
        return 0
    ps = _sieve_for(x, sieve).primes_upto(x)
    return int(np.count_nonzero(ps % q == a % q))


# ---------------------------------------------------------------------------
# Brun-Titchmarsh


def brun_titchmarsh_bound(x: float, q: int) -> float:
    return 2.0 / (1.0 - math.log(q) / math.log(x)) * x / (euler_phi(q) * math.log(x))


@dataclass(frozen=True)
class BTReport:
    x: int
    q: int
    a: int
    count: int
    bound: float
    ratio: float
    holds: bool


def brun_titchmarsh_check(x: int, q: int, a: int, sieve: SieveTable | None = None) -> BTReport:
    if x <= q:
        raise RangeViolation(f"need x > q, got x={x}, q={q}")
    count = pi_progression(x, q, a, sieve)
    bound = brun_titchmarsh_bound(x, q)
    return BTReport(x, q, a, count, bound, count / bound, count <= bound)


@dataclass
class BTGridReport:
    q_max: int
    x_cap: int
    cells: int
    violations: list[BTReport]
    max_ratio: float
    worst: BTReport | None

    @property
    def passed(self) -> bool:
        return not self.violations


def brun_titchmarsh_grid(q_max: int = 200, x_cap: int = 10**6, sieve: SieveTable | None = None) -> BTGridReport:
    """Check the inequality at x in {q+1, q^2, q^4, x_cap} (capped) for all q <= q_max, all a."""
    sv = _sieve_for(x_cap, sieve)
    ps = sv.primes_upto(x_cap)
    cells, violations = 0, []
    worst: BTReport | None = None
    for q in range(1, q_max + 1):
        xs = sorted({min(v, x_cap) for v in (q + 1, q * q, q**4, x_cap)})
        for x in xs:
            if x <= q:
                continue
            upto = ps[: np.searchsorted(ps, x, side="right")]
            counts = np.bincount(upto % q, minlength=q)
            bound = brun_titchmarsh_bound(x, q)
            for a in range(q):
                if math.gcd(a, q) != 1:
                    continue
                cells += 1
                cnt = int(counts[a])
                rep = BTReport(x, q, a, cnt, bound, cnt / bound, cnt <= bound)
                if not rep.holds:
                    violations.append(rep)
                if worst is None or rep.ratio > worst.ratio:
                    worst = rep
    return BTGridReport(q_max, x_cap, cells, violations, worst.ratio if worst else 0.0, worst)


# ---------------------------------------------------------------------------
# Frobenius counting


def frobenius_vectors(ext: AbelianExtension, primes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Frobenius cosets (rows in F_p^r) of the unramified primes among ``primes``.

    Returns (unramified_primes, cosets).
    """
    f = ext.modulus
    unram = primes[np.gcd(primes, f) == 1]
    group = ext.group
    rows = np.searchsorted(group.units, unram % f)
    W = np.asarray(ext.characters, dtype=np.int64)
    cosets = (group.coords[rows] @ W.T) % ext.p
    return unram, cosets


def _split_matrix(ext: AbelianExtension, cosets: np.ndarray, subs: Sequence[SubfieldDescriptor]) -> np.ndarray:
    """Boolean matrix: prime i splits completely in subfield j."""
    out = np.empty((len(cosets), len(subs)), dtype=bool)
    for j, sub in enumerate(subs):
        B = np.asarray(sub.basis, dtype=np.int64)
        out[:, j] = np.all((cosets @ B.T) % ext.p == 0, axis=1)
    return out


def pi_frobenius(
    target: AbelianExtension | SubfieldDescriptor,
    x: int,
    coset: str | Sequence[int] = "e",
    sieve: SieveTable | None = None,
) -> int:
    """Primes q <= x, unramified in the target, whose Frobenius lies in the target set.

    ``coset`` is "e" (split completely), "not-e" (complement of the identity),
    or, for a full extension, an explicit coset vector in F_p^r.
    """
    if x < 2:
        return 0
    ext = target.parent if isinstance(target, SubfieldDescriptor) else target
    ps = _sieve_for(x, sieve).primes_upto(x)
    _, cos = frobenius_vectors(ext, ps)
    if isinstance(target, SubfieldDescriptor):
        basis = np.asarray(target.basis, dtype=np.int64)
        cos = (cos @ basis.T) % ext.p
    if isinstance(coset, str):
        if coset not in ("e", "not-e", "hat-e"):
            raise InvalidParams(f"unknown coset selector {coset!r}")
        ident = ~cos.any(axis=1)
        split, other = int(ident.sum()), int((~ident).sum())
        if isinstance(target, SubfieldDescriptor):
            # primes ramified in the parent but not in the subfield
            for q in factorint(ext.modulus):
                if q <= x and target.conductor % q:
                    if target.splits(q):
                        split += 1
                    else:
                        other += 1
        return split if coset == "e" else other
    if isinstance(target, SubfieldDescriptor):
        raise InvalidParams("explicit cosets are only supported on a full extension")
    vec = np.asarray(coset, dtype=np.int64) % ext.p
    return int(np.all(cos == vec, axis=1).sum())


def ramified_count(ext: AbelianExtension, x: int, sieve: SieveTable | None = None) -> int:
    ps = _sieve_for(max(x, 2), sieve).primes_upto(x)
    return int(np.count_nonzero(ext.modulus % ps == 0)) if len(ps) else 0


# ---------------------------------------------------------------------------
# Delta-good / Delta-bad


@dataclass(frozen=True)
class GoodBadVerdict:
    record: str
    disc: int
    theta: Fraction
    constant: Fraction
    y_range: float
    y_floor: int
    split_count: int
    threshold: float
    verdict: str

    @property
    def bad(self) -> bool:
        return self.verdict == "BAD"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["theta"] = str(self.theta)
        d["constant"] = str(self.constant)
        return d


def _as_fraction(v: Fraction | int | float | str) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(str(v)) if isinstance(v, (float, str)) else Fraction(v)


def classify_good_bad(
    target: SubfieldDescriptor | AbelianExtension,
    theta: Fraction | float | str,
    constant: Fraction | float | str = Fraction(1, 20),
    sieve: SieveTable | None = None,
) -> GoodBadVerdict:
    """BAD iff pi(y; K, e) <= constant * y / ln y with y = Disc(K)^theta.

    The prime count runs up to floor(y), computed exactly.
    """
    theta, constant = _as_fraction(theta), _as_fraction(constant)
    if theta <= 0:
        raise InvalidParams("theta must be positive")
    if constant < 0:
        raise InvalidParams("constant must be nonnegative")
    disc = target.disc if isinstance(target, SubfieldDescriptor) else target.discriminant
    record = target.parent.record() if isinstance(target, SubfieldDescriptor) else target.record()
    y_floor = iroot(disc**theta.numerator, theta.denominator)
    log_y = float(theta) * math.log(disc)
    y_range = math.exp(log_y)
    split = pi_frobenius(target, y_floor, "e", sieve) if y_floor >= 2 else 0
    threshold = float(constant) * y_range / log_y
    verdict = "BAD" if split <= threshold else "GOOD"
    return GoodBadVerdict(record, disc, theta, constant, y_range, y_floor, split, threshold, verdict)


# ---------------------------------------------------------------------------
# pigeonhole splitting


@dataclass
class PigeonholeReport:
    record: str
    p: int
    r: int
    x: int
    shape: str
    unramified: int
    identity_frobenius: int
    expected_splits: int
    hyperplane_violations: int
    reference: str
    reference_disc: int
    inert_in_reference: int
    tallies: dict[int, int] = field(default_factory=dict)
    outside_tallies: list[dict] = field(default_factory=list)
    shape_violations: int = 0
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.hyperplane_violations == 0 and self.shape_violations == 0


def pigeonhole_report(ext: AbelianExtension, x: int, sieve: SieveTable | None = None) -> PigeonholeReport:
    """Tally where primes that fail to split in the smallest subfield do split.

    Rank 2: each prime not split in the smallest degree-p subfield splits in exactly (p^(r-1)-1)/(p-1) = 1
    of the other degree-p subfields. Rank 3, p = 2: each prime not split in
    the smallest quartic subfield splits in exactly 2 of the 4 quadratics outside it.
    Independently, every prime with nontrivial Frobenius is checked to split
    in exactly (p^(r-1)-1)/(p-1) degree-p subfields.
    """
    p, r = ext.p, ext.r
    if not (r == 2 or (r == 3 and p == 2)):
        raise WrongShape("pigeonhole report needs rank 2, or rank 3 with p = 2")
    ps = _sieve_for(max(x, 2), sieve).primes_upto(x)
    unram, cos = frobenius_vectors(ext, ps)
    quads = ext.subfields(1)
    S = _split_matrix(ext, cos, quads)
    ident = ~cos.any(axis=1)
    expected = (p ** (r - 1) - 1) // (p - 1)
    per_prime = S.sum(axis=1)
    hyper_bad = int(np.count_nonzero(per_prime[~ident] != expected))
    hyper_bad += int(np.count_nonzero(per_prime[ident] != len(quads)))

    if r == 2:
        ref = quads[0]
        others = quads[1:]
        inert = ~S[:, 0]
        sub = S[inert][:, 1:]
        shape_bad = int(np.count_nonzero(sub.sum(axis=1) != expected))
        shape = f"(Z/{p}Z)^2"
    else:
        lay = rank3_layout(ext)
        ref = lay.smallest_quartic
        others = list(lay.outside)
        inert = ~_split_matrix(ext, cos, [ref])[:, 0]
        sub = _split_matrix(ext, cos[inert], others)
        shape_bad = int(np.count_nonzero(sub.sum(axis=1) != 2))
        shape = "(Z/2Z)^3"
    counts = sub.sum(axis=0)
    tallies = [
        {"disc": o.disc, "conductor": o.conductor, "split_and_ref_inert": int(n)}
        for o, n in zip(others, counts)
    ]
    best = int(np.argmax(counts)) if len(counts) else None
    witness = tallies[best] if best is not None and counts[best] > 0 else None
    hist = {int(k): int(v) for k, v in zip(*np.unique(sub.sum(axis=1), return_counts=True))}
    return PigeonholeReport(
        record=ext.record(),
        p=p,
        r=r,
        x=x,
        shape=shape,
        unramified=len(unram),
        identity_frobenius=int(ident.sum()),
        expected_splits=expected,
        hyperplane_violations=hyper_bad,
        reference="smallest quadratic" if r == 2 else "smallest quartic",
        reference_disc=ref.disc,
        inert_in_reference=int(inert.sum()),
        tallies=hist,
        outside_tallies=tallies,
        shape_violations=shape_bad,
        witness=witness,
    )


# ---------------------------------------------------------------------------
# density scans (reported, never asserted)


def density_scan(
    moduli: Iterable[int],
    exponents: Iterable[float],
    a: int = 1,
    sieve_limit: int | None = None,
) -> list[dict]:
    """Normalized densities pi(x;q,a) phi(q) ln x / x at x = q^s."""
    cap = sieve_limit or _max_limit
    rows = []
    for q in moduli:
        for s in exponents:
            x = int(round(q**s))
            row = {"q": q, "s": s, "x": x, "a": a}
            if math.gcd(a, q) != 1 or q < 2:
                row["status"] = "skipped: gcd(a, q) != 1" if q >= 2 else "skipped: q < 2"
                rows.append(row)
                continue
            if x > cap:
                row["status"] = f"skipped: x beyond sieve limit {cap}"
                rows.append(row)
                continue
            cnt = pi_progression(x, q, a)
            phi = euler_phi(q)
            norm = cnt * phi * math.log(x) / x
            row.update(
                count=cnt,
                density=norm,
                lower_stat=norm * math.sqrt(q) / math.log(q),
                status="ok",
            )
            rows.append(row)
    return rows


def frobenius_partition(ext: AbelianExtension, x: int, sieve: SieveTable | None = None) -> dict:
    """Counts of primes <= x per Frobenius coset, plus ramified ones."""
    ps = _sieve_for(max(x, 2), sieve).primes_upto(x)
    unram, cos = frobenius_vectors(ext, ps)
    keys, counts = np.unique(cos, axis=0, return_counts=True) if len(cos) else (np.zeros((0, ext.r)), [])
    by_coset = {tuple(int(v) for v in k): int(n) for k, n in zip(keys, counts)}
    return {"pi": len(ps), "ramified": len(ps) - len(unram), "cosets": by_coset}


__all__ = [
    "SieveTable",
    "get_sieve",
    "set_sieve_limit",
    "pi_progression",
    "brun_titchmarsh_bound",
    "brun_titchmarsh_check",
    "brun_titchmarsh_grid",
    "pi_frobenius",
    "ramified_count",
    "classify_good_bad",
    "GoodBadVerdict",
    "pigeonhole_report",
    "density_scan",
    "frobenius_partition",
]
