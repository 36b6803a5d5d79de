"""Class groups of quadratic fields via binary quadratic forms.

Imaginary fields use reduced positive definite forms (one per class). Real
fields use cycles of reduced indefinite forms under the rho operator, one
cycle per proper equivalence class, which gives the narrow class group.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .arith import ext_gcd, factorint, is_prime, smith_diagonal, squarefree_kernel
from .errors import (
    BoundExceeded,
    CacheError,
    DiscMismatch,
    EvenEllRealField,
    IdentityFailure,
    InvalidParams,
    NotFundamental,
    PerfectSquare,
)

DEFAULT_DISC_BOUND = 10**6


@dataclass(frozen=True, order=True)
class QuadraticForm:
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def mirror(self) -> "QuadraticForm":
        return QuadraticForm(self.a, -self.b, self.c)

    def is_primitive(self) -> bool:
        return math.gcd(math.gcd(self.a, self.b), self.c) == 1

    def __iter__(self):
        return iter((self.a, self.b, self.c))


def fundamental_discriminant(d: int) -> int:
    """Discriminant of Q(sqrt(d))."""
    if d == 0 or (d > 0 and math.isqrt(d) ** 2 == d):
        raise PerfectSquare(f"{d} is a square; Q(sqrt({d})) is not quadratic")
    d0 = squarefree_kernel(d)
    if d0 == 1:
        raise PerfectSquare(f"{d} is a square times 1")
    return d0 if d0 % 4 == 1 else 4 * d0


def is_fundamental(D: int) -> bool:
    if D in (0, 1):
        return False
    if D % 4 == 1:
        return squarefree_kernel(D) == D
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and squarefree_kernel(m) == m
    return False


def principal_form(D: int) -> QuadraticForm:
    k = D % 2
    return QuadraticForm(1, k, (k - D) // 4)


# ---------------------------------------------------------------------------
# reduction


def _normalize_definite(a: int, b: int, c: int) -> tuple[int, int, int]:
    r = (a - b) // (2 * a)
    return a, b + 2 * r * a, a * r * r + b * r + c


def _reduce_definite(f: QuadraticForm) -> QuadraticForm:
    a, b, c = _normalize_definite(*f)
    while a > c or (a == c and b < 0):
        a, b, c = _normalize_definite(c, -b, a)
    return QuadraticForm(a, b, c)


def _is_reduced_indefinite(f: QuadraticForm, s: int) -> bool:
    # s = floor(sqrt(D)), D not a square
    a, b = abs(f.a), f.b
    return 0 < b <= s and s - b < 2 * a <= s + b


def rho(f: QuadraticForm) -> QuadraticForm:
    """One step of the indefinite reduction operator (a proper equivalence)."""
    D = f.disc
    s = math.isqrt(D)
    c = f.c
    ac = abs(c)
    # t = -b mod 2|c|, placed in (s - 2|c|, s] when |c| < sqrt(D), else in (-|c|, |c|]
    if ac <= s:
        lo = s - 2 * ac
    else:
        lo = -ac
    t = lo + 1 + ((-f.b - lo - 1) % (2 * ac))
    return QuadraticForm(c, t, (t * t - D) // (4 * c))


def _reduce_indefinite(f: QuadraticForm) -> QuadraticForm:
    s = math.isqrt(f.disc)
    g = f
    for _ in range(10_000 + 4 * f.disc.bit_length() ** 2 + abs(f.a).bit_length() * 8):
        if _is_reduced_indefinite(g, s):
            return g
        g = rho(g)
    raise RuntimeError(f"indefinite reduction did not terminate for {f}")


def reduce(f: QuadraticForm) -> QuadraticForm:
    """Reduced representative: unique for D < 0, a form on the cycle for D > 0."""
    D = f.disc
    if D < 0:
        if f.a < 0:
            raise InvalidParams("negative definite forms are not used")
        return _reduce_definite(f)
    if math.isqrt(D) ** 2 == D:
        raise PerfectSquare(f"discriminant {D} is a square")
    return _reduce_indefinite(f)


def cycle(f: QuadraticForm) -> list[QuadraticForm]:
    """The rho-cycle of reduced indefinite forms through reduce(f)."""
    start = reduce(f)
    out = [start]
    g = rho(start)
    while g != start:
        out.append(g)
        g = rho(g)
    return out


# ---------------------------------------------------------------------------
# composition


def compose_raw(f: QuadraticForm, g: QuadraticForm) -> QuadraticForm:
    """Dirichlet composition, without reduction."""
    D = f.disc
    if g.disc != D:
        raise DiscMismatch(f"discriminants differ: {D} vs {g.disc}")
    beta = (f.b + g.b) // 2
    e1, x1, y1 = ext_gcd(f.a, g.a)
    e, x2, w = ext_gcd(e1, beta)
    u, v = x2 * x1, x2 * y1
    a3 = f.a * g.a // (e * e)
    b3 = (u * f.a * g.b + v * g.a * f.b + w * (f.b * g.b + D) // 2) // e
    b3 %= 2 * abs(a3)
    c3 = (b3 * b3 - D) // (4 * a3)
    return QuadraticForm(a3, b3, c3)


def compose(f: QuadraticForm, g: QuadraticForm) -> QuadraticForm:
    return reduce(compose_raw(f, g))


def power(f: QuadraticForm, n: int) -> QuadraticForm:
    out = principal_form(f.disc)
    base = reduce(f)
    while n:
        if n & 1:
            out = compose(out, base)
        base = compose(base, base)
        n >>= 1
    return reduce(out)


# ---------------------------------------------------------------------------
# class group


def reduced_forms(D: int) -> list[QuadraticForm]:
    """Reduced primitive forms of discriminant D (D < 0: one per class)."""
    out = []
    if D < 0:
        a = 1
        while 3 * a * a <= -D:
            for b in range(-a + 1, a + 1):
                if (b - D) % 2 or (b * b - D) % (4 * a):
                    continue
                c = (b * b - D) // (4 * a)
                if c < a or (c == a and b < 0):
                    continue
                if math.gcd(math.gcd(a, b), c) == 1:
                    out.append(QuadraticForm(a, b, c))
            a += 1
    else:
        s = math.isqrt(D)
        for b in range(1, s + 1):
            if (b - D) % 2:
                continue
            n = (b * b - D) // 4  # = a*c < 0
            for a in range(1, s + 1):
                if -n % a:
                    continue
                c = n // a
                for f in (QuadraticForm(a, b, c), QuadraticForm(-a, b, -c)):
                    if _is_reduced_indefinite(f, s) and f.is_primitive():
                        out.append(f)
    return sorted(out)


class _ClassCanon:
    """Canonical class representative: the reduced form (D<0) or the least form on its cycle (D>0)."""

    def __init__(self, D: int):
        self.D = D
        self._memo: dict[QuadraticForm, QuadraticForm] = {}

    def __call__(self, f: QuadraticForm) -> QuadraticForm:
        g = reduce(f)
        if self.D < 0:
            return g
        if g not in self._memo:
            cyc = cycle(g)
            rep = min(cyc)
            for h in cyc:
                self._memo[h] = rep
        return self._memo[g]


@dataclass(frozen=True)
class ClassGroupStructure:
    disc: int
    invariant_factors: tuple[int, ...]
    narrow: bool

    @property
    def order(self) -> int:
        return math.prod(self.invariant_factors)

    def torsion(self, ell: int) -> int:
        return math.prod(math.gcd(n, ell) for n in self.invariant_factors)

    def as_record(self) -> dict:
        return {"D": self.disc, "narrow": self.narrow, "factors": list(self.invariant_factors)}


def _prime_forms(D: int, canon: _ClassCanon, limit: int) -> list[QuadraticForm]:
    """Classes of forms (q, b, c) for primes q <= limit not inert in Q(sqrt D)."""
    out = []
    for q in range(2, limit + 1):
        if not is_prime(q):
            continue
        for b in range(0, 2 * q):
            if (b - D) % 2 == 0 and (b * b - D) % (4 * q) == 0:
                f = QuadraticForm(q, b, (b * b - D) // (4 * q))
                out.append(canon(f))
                break
    return out


def _generator_bound(D: int) -> int:
    if D < 0:
        return math.isqrt(-D // 3) + 1
    return math.isqrt(D) + 1


def class_group(D: int, bound: int = DEFAULT_DISC_BOUND) -> ClassGroupStructure:
    """Invariant factors of the (narrow, for D > 0) form class group.

    The group is built from classes of prime forms of norm up to sqrt(|D|/3)
    (D < 0) resp. sqrt(D) (D > 0), which generate: every reduced form has a
    in that range and its class is a product of prime-form classes of
    norms dividing a. The structure comes from the relation lattice found by
    extending the subgroup one generator at a time.
    """
    if not is_fundamental(D):
        raise NotFundamental(f"{D} is not a fundamental discriminant")
    if abs(D) > bound:
        raise BoundExceeded(f"|D| = {abs(D)} exceeds the class-group bound {bound}")
    return _class_group_cached(D)


@lru_cache(maxsize=100_000)
def _class_group_cached(D: int) -> ClassGroupStructure:
    canon = _ClassCanon(D)
    one = canon(principal_form(D))
    # element -> exponent vector over accepted generators
    elements: dict[QuadraticForm, tuple[int, ...]] = {one: ()}
    relations: list[list[int]] = []
    for g in _prime_forms(D, canon, _generator_bound(D)):
        if g in elements:
            continue
        # least m with g^m in the current subgroup gives the relation m*e_k = vec(g^m)
        cur, m = g, 1
        while cur not in elements:
            cur = canon(compose_raw(cur, g))
            m += 1
        relations = [row + [0] for row in relations]
        relations.append([-x for x in elements[cur]] + [m])
        extended: dict[QuadraticForm, tuple[int, ...]] = {}
        gi = one
        for i in range(m):
            for h, vec in elements.items():
                extended[canon(compose_raw(h, gi)) if i else h] = vec + (i,)
            gi = canon(compose_raw(gi, g))
        elements = extended
    factors = tuple(d for d in smith_diagonal(relations) if d > 1) if relations else ()
    group = ClassGroupStructure(D, factors, D > 0)
    if group.order != len(elements):
        raise IdentityFailure(f"class group bookkeeping mismatch for D={D}")
    return group


def class_number(D: int, bound: int = DEFAULT_DISC_BOUND) -> int:
    return class_group(D, bound).order


def ell_torsion(D: int, ell: int, bound: int = DEFAULT_DISC_BOUND) -> int:
    """|Cl[ell]| of Q(sqrt D); odd ell only for real fields."""
    if ell < 2:
        raise InvalidParams(f"ell must exceed 1, got {ell}")
    if D > 0 and ell % 2 == 0:
        raise EvenEllRealField("even ell on a real field would need Cl rather than the narrow Cl+")
    return class_group(D, bound).torsion(ell)


# ---------------------------------------------------------------------------
# persistent cache


class ClassGroupCache:
    """Append-only JSON-lines cache of class-group structures.

    Reads are lock-free after load; inserts take a lock and are idempotent.
    """

    def __init__(self, path: str | os.PathLike | None, bound: int = DEFAULT_DISC_BOUND):
        self.path = Path(path) if path else None
        self.bound = bound
        self._lock = threading.Lock()
        self._data: dict[int, ClassGroupStructure] = {}
        if self.path and self.path.exists():
            self._load()

    def _load(self) -> None:
        assert self.path is not None
        with self.path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    D = int(rec["D"])
                    factors = tuple(int(x) for x in rec["factors"])
                    narrow = bool(rec["narrow"])
                except (ValueError, KeyError, TypeError) as exc:
                    raise CacheError(f"{self.path}:{lineno}: malformed cache record") from exc
                if narrow != (D > 0) or any(x < 2 for x in factors) or any(
                    b % a for a, b in zip(factors, factors[1:])
                ):
                    raise CacheError(f"{self.path}:{lineno}: inconsistent cache record")
                self._data[D] = ClassGroupStructure(D, factors, narrow)

    def get(self, D: int) -> ClassGroupStructure:
        hit = self._data.get(D)
        if hit is not None:
            return hit
        group = class_group(D, self.bound)
        with self._lock:
            if D not in self._data:
                self._data[D] = group
                if self.path:
                    self.path.parent.mkdir(parents=True, exist_ok=True)
                    with self.path.open("a", encoding="utf-8") as fh:
                        fh.write(json.dumps(group.as_record()) + "\n")
        return group

    def ell_torsion(self, D: int, ell: int) -> int:
        if ell < 2:
            raise InvalidParams(f"ell must exceed 1, got {ell}")
        if D > 0 and ell % 2 == 0:
            raise EvenEllRealField("even ell on a real field would need Cl rather than the narrow Cl+")
        return self.get(D).torsion(ell)

    def __len__(self) -> int:
        return len(self._data)


def genus_two_rank(D: int) -> int:
    """Number of prime divisors of D minus one (the 2-rank of the form class group)."""
    return len(factorint(abs(D))) - 1
