"""Elementary abelian extensions of Q encoded by class field theory.

An extension L/Q with Gal(L/Q) = (Z/pZ)^r is a pair (f, H) with H a subgroup
of (Z/fZ)* and (Z/fZ)*/H elementary abelian of order p^r. Everything
downstream (subfields, conductors, discriminants, Frobenius classes) reduces
to linear algebra over F_p on the order-p characters of (Z/fZ)*.

Coordinates: ``UnitGroup(f, p)`` maps each unit x to psi(x) in F_p^s, where
s is the p-rank of (Z/fZ)*. Every order-p character is x -> a . psi(x) for a
functional a in F_p^s. An extension stores an r-dimensional subspace W of
those functionals (its character group); subfields are subspaces of W,
written in coordinates relative to the RREF basis of W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np
from sympy import primitive_root

from .arith import (
    Vector,
    divisors,
    factorint,
    gaussian_binomial,
    is_prime,
    kronecker,
    lines,
    normalize,
    nullspace,
    rref,
    span,
    subspaces,
)
from .errors import (
    InvalidParams,
    NotAUnit,
    NotMinimalConductor,
    RankOutOfRange,
    WrongQuotient,
    WrongShape,
)

RAMIFIED = None


@lru_cache(maxsize=256)
def _dlog_table(modulus: int, generator: int) -> np.ndarray:
    table = np.full(modulus, -1, dtype=np.int64)
    x = 1
    for i in range(modulus):
        if table[x] >= 0:
            break
        table[x] = i
        x = x * generator % modulus
    return table


class UnitGroup:
    """(Z/fZ)* together with its coordinates modulo p-th powers."""

    def __init__(self, f: int, p: int):
        if f < 1:
            raise InvalidParams(f"modulus must be positive, got {f}")
        if not is_prime(p):
            raise InvalidParams(f"p must be prime, got {p}")
        self.f = f
        self.p = p
        idx = np.arange(f, dtype=np.int64)
        self.units = idx[np.gcd(idx, f) == 1] if f > 1 else np.array([0], dtype=np.int64)
        self.order = len(self.units)
        self.coords = self._coordinates(self.units)
        self.s = self.coords.shape[1]
        self._conductors: dict[Vector, int] = {}

    def _coordinates(self, xs: np.ndarray) -> np.ndarray:
        f, p = self.f, self.p
        cols = []
        for q, k in sorted(factorint(f).items()):
            qk = q**k
            loc = xs % qk
            if q == 2:
                if p != 2 or k == 1:
                    continue
                minus = (loc % 4 == 3).astype(np.int64)
                cols.append(minus)
                if k >= 3:
                    y = np.where(minus == 1, (qk - loc) % qk, loc)
                    cols.append(_dlog_table(qk, 5)[y] % 2)
            elif (qk // q * (q - 1)) % p == 0:
                g = int(primitive_root(qk))
                cols.append(_dlog_table(qk, g)[loc] % p)
        if not cols:
            return np.zeros((len(xs), 0), dtype=np.int64)
        return np.stack(cols, axis=1).astype(np.int64)

    def psi(self, x: int) -> Vector:
        if math.gcd(x, self.f) != 1:
            raise NotAUnit(f"{x} is not a unit mod {self.f}")
        row = self._coordinates(np.array([x % self.f], dtype=np.int64))[0]
        return tuple(int(v) for v in row)

    def values(self, functional: Sequence[int]) -> np.ndarray:
        """Character values (in Z/p) of x -> functional . psi(x) on all units."""
        return (self.coords @ np.asarray(functional, dtype=np.int64)) % self.p

    def kernel_mask(self, functionals: Sequence[Sequence[int]]) -> np.ndarray:
        if not functionals:
            return np.ones(self.order, dtype=bool)
        mat = np.asarray(functionals, dtype=np.int64).T
        return np.all((self.coords @ mat) % self.p == 0, axis=1)

    def conductor(self, functional: Sequence[int]) -> int:
        """Least d | f such that the character is trivial on {x = 1 mod d}."""
        if not any(x % self.p for x in functional):
            return 1
        key = normalize(functional, self.p)
        if key not in self._conductors:
            vals = self.values(key)
            for d in divisors(self.f):
                mask = self.units % d == 1 % d
                if not vals[mask].any():
                    self._conductors[key] = d
                    break
        return self._conductors[key]


@lru_cache(maxsize=4096)
def unit_group(f: int, p: int) -> UnitGroup:
    return UnitGroup(f, p)


def _greedy_generators(members: Iterable[int], f: int) -> tuple[int, ...]:
    """Canonical generators: scan members ascending, keep those outside the span so far."""
    gens: list[int] = []
    spanned = {1 % f}
    for x in members:
        x = int(x)
        if x in spanned:
            continue
        gens.append(x)
        new = set(spanned)
        power = x
        while power not in spanned:
            new.update(s * power % f for s in spanned)
            power = power * x % f
        spanned = new
    return tuple(gens)


@dataclass(frozen=True, eq=False)
class SubfieldDescriptor:
    parent: "AbelianExtension" = field(repr=False)
    basis: tuple[Vector, ...]
    degree: int
    conductor: int
    disc: int

    @property
    def t(self) -> int:
        return len(self.basis)

    @cached_property
    def subgroup_generators(self) -> tuple[int, ...]:
        ext = self.parent
        mask = ext.group.kernel_mask([ext.functional(c) for c in self.basis])
        return _greedy_generators(ext.group.units[mask], ext.modulus)

    @property
    def lines(self) -> list[Vector]:
        """Characters (up to scalar) cutting out the degree-p subfields inside this one."""
        return lines(self.basis, self.parent.p)

    def contains(self, other: "SubfieldDescriptor") -> bool:
        both = rref(self.basis + other.basis, self.parent.p)
        return len(both) == self.t

    def is_real(self) -> bool:
        return all(
            sum(ci * vi for ci, vi in zip(c, self.parent.coset(-1))) % self.parent.p == 0
            for c in self.basis
        )

    @property
    def signed_disc(self) -> int:
        """Fundamental discriminant of a quadratic subfield (sign from parity of the character)."""
        if self.parent.p != 2 or self.t != 1:
            raise WrongShape("signed discriminant is only defined for quadratic subfields")
        return self.disc if self.is_real() else -self.disc

    def splits(self, q: int) -> bool | None:
        """True if the prime q splits completely here; None if q ramifies in this subfield.

        q may ramify in the parent and still be unramified here. The characters
        of this subfield factor through its own conductor, so they are evaluated
        at a unit mod f congruent to q modulo that conductor.
        """
        cond, f = self.conductor, self.parent.modulus
        if cond % q == 0:
            return None
        u = q
        while math.gcd(u, f) != 1:
            u += cond
        coset = self.parent.coset(u)
        p = self.parent.p
        return all(sum(ci * vi for ci, vi in zip(c, coset)) % p == 0 for c in self.basis)

    def record(self) -> dict:
        return {
            "degree": self.degree,
            "conductor": self.conductor,
            "disc": self.disc,
            "subgroup_generators": list(self.subgroup_generators),
        }


@dataclass(frozen=True)
class FrobeniusClass:
    prime: int
    coset: Vector | None

    @property
    def ramified(self) -> bool:
        return self.coset is RAMIFIED

    @property
    def is_identity(self) -> bool:
        return self.coset is not RAMIFIED and not any(self.coset)


@dataclass(frozen=True, eq=False)
class AbelianExtension:
    """(Z/pZ)^r-extension of Q with conductor ``modulus`` and kernel H."""

    modulus: int
    kernel_generators: tuple[int, ...]
    p: int
    r: int
    characters: tuple[Vector, ...] = field(repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AbelianExtension):
            return NotImplemented
        return (self.modulus, self.p, self.characters) == (other.modulus, other.p, other.characters)

    def __hash__(self) -> int:
        return hash((self.modulus, self.p, self.characters))

    @classmethod
    def from_characters(cls, f: int, p: int, functionals: Iterable[Sequence[int]]) -> "AbelianExtension":
        """Build from a spanning set of order-p character functionals mod f."""
        group = unit_group(f, p)
        basis = rref(functionals, p)
        if not basis:
            raise WrongQuotient("empty character group")
        mask = group.kernel_mask(basis)
        gens = _greedy_generators(group.units[mask], f)
        ext = cls(f, gens, p, len(basis), basis)
        ext._check_conductor()
        return ext

    @property
    def group(self) -> UnitGroup:
        return unit_group(self.modulus, self.p)

    @property
    def degree(self) -> int:
        return self.p**self.r

    def functional(self, c: Sequence[int]) -> Vector:
        """Functional on F_p^s for coefficient vector c relative to the character basis."""
        s = self.group.s
        return tuple(sum(ci * w[j] for ci, w in zip(c, self.characters)) % self.p for j in range(s))

    def coset(self, x: int) -> Vector:
        """Image of a unit x in (Z/fZ)*/H, as coordinates in F_p^r."""
        v = self.group.psi(x % self.modulus)
        return tuple(sum(a * b for a, b in zip(w, v)) % self.p for w in self.characters)

    def character_conductor(self, c: Sequence[int]) -> int:
        return self.group.conductor(self.functional(c))

    def _check_conductor(self) -> None:
        cond = 1
        for c in lines(_identity(self.r), self.p):
            cond = math.lcm(cond, self.character_conductor(c))
        if cond != self.modulus:
            raise NotMinimalConductor(
                f"f={self.modulus} is not the conductor of this extension (conductor is {cond})"
            )

    def _descriptor(self, basis: tuple[Vector, ...]) -> SubfieldDescriptor:
        cond, disc = 1, 1
        for c in span(basis, self.p):
            fc = self.character_conductor(c)
            cond = math.lcm(cond, fc)
            disc *= fc
        return SubfieldDescriptor(self, basis, self.p ** len(basis), cond, disc)

    @cached_property
    def _lattice(self) -> dict[int, list[SubfieldDescriptor]]:
        return {}

    def subfields(self, t: int) -> list[SubfieldDescriptor]:
        """All subfields of degree p^t, ascending by disc (ties: subgroup generators)."""
        if not 1 <= t <= self.r:
            raise RankOutOfRange(f"t must lie in [1, {self.r}], got {t}")
        if t not in self._lattice:
            descs = [self._descriptor(b) for b in subspaces(self.r, t, self.p)]
            self._lattice[t] = _sort_subfields(descs)
        return list(self._lattice[t])

    @cached_property
    def discriminant(self) -> int:
        """Product of the conductors of every character trivial on H."""
        disc = 1
        for c in span(_identity(self.r), self.p):
            disc *= self.character_conductor(c)
        return disc

    def frobenius(self, q: int) -> FrobeniusClass:
        if self.modulus % q == 0:
            return FrobeniusClass(q, RAMIFIED)
        return FrobeniusClass(q, self.coset(q))

    def record(self) -> str:
        gens = ",".join(str(g) for g in sorted(self.kernel_generators))
        return f"f={self.modulus};H={gens};p={self.p};r={self.r}"

    def __repr__(self) -> str:
        return f"AbelianExtension({self.record()})"


def _identity(r: int) -> tuple[Vector, ...]:
    return tuple(tuple(int(i == j) for j in range(r)) for i in range(r))


def _sort_subfields(descs: list[SubfieldDescriptor]) -> list[SubfieldDescriptor]:
    descs.sort(key=lambda d: d.disc)
    out: list[SubfieldDescriptor] = []
    i = 0
    while i < len(descs):
        j = i
        while j < len(descs) and descs[j].disc == descs[i].disc:
            j += 1
        group = descs[i:j]
        if len(group) > 1:
            group.sort(key=lambda d: d.subgroup_generators)
        out.extend(group)
        i = j
    return out


def _closure(gens: Sequence[int], f: int) -> set[int]:
    spanned = {1 % f}
    frontier = [1 % f]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x * g % f
                if y not in spanned:
                    spanned.add(y)
                    nxt.append(y)
        frontier = nxt
    return spanned


def construct_extension(f: int, kernel_generators: Sequence[int], p: int, r: int) -> AbelianExtension:
    """Validate (f, H, p, r) and return the extension it defines."""
    if f < 3:
        raise InvalidParams(f"modulus must be at least 3, got {f}")
    if r < 1:
        raise InvalidParams(f"rank must be positive, got {r}")
    if not is_prime(p):
        raise InvalidParams(f"p must be prime, got {p}")
    gens = [g % f for g in kernel_generators]
    for g in gens:
        if math.gcd(g, f) != 1:
            raise NotAUnit(f"kernel generator {g} shares a factor with {f}")
    group = unit_group(f, p)
    H = _closure(gens, f)
    if group.order != len(H) * p**r:
        raise WrongQuotient(f"index of H is {group.order / len(H):g}, expected {p}^{r}")
    hs = np.fromiter(H, dtype=np.int64)
    powers = np.array([pow(int(u), p, f) for u in group.units], dtype=np.int64)
    if not np.isin(powers, hs).all():
        raise WrongQuotient("quotient by H does not have exponent p")
    W = nullspace([group.psi(g) for g in gens] or [(0,) * group.s], group.s, p) if group.s else ()
    if len(W) != r:
        raise WrongQuotient(f"character group has rank {len(W)}, expected {r}")
    return AbelianExtension.from_characters(f, p, W)


def parse_record(text: str) -> AbelianExtension:
    """Inverse of ``AbelianExtension.record``."""
    try:
        parts = dict(item.split("=", 1) for item in text.strip().split(";"))
        f = int(parts["f"])
        gens = [int(x) for x in parts["H"].split(",") if x.strip()]
        p, r = int(parts["p"]), int(parts["r"])
    except (KeyError, ValueError) as exc:
        raise InvalidParams(f"malformed extension record {text!r}") from exc
    return construct_extension(f, gens, p, r)


def quadratic_compositum(discs: Sequence[int]) -> AbelianExtension:
    """Q(sqrt(D1), ..., sqrt(Dr)) for fundamental discriminants Di."""
    f = 1
    for d in discs:
        f = math.lcm(f, abs(d))
    group = unit_group(f, 2)
    functionals = []
    for d in discs:
        signs = np.array([kronecker(d, int(u)) for u in group.units])
        target = (signs == -1).astype(np.int64)
        # solve coords . a = target over F_2 from rows at generator-like units
        sol = _solve_functional(group, target)
        if sol is None:
            raise InvalidParams(f"{d} is not a fundamental discriminant dividing {f}")
        functionals.append(sol)
    ext = AbelianExtension.from_characters(f, 2, functionals)
    if ext.r != len(discs):
        raise WrongQuotient(f"discriminants {list(discs)} are multiplicatively dependent")
    return ext


def _solve_functional(group: UnitGroup, target: np.ndarray) -> Vector | None:
    # brute force over the 2^s functionals; s is small at desk scale
    for a in span(_identity(group.s), group.p) if group.s else [()]:
        if np.array_equal(group.values(a), target):
            return a
    return None


def extensions_with_conductor(f: int, p: int, r: int) -> list[AbelianExtension]:
    """Every (Z/pZ)^r-extension of Q whose conductor is exactly f."""
    group = unit_group(f, p)
    if group.s < r:
        return []
    out = []
    for W in subspaces(group.s, r, p):
        cond = 1
        for a in lines(W, p):
            cond = math.lcm(cond, group.conductor(a))
        if cond == f:
            out.append(AbelianExtension.from_characters(f, p, W))
    return out


def extensions_up_to(bound: int, p: int, r: int) -> list[AbelianExtension]:
    out = []
    for f in range(3, bound + 1):
        out.extend(extensions_with_conductor(f, p, r))
    return out


def subfields_of_degree(ext: AbelianExtension, t: int) -> list[SubfieldDescriptor]:
    return ext.subfields(t)


def discriminant(ext: AbelianExtension) -> int:
    return ext.discriminant


def frobenius(ext: AbelianExtension, q: int) -> FrobeniusClass:
    if not is_prime(q):
        raise InvalidParams(f"{q} is not prime")
    return ext.frobenius(q)


# ---------------------------------------------------------------------------
# discriminant identities and lower bounds


def _exponents(n: int) -> dict[int, int]:
    return dict(factorint(n)) if n > 1 else {}


def _scaled(vec: dict[int, int], k: int) -> dict[int, int]:
    return {q: e * k for q, e in vec.items() if e * k}


def _add(a: dict[int, int], b: dict[int, int]) -> dict[int, int]:
    out = dict(a)
    for q, e in b.items():
        out[q] = out.get(q, 0) + e
    return {q: e for q, e in out.items() if e}


@dataclass
class DiscProductReport:
    record: str
    disc: int
    layers: list[dict]

    @property
    def passed(self) -> bool:
        return all(layer["passed"] for layer in self.layers)


def verify_disc_product(ext: AbelianExtension, all_layers: bool = False) -> DiscProductReport:
    """Check Disc(L) against products over the degree-p and degree-p^2 subfield layers.

    The degree-p layer is an exact product. For degree p^t each character lies
    in [r-1, t-1]_p of the subfields, so Disc(L)^mult = prod Disc(F_s); for
    t = 2 this multiplicity is (p^(r-1) - 1)/(p - 1). Comparisons are done on
    prime-exponent vectors.
    """
    if ext.r < 2:
        raise WrongShape("disc product identities need rank >= 2")
    p, r = ext.p, ext.r
    lhs_base = _exponents(ext.discriminant)
    ts = range(1, r + 1) if all_layers else ([1, 2] if r > 2 else [1])
    layers = []
    for t in ts:
        mult = gaussian_binomial(r - 1, t - 1, p)
        if t == 2:
            # stated form: Disc(L)^(p^(r-1)-1) = prod Disc(M_j)^(p-1)
            lhs = _scaled(lhs_base, p ** (r - 1) - 1)
            rhs: dict[int, int] = {}
            for m in ext.subfields(2):
                rhs = _add(rhs, _scaled(_exponents(m.disc), p - 1))
        else:
            lhs = _scaled(lhs_base, mult)
            rhs = {}
            for m in ext.subfields(t):
                rhs = _add(rhs, _exponents(m.disc))
        layers.append(
            {
                "t": t,
                "multiplicity": mult,
                "lhs": dict(sorted(lhs.items())),
                "rhs": dict(sorted(rhs.items())),
                "passed": lhs == rhs,
            }
        )
    return DiscProductReport(ext.record(), ext.discriminant, layers)


@dataclass(frozen=True)
class Rank3Layout:
    """Subfields singled out for (Z/2Z)^3: the smallest quartic and the quadratics around it."""

    smallest_quartic: SubfieldDescriptor
    smallest_outside: SubfieldDescriptor
    inside: tuple[SubfieldDescriptor, ...]
    paired: tuple[SubfieldDescriptor, ...]

    @property
    def outside(self) -> tuple[SubfieldDescriptor, ...]:
        """The four quadratic subfields not contained in the smallest quartic one."""
        return (self.smallest_outside,) + self.paired


def rank3_layout(ext: AbelianExtension) -> Rank3Layout:
    if ext.p != 2 or ext.r != 3:
        raise WrongShape("rank-3 layout needs p = 2 and r = 3")
    quartic = ext.subfields(2)[0]
    quads = ext.subfields(1)
    inside = tuple(k for k in quads if quartic.contains(k))
    outside = [k for k in quads if not quartic.contains(k)]
    first = outside[0]
    # partner of each inside k: the third quadratic subfield of first * k
    by_line = {k.basis[0]: k for k in quads}
    paired = tuple(
        by_line[normalize(tuple((a + b) % 2 for a, b in zip(first.basis[0], k.basis[0])), 2)]
        for k in inside
    )
    return Rank3Layout(quartic, first, inside, paired)


@dataclass
class DiscLowerBoundReport:
    shape: str
    disc_L: int
    small: int
    large: int
    eta: float
    inequalities: list[dict]

    @property
    def passed(self) -> bool:
        return all(i["passed"] for i in self.inequalities)


def disc_lower_bound_check(ext: AbelianExtension) -> DiscLowerBoundReport:
    """Lower bounds on the two smallest relevant subfield discriminants.

    Rank 2: with eta = ln D2 / ln D1, D1 >= DL^(1/p(eta+1)) and
    D2 >= DL^(eta/p(eta+1)); after clearing logs both read (D1*D2)^p >= DL.
    Rank 3, p = 2: with eta = ln D(Km) / ln D(M1), both bounds read
    D(M1)^2 * D(Km)^4 >= DL.
    """
    DL = ext.discriminant
    if ext.r == 2:
        K1, K2 = ext.subfields(1)[:2]
        small, large = K1.disc, K2.disc
        lhs = (small * large) ** ext.p
        p = ext.p
        ineqs = [
            {"claim": f"Disc(K1) >= Disc(L)^(1/{p}(eta+1))", "lhs": lhs, "rhs": DL, "passed": lhs >= DL},
            {"claim": f"Disc(K2) >= Disc(L)^(eta/{p}(eta+1))", "lhs": lhs, "rhs": DL, "passed": lhs >= DL},
        ]
        shape = f"(Z/{p}Z)^2"
    elif ext.r == 3 and ext.p == 2:
        lay = rank3_layout(ext)
        small, large = lay.smallest_quartic.disc, lay.smallest_outside.disc
        lhs = small**2 * large**4
        ineqs = [
            {"claim": "Disc(M) >= Disc(L)^(1/(4eta+2))", "lhs": lhs, "rhs": DL, "passed": lhs >= DL},
            {"claim": "Disc(K) >= Disc(L)^(eta/(4eta+2))", "lhs": lhs, "rhs": DL, "passed": lhs >= DL},
        ]
        shape = "(Z/2Z)^3"
    else:
        raise WrongShape("lower bounds are stated for rank 2, or rank 3 with p = 2")
    return DiscLowerBoundReport(shape, DL, small, large, math.log(large) / math.log(small), ineqs)


def subfield_csv_rows(ext: AbelianExtension, t: int | None = None) -> list[dict]:
    ts = [t] if t else range(1, ext.r + 1)
    rows = []
    for tt in ts:
        for d in ext.subfields(tt):
            rec = d.record()
            rec["subgroup_generators"] = " ".join(str(g) for g in rec["subgroup_generators"])
            rows.append(rec)
    return rows
