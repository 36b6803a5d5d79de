"""Finite (Z/lZ)[A]-modules for A = (Z/pZ)^r and their idempotent splitting.

A module is the free module (Z/lZ)^n with r commuting action matrices, one per
standard generator of A, each of order dividing p. All matrix arithmetic is
done on small int64 arrays reduced mod l.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from sympy import Matrix, Poly, symbols

from .arith import is_prime, lines, nullspace, rank_mod, rref, smith_diagonal, span
from .errors import BudgetExceeded, IdentityFailure, InvalidParams, NotFaithful

MAX_DIM = 4


def _matpow(m: np.ndarray, k: int, ell: int) -> np.ndarray:
    out = np.eye(m.shape[0], dtype=np.int64)
    base = m % ell
    while k:
        if k & 1:
            out = out @ base % ell
        base = base @ base % ell
        k >>= 1
    return out


def image_order(mat: np.ndarray, ell: int) -> int:
    """Size of the image of (Z/l)^cols under ``mat`` (an n x cols matrix)."""
    if mat.size == 0:
        return 1
    if is_prime(ell):
        return ell ** rank_mod(mat.T.tolist(), ell)
    out = 1
    for s in smith_diagonal(mat.tolist()):
        out *= ell // math.gcd(s, ell)
    return out


@dataclass(frozen=True, eq=False)
class GroupRingModule:
    ell: int
    p: int
    r: int
    actions: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.ell < 2:
            raise InvalidParams("l must be > 1")
        if not is_prime(self.p):
            raise InvalidParams(f"p = {self.p} is not prime")
        if math.gcd(self.ell, self.p) != 1:
            raise InvalidParams(f"gcd(l, p) = gcd({self.ell}, {self.p}) != 1")
        if self.r < 1 or len(self.actions) != self.r:
            raise InvalidParams("need exactly r action matrices")
        acts = tuple(np.asarray(a, dtype=np.int64) % self.ell for a in self.actions)
        n = acts[0].shape[0]
        eye = np.eye(n, dtype=np.int64)
        for a in acts:
            if a.shape != (n, n):
                raise InvalidParams("action matrices must be square of equal size")
            if not np.array_equal(_matpow(a, self.p, self.ell), eye):
                raise InvalidParams("an action matrix does not have order dividing p")
        for a, b in itertools.combinations(acts, 2):
            if not np.array_equal(a @ b % self.ell, b @ a % self.ell):
                raise InvalidParams("action matrices do not commute")
        object.__setattr__(self, "actions", acts)

    @property
    def dimension(self) -> int:
        return self.actions[0].shape[0]

    @property
    def order(self) -> int:
        return self.ell**self.dimension

    @cached_property
    def _rho(self) -> dict[tuple[int, ...], np.ndarray]:
        powers = [[_matpow(a, k, self.ell) for k in range(self.p)] for a in self.actions]
        out = {}
        for elt in itertools.product(range(self.p), repeat=self.r):
            m = np.eye(self.dimension, dtype=np.int64)
            for j, k in enumerate(elt):
                if k:
                    m = m @ powers[j][k] % self.ell
            out[elt] = m
        return out

    def act(self, element: Sequence[int]) -> np.ndarray:
        return self._rho[tuple(int(x) % self.p for x in element)]

    def conjugate(self, P: np.ndarray, P_inv: np.ndarray) -> "GroupRingModule":
        return GroupRingModule(self.ell, self.p, self.r, tuple(P_inv @ a % self.ell @ P % self.ell for a in self.actions))

    def direct_sum(self, other: "GroupRingModule") -> "GroupRingModule":
        if (self.ell, self.p, self.r) != (other.ell, other.p, other.r):
            raise InvalidParams("direct sum needs identical (l, p, r)")
        n, m = self.dimension, other.dimension
        acts = []
        for a, b in zip(self.actions, other.actions):
            blk = np.zeros((n + m, n + m), dtype=np.int64)
            blk[:n, :n], blk[n:, n:] = a, b
            acts.append(blk)
        return GroupRingModule(self.ell, self.p, self.r, tuple(acts))

    @classmethod
    def trivial(cls, ell: int, p: int, r: int, n: int = 1) -> "GroupRingModule":
        return cls(ell, p, r, tuple(np.eye(n, dtype=np.int64) for _ in range(r)))

    @classmethod
    def augmentation_ideal(cls, ell: int, p: int, r: int) -> "GroupRingModule":
        """Kernel of the augmentation map on the regular module, basis e_a - e_0 (a != 0)."""
        elts = [e for e in itertools.product(range(p), repeat=r) if any(e)]
        index = {e: i for i, e in enumerate(elts)}
        acts = []
        for j in range(r):
            shift = tuple(1 if i == j else 0 for i in range(r))
            m = np.zeros((len(elts), len(elts)), dtype=np.int64)
            for e, col in index.items():
                moved = tuple((x + y) % p for x, y in zip(e, shift))
                # g(e_a - e_0) = (e_{a+s} - e_0) - (e_s - e_0)
                if any(moved):
                    m[index[moved], col] += 1
                m[index[shift], col] -= 1
            acts.append(m)
        return cls(ell, p, r, tuple(acts))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Coinvariants:
    generators: tuple[tuple[int, ...], ...]
    augmentation_order: int
    quotient_order: int
    quotient_dimension: int | None

    @property
    def faithful(self) -> bool:
        return self.quotient_order == 1


def coinvariants(m: GroupRingModule) -> Coinvariants:
    """I_A M (spanned by (g_j - 1) M) and the size of the quotient M_A."""
    n, ell = m.dimension, m.ell
    eye = np.eye(n, dtype=np.int64)
    big = np.concatenate([(a - eye) % ell for a in m.actions], axis=1)
    size = image_order(big, ell)
    cols = {tuple(int(x) for x in c) for c in big.T if c.any()}
    if is_prime(ell):
        gens = rref(sorted(cols), ell)
    else:
        gens = tuple(sorted(cols))
    quotient = m.order // size
    dim = round(math.log(quotient, ell)) if quotient > 1 else 0
    return Coinvariants(gens, size, quotient, dim if ell**dim == quotient else None)


@dataclass(frozen=True)
class Idempotent:
    functional: tuple[int, ...]
    hyperplane: tuple[tuple[int, ...], ...]
    matrix: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DecompositionPiece:
    idempotent: Idempotent
    order: int
    rank: int | None


def _hyperplane_elements(functional: Sequence[int], r: int, p: int) -> tuple[tuple[tuple[int, ...], ...], list]:
    basis = nullspace([list(functional)], r, p)
    elts = span(basis, p) if basis else [tuple([0] * r)]
    return basis, elts


def idempotents(m: GroupRingModule) -> list[Idempotent]:
    """One projector per index-p subgroup A_i: (1/|A_i|) sum over a in A_i of a."""
    out = []
    p, r, ell = m.p, m.r, m.ell
    scale = pow(p ** (r - 1), -1, ell)
    eye_r = tuple(tuple(1 if i == j else 0 for i in range(r)) for j in range(r))
    for c in lines(eye_r, p):
        basis, elts = _hyperplane_elements(c, r, p)
        total = np.zeros((m.dimension, m.dimension), dtype=np.int64)
        for a in elts:
            total = (total + m.act(a)) % ell
        out.append(Idempotent(c, basis, total * scale % ell))
    return out


@dataclass(frozen=True)
class Decomposition:
    pieces: tuple[DecompositionPiece, ...]
    dimension: int
    order: int

    @property
    def ranks(self) -> tuple[int | None, ...]:
        return tuple(pc.rank for pc in self.pieces)


def _rank_of(order: int, ell: int) -> int | None:
    k = round(math.log(order, ell)) if order > 1 else 0
    return k if ell**k == order else None


def idempotent_decomposition(m: GroupRingModule) -> Decomposition:
    """M as the direct sum of the images of the idempotents, for faithful M.

    Raises NotFaithful when the coinvariants are nonzero. Any failure of the
    projector identities raises IdentityFailure.
    """
    co = coinvariants(m)
    if not co.faithful:
        raise NotFaithful(f"coinvariants have order {co.quotient_order}")
    ell, n = m.ell, m.dimension
    eps = idempotents(m)
    pieces = []
    for e in eps:
        E = e.matrix
        if not np.array_equal(E @ E % ell, E):
            raise IdentityFailure(f"projector for {e.functional} is not idempotent")
        _, elts = _hyperplane_elements(e.functional, m.r, m.p)
        for a in elts:
            if not np.array_equal(m.act(a) @ E % ell, E):
                raise IdentityFailure(f"image of projector {e.functional} is not fixed by its subgroup")
        order = image_order(E, ell)
        pieces.append(DecompositionPiece(e, order, _rank_of(order, ell)))
    for e1, e2 in itertools.combinations(eps, 2):
        if (e1.matrix @ e2.matrix % ell).any():
            raise IdentityFailure("distinct projectors are not orthogonal")
    product = math.prod(pc.order for pc in pieces)
    joint = image_order(np.concatenate([e.matrix for e in eps], axis=1), ell)
    if product != m.order or joint != m.order:
        raise IdentityFailure(f"|M| = {m.order} but product of pieces = {product}, span = {joint}")
    return Decomposition(tuple(pieces), n, m.order)


def general_identity_holds(m: GroupRingModule) -> bool:
    """|M| * |M^A|^(k-1) = prod |e_i M| with k projectors; valid with or without faithfulness."""
    eps = idempotents(m)
    ell = m.ell
    total = np.zeros((m.dimension, m.dimension), dtype=np.int64)
    for mat in m._rho.values():
        total = (total + mat) % ell
    avg = total * pow(m.p**m.r, -1, ell) % ell
    fixed = image_order(avg, ell)
    prod = math.prod(image_order(e.matrix, ell) for e in eps)
    return m.order * fixed ** (len(eps) - 1) == prod


# ---------------------------------------------------------------------------
# generation of instances


def _irreducible_blocks(ell: int, p: int) -> list[np.ndarray]:
    """Companion matrices of the irreducible factors of the p-th cyclotomic polynomial mod l."""
    x = symbols("x")
    poly = Poly(sum(x**k for k in range(p)), x, modulus=ell)
    blocks = []
    for fac, _ in poly.factor_list()[1]:
        coeffs = [int(c) % ell for c in fac.monic().all_coeffs()]
        d = len(coeffs) - 1
        comp = np.zeros((d, d), dtype=np.int64)
        comp[1:, :-1] = np.eye(d - 1, dtype=np.int64)
        # last column: -a_0, -a_1, ..., -a_{d-1}
        comp[:, -1] = [(-c) % ell for c in reversed(coeffs[1:])]
        blocks.append(comp)
    return blocks


def _random_invertible(n: int, ell: int, rng: random.Random) -> tuple[np.ndarray, np.ndarray]:
    while True:
        P = Matrix(n, n, [rng.randrange(ell) for _ in range(n * n)])
        if math.gcd(int(P.det()) % ell, ell) == 1:
            P_inv = P.inv_mod(ell)
            return (np.array(P.tolist(), dtype=np.int64), np.array(P_inv.tolist(), dtype=np.int64) % ell)


def _perm_kernel_block(ell: int, p: int, r: int, subgroup: Sequence[Sequence[int]]) -> list[np.ndarray] | None:
    """Sum-zero part of the permutation module on A / subgroup (integer matrices)."""
    sub = set(span(list(subgroup), p)) if subgroup else {tuple([0] * r)}
    reps: list[tuple[int, ...]] = []
    label: dict[tuple[int, ...], int] = {}
    for e in itertools.product(range(p), repeat=r):
        if e in label:
            continue
        idx = len(reps)
        reps.append(e)
        for s in sub:
            label[tuple((x + y) % p for x, y in zip(e, s))] = idx
    k = len(reps)
    if k == 1:
        return None
    acts = []
    for j in range(r):
        shift = tuple(1 if i == j else 0 for i in range(r))
        perm = [label[tuple((x + y) % p for x, y in zip(rep, shift))] for rep in reps]
        m = np.zeros((k - 1, k - 1), dtype=np.int64)
        # basis f_i = e_i - e_0 for i >= 1
        for i in range(1, k):
            if perm[i]:
                m[perm[i] - 1, i - 1] += 1
            if perm[0]:
                m[perm[0] - 1, i - 1] -= 1
        acts.append(m % ell)
    return acts


def random_module(
    ell: int, p: int, r: int, dim: int, rng: random.Random, trivial_weight: float = 0.15
) -> GroupRingModule:
    """A random module of dimension ``dim``: a direct sum of small blocks, then a random change of basis.

    For prime l the blocks run over all irreducible representations, so every
    module appears with positive probability. For composite l the blocks are
    sum-zero permutation modules on quotients of A and trivial lines.
    """
    eye_r = tuple(tuple(1 if i == j else 0 for i in range(r)) for j in range(r))
    chars = [c for c in lines(eye_r, p)]
    blocks: list[list[np.ndarray]] = []
    used = 0
    if is_prime(ell):
        irr = _irreducible_blocks(ell, p)
        while used < dim:
            fits = [b for b in irr if b.shape[0] <= dim - used]
            if not fits or rng.random() < trivial_weight:
                blocks.append([np.eye(1, dtype=np.int64)] * r)
                used += 1
                continue
            comp = rng.choice(fits)
            c = rng.choice(chars)
            scale = rng.randrange(1, p)
            blocks.append([_matpow(comp, c[j] * scale % p, ell) for j in range(r)])
            used += comp.shape[0]
    else:
        while used < dim:
            c = rng.choice(chars)
            sub = nullspace([list(c)], r, p)
            acts = _perm_kernel_block(ell, p, r, sub)
            if acts is None or acts[0].shape[0] > dim - used or rng.random() < trivial_weight:
                blocks.append([np.eye(1, dtype=np.int64)] * r)
                used += 1
            else:
                blocks.append(acts)
                used += acts[0].shape[0]
    acts = []
    for j in range(r):
        m = np.zeros((dim, dim), dtype=np.int64)
        at = 0
        for blk in blocks:
            k = blk[j].shape[0]
            m[at : at + k, at : at + k] = blk[j]
            at += k
        acts.append(m)
    base = GroupRingModule(ell, p, r, tuple(acts))
    P, P_inv = _random_invertible(dim, ell, rng)
    return base.conjugate(P, P_inv)


def _order_p_matrices(ell: int, p: int, n: int) -> list[np.ndarray]:
    grid = np.array(list(itertools.product(range(ell), repeat=n * n)), dtype=np.int64).reshape(-1, n, n)
    power = np.broadcast_to(np.eye(n, dtype=np.int64), grid.shape).copy()
    for _ in range(p):
        power = np.einsum("kij,kjl->kil", power, grid) % ell
    keep = np.all(power == np.eye(n, dtype=np.int64), axis=(1, 2))
    return [m for m in grid[keep]]


def _commuting_tuples(mats: list[np.ndarray], r: int, ell: int) -> Iterable[tuple[np.ndarray, ...]]:
    k = len(mats)
    comm = np.zeros((k, k), dtype=bool)
    for i in range(k):
        for j in range(i, k):
            c = np.array_equal(mats[i] @ mats[j] % ell, mats[j] @ mats[i] % ell)
            comm[i, j] = comm[j, i] = c

    def extend(prefix: list[int]):
        if len(prefix) == r:
            yield tuple(mats[i] for i in prefix)
            return
        for i in range(k):
            if all(comm[i, j] for j in prefix):
                yield from extend(prefix + [i])

    yield from extend([])


@dataclass
class VerificationReport:
    ell: int
    p: int
    r: int
    max_dim: int
    seed: int
    budget: int
    modes: dict[int, str] = field(default_factory=dict)
    instances_tested: int = 0
    faithful: int = 0
    non_faithful: int = 0
    sampled_faithful: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "parameters": {
                "ell": self.ell,
                "p": self.p,
                "r": self.r,
                "max_dim": self.max_dim,
                "seed": self.seed,
                "budget": self.budget,
                "modes": {str(k): v for k, v in self.modes.items()},
            },
            "instances_tested": self.instances_tested,
            "faithful": self.faithful,
            "non_faithful": self.non_faithful,
            "sampled_faithful": self.sampled_faithful,
            "failures": self.failures,
        }


def _check_one(m: GroupRingModule, report: VerificationReport, sampled: bool) -> None:
    report.instances_tested += 1
    try:
        if not general_identity_holds(m):
            raise IdentityFailure("projector-size identity with invariants failed")
        co = coinvariants(m)
        if co.faithful:
            idempotent_decomposition(m)
            report.faithful += 1
            report.sampled_faithful += sampled
        else:
            report.non_faithful += 1
    except IdentityFailure as exc:
        report.failures.append(
            {"dimension": m.dimension, "actions": [a.tolist() for a in m.actions], "error": str(exc)}
        )


def verify_decomposition_exhaustive(
    ell: int,
    p: int,
    r: int,
    max_dim: int,
    budget: int = 20000,
    samples: int = 400,
    seed: int = 0,
    mode: str = "auto",
) -> VerificationReport:
    """Check |M| = prod |e_i M| on every faithful module up to ``max_dim``.

    A dimension is enumerated exhaustively when both the matrix space and the
    set of commuting r-tuples fit in ``budget``; otherwise ``samples`` random
    modules of that dimension are drawn with the recorded seed. ``mode`` may
    force "sample" or "exhaustive" (the latter still subject to the budget).
    """
    if mode not in ("auto", "sample", "exhaustive"):
        raise InvalidParams(f"unknown mode {mode!r}")
    if max_dim > MAX_DIM:
        raise BudgetExceeded(f"max_dim = {max_dim} exceeds the cap {MAX_DIM}")
    if max_dim < 1:
        raise InvalidParams("max_dim must be positive")
    GroupRingModule.trivial(ell, p, r)  # parameter validation
    rng = random.Random(seed)
    report = VerificationReport(ell, p, r, max_dim, seed, budget)
    for n in range(1, max_dim + 1):
        fits = mode != "sample" and ell ** (n * n) <= budget
        mats = _order_p_matrices(ell, p, n) if fits else None
        if mats is not None and len(mats) ** r <= budget:
            report.modes[n] = "exhaustive"
            for acts in _commuting_tuples(mats, r, ell):
                _check_one(GroupRingModule(ell, p, r, acts), report, False)
        elif mode == "exhaustive":
            raise BudgetExceeded(f"dimension {n} does not fit the enumeration budget {budget}")
        else:
            report.modes[n] = f"sampled({samples})"
            for _ in range(samples):
                _check_one(random_module(ell, p, r, n, rng), report, True)
    return report
