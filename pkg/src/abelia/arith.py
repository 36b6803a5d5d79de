"""Small exact-arithmetic helpers shared across modules.

Linear algebra here is over F_p with vectors stored as tuples of ints in
``range(p)``; subspaces are represented by their reduced row echelon basis,
which makes them hashable and canonical.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from sympy import factorint as _factorint
from sympy import isprime as _isprime

Vector = tuple[int, ...]


def is_prime(n: int) -> bool:
    return bool(_isprime(n))


@lru_cache(maxsize=65536)
def factorint(n: int) -> dict[int, int]:
    return {int(q): int(e) for q, e in _factorint(n).items()}


def divisors(n: int) -> list[int]:
    divs = [1]
    for q, e in factorint(n).items():
        divs = [d * q**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def euler_phi(n: int) -> int:
    out = n
    for q in factorint(n):
        out = out // q * (q - 1)
    return out


def squarefree_kernel(d: int) -> int:
    """Signed squarefree part: d = kernel * m**2."""
    sign = -1 if d < 0 else 1
    out = 1
    for q, e in factorint(abs(d)).items():
        if e % 2:
            out *= q
    return sign * out


def coprime_part(ell: int, p: int) -> int:
    """Largest divisor of ``ell`` coprime to ``p``."""
    while ell % p == 0:
        ell //= p
    return ell


def iroot(n: int, k: int) -> int:
    """Exact floor of the k-th root of a nonnegative integer."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0 and k >= 1")
    if n < 2 or k == 1:
        return n
    # integer Newton iteration started above the root decreases monotonically
    x = 1 << (n.bit_length() // k + 1)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a | n)."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    # Jacobi symbol (a | n) for odd n > 0
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a - (a // b) * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


# ---------------------------------------------------------------------------
# F_p linear algebra


def rref(rows: Iterable[Sequence[int]], p: int) -> tuple[Vector, ...]:
    """Reduced row echelon basis of the row space over F_p."""
    mat = [[x % p for x in row] for row in rows]
    if not mat:
        return ()
    ncols = len(mat[0])
    pivot_row = 0
    for col in range(ncols):
        sel = next((i for i in range(pivot_row, len(mat)) if mat[i][col]), None)
        if sel is None:
            continue
        mat[pivot_row], mat[sel] = mat[sel], mat[pivot_row]
        inv = pow(mat[pivot_row][col], -1, p)
        mat[pivot_row] = [x * inv % p for x in mat[pivot_row]]
        for i in range(len(mat)):
            if i != pivot_row and mat[i][col]:
                f = mat[i][col]
                mat[i] = [(x - f * y) % p for x, y in zip(mat[i], mat[pivot_row])]
        pivot_row += 1
        if pivot_row == len(mat):
            break
    return tuple(tuple(row) for row in mat[:pivot_row])


def rank_mod(rows: Iterable[Sequence[int]], p: int) -> int:
    return len(rref(rows, p))


def nullspace(rows: Sequence[Sequence[int]], ncols: int, p: int) -> tuple[Vector, ...]:
    """RREF basis of {v : row . v = 0 for every row} in F_p^ncols."""
    basis = rref(rows, p)
    pivots = [next(j for j, x in enumerate(row) if x) for row in basis]
    free = [j for j in range(ncols) if j not in pivots]
    out = []
    for j in free:
        v = [0] * ncols
        v[j] = 1
        for row, piv in zip(basis, pivots):
            v[piv] = -row[j] % p
        out.append(tuple(v))
    return rref(out, p)


def span(basis: Sequence[Vector], p: int) -> list[Vector]:
    """All p**len(basis) vectors of the span, zero first."""
    if not basis:
        return []
    n = len(basis[0])
    out = []
    for coeffs in itertools.product(range(p), repeat=len(basis)):
        out.append(tuple(sum(c * b[i] for c, b in zip(coeffs, basis)) % p for i in range(n)))
    return out


def normalize(v: Sequence[int], p: int) -> Vector:
    """Scale so the first nonzero coordinate is 1 (canonical line representative)."""
    lead = next(x for x in v if x % p)
    inv = pow(lead, -1, p)
    return tuple(x * inv % p for x in v)


def lines(basis: Sequence[Vector], p: int) -> list[Vector]:
    """Canonical representatives of the 1-dimensional subspaces of span(basis)."""
    seen = set()
    for v in span(basis, p):
        if any(v):
            seen.add(normalize(v, p))
    return sorted(seen)


def subspaces(n: int, t: int, p: int) -> Iterator[tuple[Vector, ...]]:
    """Every t-dimensional subspace of F_p^n, as an RREF basis."""
    for pivots in itertools.combinations(range(n), t):
        slots = [
            (i, j)
            for i, piv in enumerate(pivots)
            for j in range(piv + 1, n)
            if j not in pivots
        ]
        for fill in itertools.product(range(p), repeat=len(slots)):
            rows = [[0] * n for _ in range(t)]
            for i, piv in enumerate(pivots):
                rows[i][piv] = 1
            for (i, j), x in zip(slots, fill):
                rows[i][j] = x
            yield tuple(tuple(r) for r in rows)


def gaussian_binomial(n: int, k: int, q: int) -> int:
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


# ---------------------------------------------------------------------------
# Integer Smith normal form (diagonal only)


def smith_diagonal(matrix: Sequence[Sequence[int]]) -> list[int]:
    """Invariant factors d1 | d2 | ... of an integer matrix (zeros included).

    The list has min(rows, cols) entries. Only the diagonal is returned, which
    is all that group-order and submodule-size computations need.
    """
    a = [list(row) for row in matrix]
    if not a or not a[0]:
        return []
    m, n = len(a), len(a[0])
    diag = []
    for k in range(min(m, n)):
        # locate the smallest nonzero entry in the trailing block
        while True:
            best = None
            for i in range(k, m):
                for j in range(k, n):
                    if a[i][j] and (best is None or abs(a[i][j]) < abs(a[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                diag.extend([0] * (min(m, n) - k))
                return _fix_divisibility(diag)
            i, j = best
            a[k], a[i] = a[i], a[k]
            for row in a:
                row[k], row[j] = row[j], row[k]
            piv = a[k][k]
            done = True
            for i in range(k + 1, m):
                q = a[i][k] // piv
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[k])]
                if a[i][k]:
                    done = False
            for j in range(k + 1, n):
                q = a[k][j] // piv
                if q:
                    for row in a:
                        row[j] -= q * row[k]
                if a[k][j]:
                    done = False
            if not done:
                continue
            bad = next(
                ((i, j) for i in range(k + 1, m) for j in range(k + 1, n) if a[i][j] % piv),
                None,
            )
            if bad is None:
                diag.append(abs(piv))
                break
            a[k] = [x + y for x, y in zip(a[k], a[bad[0]])]
    return _fix_divisibility(diag)


def _fix_divisibility(diag: list[int]) -> list[int]:
    # zeros sort last (they are "divisible by everything")
    nz = sorted(d for d in diag if d)
    # pairwise gcd/lcm sweep enforces d_i | d_{i+1}
    for i in range(len(nz)):
        for j in range(i + 1, len(nz)):
            g = math.gcd(nz[i], nz[j])
            nz[i], nz[j] = g, nz[i] * nz[j] // g
    return nz + [0] * (len(diag) - len(nz))
