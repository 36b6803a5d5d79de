import itertools
import math

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from abelia.arith import (
    coprime_part,
    divisors,
    euler_phi,
    ext_gcd,
    gaussian_binomial,
    iroot,
    kronecker,
    lines,
    nullspace,
    rank_mod,
    rref,
    smith_diagonal,
    squarefree_kernel,
    subspaces,
)


@given(st.integers(0, 10**40), st.integers(1, 7))
def test_iroot_brackets_the_root(n, k):
    x = iroot(n, k)
    assert x**k <= n < (x + 1) ** k


def test_iroot_rejects_negative():
    with pytest.raises(ValueError):
        iroot(-1, 2)


@given(st.integers(-500, 500), st.integers(1, 999).filter(lambda n: n % 2))
def test_kronecker_matches_jacobi_for_odd_moduli(a, n):
    assert kronecker(a, n) == sympy.jacobi_symbol(a % n, n)


@given(st.integers(-300, 300), st.integers(-300, 300), st.integers(-300, 300))
def test_kronecker_is_multiplicative_in_the_top(a, b, n):
    if n == 0:
        return
    assert kronecker(a * b, n) == kronecker(a, n) * kronecker(b, n)


def test_kronecker_at_two():
    assert [kronecker(a, 2) for a in (1, 3, 5, 7, 2)] == [1, -1, -1, 1, 0]
    assert kronecker(-1, -1) == -1


@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
def test_ext_gcd_bezout(a, b):
    g, x, y = ext_gcd(a, b)
    assert g == math.gcd(a, b)
    assert a * x + b * y == g


@given(st.integers(1, 5000))
def test_euler_phi_and_divisors(n):
    assert euler_phi(n) == sum(1 for k in range(1, n + 1) if math.gcd(k, n) == 1)
    assert divisors(n) == [d for d in range(1, n + 1) if n % d == 0]


@given(st.integers(-10**5, 10**5).filter(bool))
def test_squarefree_kernel(d):
    k = squarefree_kernel(d)
    m2 = d // k
    assert d % k == 0 and m2 > 0 and math.isqrt(m2) ** 2 == m2
    assert all(e == 1 for e in sympy.factorint(abs(k)).values())


def test_coprime_part():
    assert coprime_part(12, 2) == 3
    assert coprime_part(8, 2) == 1
    assert coprime_part(45, 3) == 5


def _count_subspaces(n, t, p):
    return sum(1 for _ in subspaces(n, t, p))


@pytest.mark.parametrize("n,t,p", [(2, 1, 2), (3, 1, 2), (3, 2, 2), (3, 1, 3), (4, 2, 2), (2, 1, 5)])
def test_subspace_count_is_gaussian_binomial(n, t, p):
    assert _count_subspaces(n, t, p) == gaussian_binomial(n, t, p)


def test_gaussian_binomial_values():
    assert gaussian_binomial(3, 1, 2) == 7
    assert gaussian_binomial(4, 2, 2) == 35
    assert gaussian_binomial(5, 0, 3) == 1
    assert gaussian_binomial(2, 3, 2) == 0


@st.composite
def matrices_mod(draw, p):
    rows = draw(st.integers(1, 4))
    cols = draw(st.integers(1, 4))
    return [[draw(st.integers(0, p - 1)) for _ in range(cols)] for _ in range(rows)]


@given(matrices_mod(3))
def test_rank_nullity_mod_3(m):
    cols = len(m[0])
    ns = nullspace(m, cols, 3)
    assert rank_mod(m, 3) + len(ns) == cols
    for v in ns:
        assert all(sum(a * b for a, b in zip(row, v)) % 3 == 0 for row in m)


@given(matrices_mod(2))
def test_rref_preserves_row_space(m):
    basis = rref(m, 2)
    for row in m:
        assert rank_mod(list(basis) + [row], 2) == len(basis)


def test_lines_count():
    eye = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    assert len(lines(eye, 2)) == 7
    assert len(lines(eye[:2], 3)) == 4


def _brute_elementary_divisor_product(m):
    # the product of the first k invariant factors is the gcd of k x k minors
    rows, cols = len(m), len(m[0])
    out = []
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for rs in itertools.combinations(range(rows), k):
            for cs in itertools.combinations(range(cols), k):
                g = math.gcd(g, int(sympy.Matrix([[m[i][j] for j in cs] for i in rs]).det()))
        out.append(g)
    return out


@given(st.lists(st.lists(st.integers(-9, 9), min_size=3, max_size=3), min_size=1, max_size=3))
def test_smith_diagonal_matches_minors(m):
    diag = smith_diagonal(m)
    dets = _brute_elementary_divisor_product(m)
    prods = list(itertools.accumulate(diag, lambda a, b: a * b))
    # compare up to the rank
    k = sum(1 for d in dets if d)
    assert [abs(x) for x in prods[:k]] == dets[:k]
    for a, b in zip(diag, diag[1:]):
        if a:
            assert b % a == 0
