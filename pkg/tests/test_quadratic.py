import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from abelia.errors import BoundExceeded, CacheError, EvenEllRealField, NotFundamental, PerfectSquare
from abelia.quadratic import (
    ClassGroupCache,
    QuadraticForm,
    class_group,
    class_number,
    compose,
    cycle,
    ell_torsion,
    fundamental_discriminant,
    genus_two_rank,
    is_fundamental,
    power,
    principal_form,
    reduce,
    reduced_forms,
)

from conftest import FUNDAMENTAL

NEGATIVE = [d for d in FUNDAMENTAL if -3000 <= d < 0]
POSITIVE = [d for d in FUNDAMENTAL if 0 < d <= 3000]


def _brute_class_number(D):
    # count (a, b, c) with b^2 - 4ac = D, |b| <= a <= c, b >= 0 on the boundary, primitive
    h = 0
    for a in range(1, math.isqrt(-D // 3) + 1):
        for b in range(-a + 1, a + 1):
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if math.gcd(a, math.gcd(b, c)) == 1:
                h += 1
    return h


@pytest.mark.parametrize(
    "D,h",
    [(-3, 1), (-4, 1), (-7, 1), (-8, 1), (-15, 2), (-20, 2), (-23, 3), (-47, 5), (-115, 2), (-163, 1), (-971, 15)],
)
def test_known_imaginary_class_numbers(D, h):
    assert class_number(D) == h
    assert _brute_class_number(D) == h


@pytest.mark.parametrize("D,h_plus", [(5, 1), (8, 1), (12, 2), (13, 1), (40, 2), (60, 4), (229, 3), (145, 4)])
def test_known_narrow_class_numbers(D, h_plus):
    assert class_number(D) == h_plus


@pytest.mark.parametrize("D,factors", [(-56, (4,)), (-84, (2, 2)), (-260, (2, 4)), (-420, (2, 2, 2))])
def test_invariant_factors(D, factors):
    assert class_group(D).invariant_factors == factors


@given(st.sampled_from(NEGATIVE))
def test_imaginary_order_matches_brute_force(D):
    assert class_number(D) == _brute_class_number(D) == len(reduced_forms(D))


@given(st.sampled_from(POSITIVE))
def test_real_order_counts_cycles(D):
    seen, cycles = set(), 0
    for f in reduced_forms(D):
        if f not in seen:
            cycles += 1
            seen.update(cycle(f))
    assert class_number(D) == cycles


@given(st.sampled_from(NEGATIVE + POSITIVE))
def test_two_rank_from_genus_theory(D):
    group = class_group(D)
    assert sum(1 for n in group.invariant_factors if n % 2 == 0) == genus_two_rank(D)


@given(st.sampled_from(NEGATIVE + POSITIVE), st.sampled_from([3, 5, 7, 9, 15]))
def test_torsion_divides_order(D, ell):
    t = ell_torsion(D, ell)
    group = class_group(D)
    assert group.order % t == 0
    assert t == math.prod(math.gcd(n, ell) for n in group.invariant_factors)


@given(st.sampled_from(NEGATIVE))
def test_composition_group_law(D):
    forms = reduced_forms(D)
    one = reduce(principal_form(D))
    h = len(forms)
    for f in forms[:6]:
        assert compose(f, one) == reduce(f)
        assert power(f, h) == one
        assert compose(f, f.mirror()) == one
        for g in forms[:4]:
            assert compose(f, g) == compose(g, f)
            assert compose(f, g).disc == D


def test_fundamental_discriminants():
    assert fundamental_discriminant(-1) == -4
    assert fundamental_discriminant(12) == 12
    assert fundamental_discriminant(-23 * 4) == -23
    assert fundamental_discriminant(18) == 8
    with pytest.raises(PerfectSquare):
        fundamental_discriminant(49)
    assert [d for d in range(-20, 0) if is_fundamental(d)] == [-20, -19, -15, -11, -8, -7, -4, -3]


def test_errors():
    with pytest.raises(NotFundamental):
        class_group(-12)
    with pytest.raises(BoundExceeded):
        class_group(-1000003, bound=10**6)
    with pytest.raises(EvenEllRealField):
        ell_torsion(5, 2)
    assert ell_torsion(-84, 2) == 4


def test_reduce_is_idempotent_and_preserves_disc():
    f = QuadraticForm(17, 31, 15)
    g = reduce(f)
    assert g.disc == f.disc and reduce(g) == g


def test_cache_round_trip(tmp_path):
    path = tmp_path / "cg.jsonl"
    cache = ClassGroupCache(path)
    assert cache.ell_torsion(-23, 3) == 3
    assert cache.ell_torsion(229, 3) == 3
    cache.get(-23)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0]) == {"D": -23, "narrow": False, "factors": [3]}
    again = ClassGroupCache(path)
    assert len(again) == 2 and again.get(229).invariant_factors == (3,)


@pytest.mark.parametrize(
    "line", ["not json", '{"D": -23}', '{"D": -23, "narrow": true, "factors": [3]}', '{"D": -84, "narrow": false, "factors": [4, 2]}']
)
def test_cache_rejects_bad_records(tmp_path, line):
    path = tmp_path / "cg.jsonl"
    path.write_text(line + "\n")
    with pytest.raises(CacheError):
        ClassGroupCache(path)
