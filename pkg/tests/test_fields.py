import math
import random

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from abelia.arith import gaussian_binomial
from abelia.errors import NotAUnit, NotMinimalConductor, RankOutOfRange, WrongQuotient, WrongShape
from abelia.fields import (
    construct_extension,
    disc_lower_bound_check,
    extensions_with_conductor,
    parse_record,
    quadratic_compositum,
    rank3_layout,
    subfield_csv_rows,
    verify_disc_product,
)
from abelia.quadratic import fundamental_discriminant

from conftest import FUNDAMENTAL, random_extension, random_multiquadratic

SMALL_FUNDAMENTAL = [d for d in FUNDAMENTAL if abs(d) <= 200]


@st.composite
def disc_pairs(draw):
    a = draw(st.sampled_from(SMALL_FUNDAMENTAL))
    b = draw(st.sampled_from(SMALL_FUNDAMENTAL).filter(lambda d: d != a))
    return a, b


@given(disc_pairs())
def test_biquadratic_discriminant_oracle(pair):
    a, b = pair
    ext = quadratic_compositum([a, b])
    third = fundamental_discriminant(a * b)
    assert ext.discriminant == abs(a * b * third)
    assert sorted(k.signed_disc for k in ext.subfields(1)) == sorted([a, b, third])
    assert ext.modulus == math.lcm(abs(a), abs(b))


@given(disc_pairs(), st.sampled_from(list(sympy.primerange(3, 400))))
def test_quadratic_splitting_matches_kronecker(pair, q):
    ext = quadratic_compositum(list(pair))
    for k in ext.subfields(1):
        if k.signed_disc % q == 0:
            assert k.splits(q) is None
        else:
            assert k.splits(q) == (sympy.jacobi_symbol(k.signed_disc % q, q) == 1)


@given(disc_pairs(), st.sampled_from(list(sympy.primerange(3, 400))))
def test_frobenius_identity_iff_split_everywhere(pair, q):
    ext = quadratic_compositum(list(pair))
    frob = ext.frobenius(q)
    if frob.ramified:
        return
    assert frob.is_identity == all(k.splits(q) for k in ext.subfields(1))


@pytest.mark.parametrize("f", [7, 13, 19, 31, 37])
def test_cyclic_cubic_prime_conductor(f):
    # the unique cubic field of prime conductor f: q splits iff q is a cube mod f
    (ext,) = extensions_with_conductor(f, 3, 1)
    assert ext.discriminant == f * f
    for q in sympy.primerange(2, 300):
        if q == f:
            continue
        assert ext.subfields(1)[0].splits(q) == (pow(q, (f - 1) // 3, f) == 1)


def test_record_round_trip_and_empty_kernel():
    ext = parse_record("f=8;H=;p=2;r=2")
    assert ext.discriminant == 256
    assert sorted(k.signed_disc for k in ext.subfields(1)) == [-8, -4, 8]
    assert parse_record(ext.record()) == ext
    cubic = construct_extension(63, [8, 55], 3, 2)
    assert parse_record(cubic.record()) == cubic
    assert [k.disc for k in cubic.subfields(1)] == [49, 81, 3969, 3969]


@pytest.mark.parametrize(
    "args,exc",
    [
        ((15, [3], 2, 2), NotAUnit),
        ((63, [], 3, 2), WrongQuotient),
        ((16, [], 2, 2), WrongQuotient),
        ((16, [9], 2, 2), NotMinimalConductor),
    ],
)
def test_construction_errors(args, exc):
    with pytest.raises(exc):
        construct_extension(*args)


def test_subfield_degree_range():
    ext = quadratic_compositum([-3, 5])
    with pytest.raises(RankOutOfRange):
        ext.subfields(3)


def test_subfield_counts(rng):
    for p, r in ((2, 2), (2, 3), (3, 2)):
        ext = random_extension(rng, p, r, 3000)
        for t in range(1, r + 1):
            assert len(ext.subfields(t)) == gaussian_binomial(r, t, p)
        assert ext.subfields(r)[0].disc == ext.discriminant


def test_subfields_sorted_by_discriminant(rng):
    ext = random_multiquadratic(rng, 3, 5000)
    discs = [k.disc for k in ext.subfields(1)]
    assert discs == sorted(discs)


@given(st.integers(0, 10**6))
def test_disc_product_all_layers_property(seed):
    rng = random.Random(seed)
    p, r = rng.choice([(2, 2), (2, 3), (3, 2)])
    ext = random_extension(rng, p, r, 2000)
    assert verify_disc_product(ext, all_layers=True).passed


def test_rank3_layout_shape():
    ext = quadratic_compositum([-3, 5, -4])
    lay = rank3_layout(ext)
    assert len(lay.inside) == 3 and len(lay.outside) == 4
    assert all(lay.smallest_quartic.contains(k) for k in lay.inside)
    assert not any(lay.smallest_quartic.contains(k) for k in lay.outside)
    assert lay.smallest_quartic.disc == min(m.disc for m in ext.subfields(2))
    with pytest.raises(WrongShape):
        rank3_layout(quadratic_compositum([-3, 5]))


def test_disc_lower_bounds(rng):
    for p, r in ((2, 2), (2, 3), (3, 2)):
        assert disc_lower_bound_check(random_extension(rng, p, r, 3000)).passed


def test_subfield_rows():
    rows = subfield_csv_rows(construct_extension(63, [8, 55], 3, 2))
    assert {row["degree"] for row in rows} >= {3}
    assert rows[0]["conductor"] == 7
