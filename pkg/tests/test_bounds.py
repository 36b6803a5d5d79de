from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from abelia.bounds import (
    DeltaPolicy,
    Regime,
    bound_profile,
    delta_comparable,
    delta_ic_gamma_formula,
    delta_incomparable,
    delta_incomparable_both,
    delta_rank3_even,
    eta0,
    eta_of_extension,
    final_delta,
    grh_crossover_rank,
    grh_delta,
    over_k,
    saving_table,
)
from abelia.errors import EtaBelowThreshold, InvalidParams, RegimeMismatch, WrongShape
from abelia.fields import construct_extension, quadratic_compositum

odd_ells = st.integers(3, 999).filter(lambda n: n % 2)
odd_primes = st.sampled_from([3, 5, 7, 11, 13])


def _delta(ell, d):
    return Fraction(1, 2 * ell * (d - 1))


def test_threshold_values():
    assert eta0(3, 2, 2) == 48
    assert eta0(3, 2, 3) == 6
    assert eta0(2, 3, 2) == 12
    assert eta0(3, 2, 2, over_k()) == 210


def test_saving_values():
    assert delta_comparable(1, 3, 2) == Fraction(1, 24)
    assert delta_rank3_even(1, 3, Regime.COMPARABLE) == Fraction(1, 108)
    assert final_delta(3, 2, 3).delta == Fraction(1, 468)
    assert final_delta(5, 2, 2).delta == Fraction(1, 1620)
    assert final_delta(2, 3, 2).delta == Fraction(1, 312)
    assert final_delta(3, 2, 2, over_k()).delta == Fraction(1, 2532)


@given(odd_ells)
def test_even_closed_forms(ell):
    assert final_delta(ell, 2, 2).delta == Fraction(1, 64 * ell**2 + 4 * ell)
    for r in (3, 4, 9):
        assert final_delta(ell, 2, r).delta == Fraction(1, 48 * ell**2 + 12 * ell)


@given(st.integers(2, 500), odd_primes)
def test_odd_closed_form(ell, p):
    if ell % p == 0:
        return
    d = _delta(ell, p)
    e0 = Fraction(2 * ell * p, p - 2)
    assert eta0(ell, p) == e0
    assert final_delta(ell, p, 2).delta == d / (p * (e0 + 1))


@given(odd_ells, st.sampled_from([2, 3, 5]))
def test_over_k_closed_form(ell, p):
    if ell % p == 0:
        return
    d = _delta(ell, p)
    assert final_delta(ell, p, 2, over_k()).delta == d * d / (p * (35 + d))


@given(st.integers(3, 300), st.fractions(1, 10**4))
def test_regimes_and_profile(ell, eta):
    if ell % 2 == 0:
        return
    prof = bound_profile(ell, 2, 3, eta)
    e0 = eta0(ell, 2, 3)
    assert prof.regime == (Regime.COMPARABLE if eta <= e0 else Regime.INCOMPARABLE)
    assert 0 < prof.delta <= _delta(ell, 2) / 2
    with pytest.raises(RegimeMismatch):
        delta_rank3_even(e0 + 1, ell, Regime.COMPARABLE)


@given(st.fractions(1, 10**5), st.fractions(1, 10**5))
def test_incomparable_saving_grows_with_eta(a, b):
    lo, hi = sorted((a, b))
    e0 = eta0(5, 3)
    if lo <= e0:
        return
    assert delta_incomparable(lo, 5, 3) <= delta_incomparable(hi, 5, 3) < _delta(5, 3) / 3


def test_incomparable_threshold_strictness():
    e0 = eta0(3, 2, 2)
    with pytest.raises(EtaBelowThreshold):
        delta_incomparable(e0, 3, 2)
    assert delta_incomparable(e0, 3, 2, strict=False) == delta_ic_gamma_formula(e0, Fraction(1, 6), Fraction(1, 2), 2)


def test_incomparable_both_reports_two_values():
    both = delta_incomparable_both(100, 2, 3, 19)
    assert both["plain"] == Fraction(25, 606)
    assert both["gamma_corrected"] == delta_ic_gamma_formula(Fraction(100), Fraction(1, 8), Fraction(19), 3)


def test_float_eta_switches_to_float():
    assert isinstance(delta_comparable(1.5, 3, 2), float)
    assert isinstance(delta_comparable(Fraction(3, 2), 3, 2), Fraction)


def test_epsilon_policy_scales_delta():
    half = DeltaPolicy(Fraction(1, 2))
    assert half.delta(3, 2) == Fraction(1, 12)
    assert eta0(3, 2, 3, policy=half) == 12
    with pytest.raises(InvalidParams):
        DeltaPolicy(1)


def test_final_delta_reduction_and_errors():
    assert final_delta(6, 2, 2).ell_reduced == 3
    assert final_delta(6, 2, 2).delta == final_delta(3, 2, 2).delta
    with pytest.raises(InvalidParams):
        final_delta(8, 2, 3)
    with pytest.raises(InvalidParams):
        final_delta(3, 4, 2)
    with pytest.raises(InvalidParams):
        eta0(1, 2)


def test_cubic_alternative_surfaced():
    fd = final_delta(3, 2, 3)
    assert [a.delta for a in fd.alternatives] == [Fraction(1, 3)]
    assert not final_delta(5, 2, 3).alternatives
    assert not final_delta(3, 2, 2).alternatives


@pytest.mark.parametrize("ell,p,r0", [(3, 2, 7), (2, 3, 4), (5, 2, 7), (3, 5, 4)])
def test_crossover_matches_integer_scan(ell, p, r0):
    assert grh_crossover_rank(ell, p).r0 == r0
    scan = next(r for r in range(2, 100) if 2 * ell * (p**r - 1) >= final_delta(ell, p, r).delta.denominator)
    assert scan == r0


def test_crossover_with_alternative():
    cx = grh_crossover_rank(3, 2, use_alternative=True)
    assert cx.r0 == 3 and cx.delta == Fraction(1, 3) and cx.note
    assert grh_delta(3, 2, 3) == Fraction(1, 42)


def test_saving_table_rows():
    rows = saving_table([3, 4], [2, 3])
    by_key = {(row["ell"], row["p"]): row for row in rows}
    assert by_key[(4, 2)]["source"] == "genus-theory"
    assert by_key[(3, 3)]["source"] == "genus-theory"
    assert by_key[(3, 2)]["delta_final"] == Fraction(1, 468)
    assert by_key[(3, 2)]["r0"] == 7
    assert by_key[(3, 2)]["rank3_beats_rank2"] is True
    assert by_key[(4, 3)]["rank2_closed_form"] is None


def test_eta_of_extension():
    ext = quadratic_compositum([-3, 5])
    eta = eta_of_extension(ext)
    assert (eta.numerator_disc, eta.denominator_disc) == (5, 3)
    assert eta.at_most(Fraction(3, 2)) and not eta.at_most(Fraction(1))
    cubic = eta_of_extension(construct_extension(63, [8, 55], 3, 2))
    assert (cubic.numerator_disc, cubic.denominator_disc) == (81, 49)
    rank3 = eta_of_extension(quadratic_compositum([-3, 5, -4]))
    assert rank3.shape == "rank3"
    with pytest.raises(WrongShape):
        eta_of_extension(quadratic_compositum([-3, 5, -4, 13]))


def test_incomparable_example_values():
    # eta = 2 eta0 with l = p = 3 (no reduction at this level)
    assert eta0(3, 3) == 18
    assert delta_incomparable(36, 3, 3) == Fraction(1, 37)


@given(st.integers(2, 2000))
def test_rank3_incomparable_at_threshold(ell):
    assert delta_rank3_even(2 * ell, ell, Regime.INCOMPARABLE) == Fraction(1, 4 * ell + 1)
    assert delta_rank3_even(2 * ell, ell, Regime.COMPARABLE) == Fraction(1, 48 * ell**2 + 12 * ell)


def test_empty_table():
    assert saving_table([], [2]) == []
