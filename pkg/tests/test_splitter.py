from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermat_periods.checks import check_splits, reference_summands
from fermat_periods.hodge import f_infinity
from fermat_periods.numerics import QuadraticNumber
from fermat_periods.reference import PLANE_FIELD, SUMMAND_CHARGES, reference_charges
from fermat_periods.splitter import (
    Charge,
    NoSplitFound,
    Summand,
    assemble_split,
    attempt_deeper_split,
    charge_plane,
    eigen_sort,
    expected_pairings,
    field_candidates,
    galois_conjugate,
    plane_contains,
    report_to_json,
    tate_twist,
    verify_charge,
)

small = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@st.composite
def charges(draw, d=5, size=4):
    coords = [QuadraticNumber(draw(small), draw(small), d) for _ in range(size)]
    if not any(coords):
        coords[0] = QuadraticNumber(1, 0, d)
    return Charge(tuple(coords), d)


# ---------------------------------------------------------------- charge algebra


@settings(max_examples=100, deadline=None)
@given(charges())
def test_galois_conjugation_is_an_involution(rho):
    assert galois_conjugate(galois_conjugate(rho)) == rho


@settings(max_examples=100, deadline=None)
@given(charges())
def test_integer_form_reconstructs(rho):
    A, B, L = rho.integer_form()
    assert L > 0
    back = tuple(QuadraticNumber(Fraction(a, L), Fraction(b, L), rho.d) for a, b in zip(A, B))
    assert back == rho.coords
    assert rho.height() >= 1


@settings(max_examples=100, deadline=None)
@given(charges())
def test_normalized_and_string_round_trip(rho):
    norm = rho.normalized()
    assert next(c for c in norm.coords if c) == 1
    assert plane_contains([rho], norm)
    assert Charge.from_strings(rho.to_strings(), rho.d) == rho


def test_zero_charge_rejected():
    with pytest.raises(ValueError):
        Charge((Fraction(0), Fraction(0)))


def test_field_candidates():
    assert field_candidates(3) == [1, 5]
    assert field_candidates(4) == [1]
    assert field_candidates(6) == [1, 2]
    assert field_candidates(8) == [1, 5]
    assert field_candidates(10) == [1, 3]
    assert field_candidates(3, 7) == [7, 1, 5]
    assert field_candidates(3, 5) == [5, 1]


def test_expected_pairings():
    assert expected_pairings(3, 1) == (0,)
    assert expected_pairings(3, 2) == (1, 2)
    assert expected_pairings(4, 3) == (2,)
    assert expected_pairings(10, 3) == (2,)


# ---------------------------------------------------------------- planes and splits


@pytest.mark.parametrize("n", [3, 4, 6])
def test_reference_charges_lie_in_found_planes(n, periods):
    data = periods(n)
    check = check_splits(n, data.periods, data.ctx)
    assert check.passed, check.detail


@pytest.mark.parametrize("n", [3, 4])
def test_assembled_split_matches_reference(n, periods):
    data = periods(n)
    report = assemble_split(n, data.periods, data.ctx)
    assert report.unresolved is None
    assert report.dimension == n + 1
    assert all(r["passed"] for r in report.residuals.values())
    ref = reference_charges(n)
    for s in report.summands:
        idx = SUMMAND_CHARGES[n][s.level]
        for k in idx:
            assert plane_contains(list(s.basis), ref[k])
    payload = report_to_json(report, data.ctx, digits=20)
    assert payload["n"] == n


def test_hodge_tate_class_closes_the_quartic_split(periods):
    data = periods(4)
    report = assemble_split(4, data.periods, data.ctx)
    last = report.summands[-1]
    assert last.dimension == 1 and last.level == 3
    assert last.hodge_type == (2, 2)
    assert plane_contains([last.basis[0]], reference_charges(4)[5])


def test_unknown_field_finds_nothing(periods):
    data = periods(3)
    with pytest.raises(NoSplitFound):
        charge_plane(3, 1, 7, data.periods, 10**4, data.ctx)
    report = assemble_split(3, data.periods, data.ctx, candidates=[7])
    assert report.summands == []
    assert report.unresolved["dimension"] == 4


@pytest.mark.parametrize("n", [3, 6])
def test_eigen_sort_ignores_input_order(n, periods):
    data = periods(n)
    d = PLANE_FIELD[n]
    a, b = charge_plane(n, 1, d, data.periods, 10**6, data.ctx)
    finf = f_infinity(n)
    first = eigen_sort(a, b, n, data.periods, 1, data.ctx, finf)
    second = eigen_sort(b, a, n, data.periods, 1, data.ctx, finf)
    for x, y in zip(first, second):
        assert plane_contains([x], y)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_quotients_are_purely_imaginary(n, periods):
    data = periods(n)
    mp = data.ctx.mp
    for s in reference_summands(n, data.periods, data.ctx):
        if s.dimension == 2:
            assert mp.fabs(mp.re(s.quotient)) < data.ctx.tolerance * mp.fabs(s.quotient)
            assert mp.fabs(mp.im(s.c_plus)) < data.ctx.tolerance * mp.fabs(s.c_plus)


def test_verify_charge_rejects_wrong_level(periods):
    data = periods(3)
    rho = reference_charges(3)[1]
    assert verify_charge(rho, data.periods, 1, data.ctx).passed
    assert not verify_charge(rho, data.periods, 2, data.ctx).passed


def test_tate_twist_parity(periods):
    data = periods(3)
    s = reference_summands(3, data.periods, data.ctx)[0]
    two_pi_i = data.ctx.pi2i()
    assert tate_twist(s, 1, data.ctx) == two_pi_i * s.c_minus
    assert tate_twist(s, 2, data.ctx) == two_pi_i**2 * s.c_plus
    with pytest.raises(ValueError):
        tate_twist(s, 4, data.ctx)
    with pytest.raises(ValueError):
        tate_twist(Summand(3, 1, 5, (s.basis[0],), c_plus=s.c_plus), 1, data.ctx)


def test_deeper_split_is_reported_not_required(periods):
    data = periods(8)
    outcomes = attempt_deeper_split(8, data.periods, data.ctx, max_height=10**8)
    assert outcomes and all(o["level"] == 4 for o in outcomes)
    for o in outcomes:
        assert isinstance(o["found"], bool)
        if o["found"]:
            assert "verified" in o
    with pytest.raises(ValueError):
        attempt_deeper_split(6, data.periods, data.ctx)


def test_galois_conjugates_span_second_plane(periods):
    data = periods(3)
    a, b = charge_plane(3, 1, 5, data.periods, 10**4, data.ctx)
    second = charge_plane(3, 2, 5, data.periods, 10**4, data.ctx)
    for rho in (galois_conjugate(a), galois_conjugate(b)):
        assert plane_contains(list(second), rho)
    ref = reference_charges(3)
    assert galois_conjugate(ref[1]) == ref[3] and galois_conjugate(ref[2]) == ref[4]


@pytest.mark.parametrize("n,j,rational", [(6, 2, True), (6, 3, False), (10, 2, True), (10, 3, True)])
def test_rational_planes(n, j, rational, periods):
    data = periods(n)
    height = 10**6 if n == 6 else 10**12
    if not rational:
        with pytest.raises(NoSplitFound):
            charge_plane(n, j, 1, data.periods, height, data.ctx)
        return
    a, b = charge_plane(n, j, 1, data.periods, height, data.ctx)
    assert a.d == b.d == 1
    for k in SUMMAND_CHARGES[n][j]:
        assert plane_contains([a, b], reference_charges(n)[k])
