from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermat_periods.numerics import (
    DEFAULT_DIGITS,
    PrecisionContext,
    QuadraticNumber,
    TruncatedSeries,
    incomplete_gamma_int,
    is_zero,
    qvec,
    squarefree_part,
    zeta_odd,
)

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=40)
fields = st.sampled_from([1, 2, 3, 5, 6, 7])


@st.composite
def quadratic(draw, d=None):
    d = d if d is not None else draw(fields)
    return QuadraticNumber(draw(rationals), draw(rationals) if d > 1 else 0, d)


def test_context_defaults_and_tolerance():
    ctx = PrecisionContext.for_n(4)
    assert ctx.decimal_digits == DEFAULT_DIGITS[4] == 150
    assert ctx.tol_exponent == 135
    assert ctx.tolerance == ctx.mp.mpf(10) ** -135
    assert ctx.raised(20).decimal_digits == 170


@pytest.mark.parametrize("digits,guard", [(10, 5), (60, 0), (60, 60)])
def test_context_rejects_bad_precision(digits, guard):
    with pytest.raises(ValueError):
        PrecisionContext(digits, guard)


def test_contexts_do_not_share_precision():
    a, b = PrecisionContext(40), PrecisionContext(90)
    assert a.mp.dps == 40 and b.mp.dps == 90
    assert len(str(b.mp.pi)) > len(str(a.mp.pi))


@pytest.mark.parametrize("m", [3, 5, 7, 9, 11])
def test_zeta_odd_against_mpmath(m):
    ctx = PrecisionContext(200)
    with mpmath.workdps(230):
        want = mpmath.zeta(m)
    assert abs(zeta_odd(m, ctx) - want) < ctx.mp.mpf(10) ** -195


def _zeta_euler_maclaurin(m: int, dps: int):
    """Independent oracle: direct sum to N plus the Euler-Maclaurin tail."""
    with mpmath.workdps(dps + 20):
        N = 60
        s = mpmath.fsum(mpmath.mpf(k) ** -m for k in range(1, N))
        s += mpmath.mpf(N) ** (1 - m) / (m - 1) + mpmath.mpf(N) ** -m / 2
        for j in range(1, 40):
            rising = mpmath.rf(m, 2 * j - 1)
            s += mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j) * rising * mpmath.mpf(N) ** (-m - 2 * j + 1)
        return s


@pytest.mark.parametrize("m", [3, 5])
def test_zeta_odd_against_euler_maclaurin(m):
    ctx = PrecisionContext(80)
    assert abs(zeta_odd(m, ctx) - _zeta_euler_maclaurin(m, 80)) < ctx.mp.mpf(10) ** -75


def test_zeta_odd_rejects_even_and_small():
    ctx = PrecisionContext(40)
    for m in (2, 4, 1, 0):
        with pytest.raises(ValueError):
            zeta_odd(m, ctx)


@pytest.mark.parametrize("s", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("x", ["0", "0.3", "2.5", "17", "120.75"])
def test_incomplete_gamma_against_mpmath(s, x):
    ctx = PrecisionContext(80)
    got = incomplete_gamma_int(s, ctx.mp.mpf(x), ctx)
    with mpmath.workdps(100):
        want = mpmath.gammainc(s, mpmath.mpf(x))
    assert abs(got - want) <= ctx.mp.mpf(10) ** -75 * max(1, abs(want))


def test_incomplete_gamma_against_quadrature():
    ctx = PrecisionContext(40)
    with mpmath.workdps(50):
        want = mpmath.quad(lambda t: t**3 * mpmath.exp(-t), [mpmath.mpf("1.7"), mpmath.inf])
    assert abs(incomplete_gamma_int(4, ctx.mp.mpf("1.7"), ctx) - want) < ctx.mp.mpf(10) ** -35


def test_incomplete_gamma_domain():
    ctx = PrecisionContext(40)
    with pytest.raises(ValueError):
        incomplete_gamma_int(0, 1, ctx)
    with pytest.raises(ValueError):
        incomplete_gamma_int(2, -1, ctx)


def test_squarefree_part():
    assert [squarefree_part(k) for k in (1, 2, 4, 8, 12, 18, 45, 50)] == [1, 2, 1, 2, 3, 2, 5, 2]


def test_is_zero_uses_scale():
    ctx = PrecisionContext(40)
    tiny = ctx.tolerance / 2
    assert is_zero(tiny, ctx)
    assert not is_zero(ctx.tolerance * 2, ctx)
    assert is_zero(ctx.tolerance * 2, ctx, scale=10)


# ---------------------------------------------------------------- quadratic numbers


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_quadratic_field_axioms(data):
    d = data.draw(fields)
    x, y, z = (data.draw(quadratic(d)) for _ in range(3))
    assert (x + y) + z == x + (y + z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x
    assert x - x == 0
    if x:
        assert x * x.inverse() == 1
        assert (y / x) * x == y


@settings(max_examples=100, deadline=None)
@given(quadratic())
def test_quadratic_norm_and_conjugate(x):
    assert x.conjugate().conjugate() == x
    assert (x * x.conjugate()).is_rational()
    assert (x * x.conjugate()).a == x.norm()


@settings(max_examples=100, deadline=None)
@given(quadratic())
def test_quadratic_string_round_trip(x):
    y = QuadraticNumber.parse(str(x), x.d if x.b else None)
    assert y == x


def test_quadratic_numeric_value():
    ctx = PrecisionContext(50)
    x = QuadraticNumber(Fraction(5, 2), Fraction(-1, 2), 5)
    assert abs(x.numeric(ctx) - (ctx.mp.mpf(5) - ctx.mp.sqrt(5)) / 2) < ctx.tolerance


def test_quadratic_rejects_mixed_fields():
    with pytest.raises(ValueError):
        QuadraticNumber(0, 1, 2) + QuadraticNumber(0, 1, 3)
    with pytest.raises(ValueError):
        QuadraticNumber(1, 1, 4)


def test_quadratic_parse_forms():
    assert QuadraticNumber.parse("-3/2") == Fraction(-3, 2)
    assert QuadraticNumber.parse("sqrt(2)") == QuadraticNumber(0, 1, 2)
    assert QuadraticNumber.parse("5/2-1/2*sqrt(5)") == QuadraticNumber(Fraction(5, 2), Fraction(-1, 2), 5)
    with pytest.raises(ValueError):
        QuadraticNumber.parse("x+1")


def test_qvec_coerces_mixed_inputs():
    v = qvec([1, Fraction(1, 2), "3+sqrt(5)"], 5)
    assert all(c.d == 5 for c in v)
    assert v[2] == QuadraticNumber(3, 1, 5)


# ---------------------------------------------------------------- truncated series


def test_series_reciprocal_and_compose():
    one_minus_x = TruncatedSeries.of([Fraction(1), Fraction(-1)], 8, zero=Fraction(0))
    geo = one_minus_x.reciprocal()
    assert geo.coeffs == tuple(Fraction(1) for _ in range(8))
    x_plus = TruncatedSeries.of([Fraction(0), Fraction(1), Fraction(1)], 8, zero=Fraction(0))
    comp = geo.compose(x_plus)  # 1/(1 - x - x^2): Fibonacci numbers
    assert comp.coeffs == tuple(Fraction(f) for f in (1, 1, 2, 3, 5, 8, 13, 21))


def test_series_compose_needs_zero_constant():
    s = TruncatedSeries.of([1, 1], 4)
    with pytest.raises(ValueError):
        s.compose(TruncatedSeries.of([1, 1], 4))
