from fractions import Fraction

import pytest
import sympy

from fermat_periods.hodge import (
    TAU,
    cup_matrix_alpha,
    cup_matrix_alpha_exact,
    cup_matrix_gamma,
    f_infinity,
    p_zeta,
    pairing,
    period_matrix,
)
from fermat_periods.numerics import PrecisionContext, QuadraticNumber
from fermat_periods.reference import reference_charges


@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_tau_coefficients_follow_gamma_class(n):
    # odd part of log Gamma(1+x)^(n+2) / Gamma(1+(n+2)x)
    w = n + 2
    for k, value in TAU[n].items():
        assert value == -Fraction(w**k - w, k)
    assert sorted(TAU[n]) == list(range(3, n, 2))


@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_p_zeta_symbolic_matches_numeric(n):
    ctx = PrecisionContext(60)
    num = p_zeta(n, ctx)
    sym = p_zeta(n, symbolic=True)
    for i in range(n + 1):
        assert sym[i][i] == 1
        for j in range(n + 1):
            val = sympy.N(sym[i][j], 70)
            want = ctx.mp.mpc(ctx.mp.mpf(str(sympy.re(val))), ctx.mp.mpf(str(sympy.im(val))))
            assert abs(num[i][j] - want) <= ctx.mp.mpf(10) ** -55 * max(1, abs(want))


@pytest.mark.parametrize("n", [3, 4, 6, 8, 10])
def test_cup_matrix_exact_matches_symbolic(n):
    ctx = PrecisionContext(80)
    numeric = cup_matrix_alpha(n, period_matrix(n, ctx), ctx)
    assert numeric.exact
    oracle = cup_matrix_alpha_exact(n)
    for row_a, row_b in zip(numeric.entries, oracle):
        for a, b in zip(row_a, row_b):
            assert sympy.Rational(a.numerator, a.denominator) == b


@pytest.mark.parametrize("n", [3, 4, 6, 8, 10])
def test_cup_matrix_parity(n):
    ctx = PrecisionContext(80)
    M = cup_matrix_alpha(n, period_matrix(n, ctx), ctx).entries
    sign = -1 if n % 2 else 1
    for i in range(n + 1):
        for j in range(n + 1):
            assert M[i][j] == sign * M[j][i]
    G = cup_matrix_gamma(n)
    assert all(G[i][j] == sign * G[j][i] for i in range(n + 1) for j in range(n + 1))


def test_cup_matrix_is_unimodular_for_quintic():
    ctx = PrecisionContext(40)
    M = sympy.Matrix(cup_matrix_alpha(3, period_matrix(3, ctx), ctx).entries)
    assert M.det() == 1


@pytest.mark.parametrize("n", [3, 4])
def test_f_infinity_is_an_involution(n):
    F = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in f_infinity(n)])
    assert F * F == sympy.eye(n + 1)
    assert f_infinity(6) is None


@pytest.mark.parametrize("n", [3, 4])
def test_f_infinity_conjugates_periods(n, periods):
    data = periods(n)
    ctx, mp = data.ctx, data.ctx.mp
    F = f_infinity(n)
    for k in range(3):
        Pi = data.periods.Pi[k]
        for i in range(n + 1):
            image = mp.fsum(ctx.convert(F[i][j]) * Pi[j] for j in range(n + 1))
            assert abs(image - mp.conj(Pi[i])) < ctx.tolerance * max(1, abs(Pi[i]))


@pytest.mark.parametrize("n", [3, 4])
def test_griffiths_transversality(n, periods):
    data = periods(n)
    ctx = data.ctx
    Pi = data.periods.Pi
    top = abs(pairing(Pi[n], data.periods.cup, Pi[0], ctx))
    assert top > 1
    for k in range(n):
        assert abs(pairing(Pi[k], data.periods.cup, Pi[0], ctx)) < ctx.tolerance * top


def test_pairing_order_is_v_then_rho():
    ctx = PrecisionContext(30)
    M = [[0, 1], [-1, 0]]
    rho = [Fraction(1), Fraction(0)]
    v = [ctx.mp.mpc(0), ctx.mp.mpc(1)]
    assert pairing(rho, M, v, ctx) == -1
    with pytest.raises(ValueError):
        pairing([1], M, v, ctx)


def test_period_matrix_scale():
    ctx = PrecisionContext(40)
    one = period_matrix(4, ctx)
    two = period_matrix(4, ctx, Fraction(2))
    assert abs(two.entries[3][0] - 2 * one.entries[3][0]) < ctx.tolerance * abs(one.entries[3][0])
    with pytest.raises(ValueError):
        period_matrix(4, ctx, 0)
    with pytest.raises(ValueError):
        period_matrix(5, ctx)


@pytest.mark.parametrize("n,signs", [(3, (1, -1, 1, -1)), (4, (1, -1, 1, -1, -1))])
def test_f_infinity_eigencharges(n, signs):
    F = f_infinity(n)
    for k, rho in reference_charges(n).items():
        image = [sum((F[i][t] * rho[t] for t in range(n + 1)), QuadraticNumber(0, 0, rho.d)) for i in range(n + 1)]
        assert tuple(image) == tuple(signs[k - 1] * c for c in rho.coords)
