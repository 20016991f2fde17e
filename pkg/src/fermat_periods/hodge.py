"""Period matrices, cup products, F-infinity and the rational period vectors at psi = 0."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import sympy

from .numerics import PrecisionContext, QuadraticNumber, zeta_odd
from .pf_transport import JetPoint

SUPPORTED_N = (3, 4, 6, 8, 10)

# tau_{n,k} = TAU[n][k] * zeta(k) / (2 pi i)^k
TAU: dict[int, dict[int, Fraction]] = {
    4: {3: Fraction(-70)},
    6: {3: Fraction(-168), 5: Fraction(-6552)},
    8: {3: Fraction(-330), 5: Fraction(-19998), 7: Fraction(-1428570)},
    10: {3: Fraction(-572), 5: Fraction(-49764), 7: Fraction(-5118828), 9: Fraction(-1719926780, 3)},
}

_Q3_CORNER = Fraction(-25)  # the (0,0) entry of the quintic matrix is -25 i zeta(3) / pi^3
_Q3_REST = [
    [None, Fraction(25, 12), Fraction(0), Fraction(5, 6)],
    [Fraction(25, 12), Fraction(-11, 2), Fraction(-5, 2), Fraction(0)],
    [Fraction(1), Fraction(0), Fraction(0), Fraction(0)],
    [Fraction(0), Fraction(1), Fraction(0), Fraction(0)],
]

CUP_ALPHA_N3 = (
    (0, 0, 1, 0),
    (0, 0, 0, 1),
    (-1, 0, 0, 0),
    (0, -1, 0, 0),
)

F_INFINITY: dict[int, tuple[tuple[Fraction, ...], ...]] = {
    3: tuple(tuple(Fraction(x) for x in row) for row in (
        (1, 1, -5, 8),
        (0, -1, 8, -16),
        (0, 0, -1, 0),
        (0, 0, -1, 1),
    )),
    4: tuple(tuple(Fraction(x) for x in row) for row in (
        ("75/64", 0, "-15/8", 0, "-1/4"),
        (0, -1, 0, 0, 0),
        ("55/256", 0, "-43/32", 0, "-5/16"),
        (0, 0, 0, -1, 0),
        ("-121/1024", 0, "165/128", 0, "75/64"),
    )),
}


def _check_n(n: int) -> None:
    if n not in SUPPORTED_N:
        raise ValueError(f"unsupported n={n}; expected one of {SUPPORTED_N}")


# ---------------------------------------------------------------- P_zeta combinatorics


def zeta_column(n: int) -> list[dict[tuple[int, ...], Fraction]]:
    """(P_zeta)_{i,0} as polynomials in the tau constants of n.

    Entry i is i! times the x^i coefficient of exp(sum_k tau_k x^k); a monomial
    is keyed by the exponent tuple over the odd k listed in TAU[n].
    """
    ks = sorted(TAU[n])
    col: list[dict] = [dict() for _ in range(n + 1)]

    def walk(pos: int, degree: int, exps: list[int], coef: Fraction) -> None:
        if pos == len(ks):
            key = tuple(exps)
            col[degree][key] = col[degree].get(key, Fraction(0)) + coef * math.factorial(degree)
            return
        k = ks[pos]
        e = 0
        while degree + e * k <= n:
            walk(pos + 1, degree + e * k, exps + [e], coef / math.factorial(e))
            e += 1

    walk(0, 0, [], Fraction(1))
    return col


@dataclass(frozen=True)
class PeriodMatrix:
    n: int
    scale: Fraction
    entries: tuple[tuple, ...]
    symbolic: sympy.Matrix

    def column_dot(self, vec: Sequence) -> list:
        return [sum((p * v for p, v in zip(row, vec)), 0) for row in self.entries]


def _tau_numeric(n: int, ctx: PrecisionContext) -> dict[int, object]:
    mp = ctx.mp
    two_pi_i = ctx.pi2i()
    return {k: mp.mpf(r.numerator) / r.denominator * zeta_odd(k, ctx) / two_pi_i**k for k, r in TAU[n].items()}


def _tau_symbolic(n: int) -> dict[int, sympy.Expr]:
    two_pi_i = 2 * sympy.pi * sympy.I
    return {k: sympy.Rational(r.numerator, r.denominator) * sympy.zeta(k) / two_pi_i**k for k, r in TAU[n].items()}


def _eval_column(n: int, taus: dict, const) -> list:
    ks = sorted(TAU[n])
    out = []
    for entry in zeta_column(n):
        acc = const(Fraction(0))
        for exps, coef in entry.items():
            term = const(coef)
            for k, e in zip(ks, exps):
                if e:
                    term = term * taus[k] ** e
            acc = acc + term
        out.append(acc)
    return out


def p_zeta(n: int, ctx: PrecisionContext | None = None, symbolic: bool = False) -> list[list]:
    """Unit lower-triangular P_zeta with (P_zeta)_{i,j} = C(i,j) (P_zeta)_{i-j,0}."""
    _check_n(n)
    if n == 3:
        raise ValueError("the quintic period matrix is not of P_zeta form")
    if symbolic:
        col = _eval_column(n, _tau_symbolic(n), lambda q: sympy.Rational(q.numerator, q.denominator))
        zero = sympy.Integer(0)
    else:
        mp = ctx.mp
        col = _eval_column(n, _tau_numeric(n, ctx), lambda q: mp.mpc(mp.mpf(q.numerator) / q.denominator))
        zero = mp.mpc(0)
    return [[math.comb(i, j) * col[i - j] if j <= i else zero for j in range(n + 1)] for i in range(n + 1)]


def period_matrix(n: int, ctx: PrecisionContext, scale: Fraction | int = 1) -> PeriodMatrix:
    """P with gamma = alpha P; Pi_j = sum_k P_jk psi^-1 varpi_k."""
    _check_n(n)
    scale = Fraction(scale)
    if scale == 0:
        raise ValueError("the scale l must be nonzero")
    mp = ctx.mp
    two_pi_i = ctx.pi2i()
    lf = mp.mpf(scale.numerator) / scale.denominator
    pref = lf * two_pi_i**n
    spref = sympy.Rational(scale.numerator, scale.denominator) * (2 * sympy.pi * sympy.I) ** n
    if n == 3:
        num = []
        sym = []
        for i, row in enumerate(_Q3_REST):
            nrow, srow = [], []
            for j, x in enumerate(row):
                if x is None:
                    nrow.append(mp.mpc(0, int(_Q3_CORNER)) * zeta_odd(3, ctx) / mp.pi**3)
                    srow.append(sympy.Integer(_Q3_CORNER) * sympy.I * sympy.zeta(3) / sympy.pi**3)
                else:
                    nrow.append(mp.mpc(mp.mpf(x.numerator) / x.denominator))
                    srow.append(sympy.Rational(x.numerator, x.denominator))
            num.append(nrow)
            sym.append(srow)
    else:
        num = p_zeta(n, ctx)
        sym = p_zeta(n, symbolic=True)
    entries = tuple(tuple(pref * x for x in row) for row in num)
    return PeriodMatrix(n, scale, entries, spref * sympy.Matrix(sym))


# ---------------------------------------------------------------- cup products


def cup_matrix_gamma(n: int) -> tuple[tuple[int, ...], ...]:
    """Antidiagonal pairing on the canonical basis: entry (j, n-j) = (-1)^j C(n, j)."""
    return tuple(tuple((-1) ** j * math.comb(n, j) if i + j == n else 0 for j in range(n + 1)) for i in range(n + 1))


@dataclass(frozen=True)
class CupMatrix:
    basis: str
    entries: tuple[tuple, ...]
    exact: bool
    residual: object = None

    def numeric(self, ctx: PrecisionContext) -> list[list]:
        return [[ctx.convert(x) if self.exact else x for x in row] for row in self.entries]


def _invert(mat: Sequence[Sequence], ctx: PrecisionContext) -> list[list]:
    mp = ctx.mp
    inv = mp.inverse(mp.matrix([list(r) for r in mat]))
    return [[inv[i, j] for j in range(inv.cols)] for i in range(inv.rows)]


def cup_matrix_alpha(n: int, P: PeriodMatrix, ctx: PrecisionContext, den_bound: int = 10**6) -> CupMatrix:
    """Cup product on the rational basis alpha, exactified when recognition succeeds."""
    from .recognize import recognize_rational

    if n == 3:
        return CupMatrix("alpha", tuple(tuple(Fraction(x) for x in row) for row in CUP_ALPHA_N3), True)
    mp = ctx.mp
    G = cup_matrix_gamma(n)
    Pinv = _invert(P.entries, ctx)
    size = n + 1
    raw = [[sum(Pinv[k][i] * G[k][l] * Pinv[l][j] for k in range(size) for l in range(size)) for j in range(size)]
           for i in range(size)]
    lf = mp.mpf(P.scale.numerator) / P.scale.denominator
    norm = lf**2 * ctx.pi2i() ** (2 * n)
    scaled = [[x * norm for x in row] for row in raw]
    exact = []
    worst = mp.mpf(0)
    for row in scaled:
        erow = []
        for x in row:
            if mp.fabs(x.imag) > ctx.tolerance * max(1, mp.fabs(x)):
                return CupMatrix("alpha", tuple(tuple(r) for r in scaled), False)
            q = recognize_rational(x.real, den_bound, ctx)
            if q is None:
                return CupMatrix("alpha", tuple(tuple(r) for r in scaled), False)
            worst = max(worst, mp.fabs(x - ctx.convert(q)))
            erow.append(q)
        exact.append(tuple(erow))
    return CupMatrix("alpha", tuple(exact), True, worst)


def cup_matrix_alpha_exact(n: int) -> tuple[tuple, ...]:
    """Symbolic P_zeta^-T G P_zeta^-1 (the scale-free alpha pairing) simplified by sympy."""
    if n == 3:
        return tuple(tuple(sympy.Integer(x) for x in row) for row in CUP_ALPHA_N3)
    Pz = sympy.Matrix(p_zeta(n, symbolic=True))
    inv = Pz.inv()
    M = inv.T * sympy.Matrix(cup_matrix_gamma(n)) * inv
    return tuple(tuple(sympy.nsimplify(sympy.simplify(M[i, j])) for j in range(n + 1)) for i in range(n + 1))


def f_infinity(n: int) -> tuple[tuple[Fraction, ...], ...] | None:
    return F_INFINITY.get(n)


# ---------------------------------------------------------------- period vectors at 0


def rational_periods(jets: JetPoint, P: PeriodMatrix | Sequence[Sequence], k: int) -> list:
    """Pi^(k)(0) = P . (d/dpsi)^k [psi^-1 varpi](0)."""
    if k > jets.depth:
        raise ValueError(f"jets only carry derivatives up to order {jets.depth}")
    rows = P.entries if isinstance(P, PeriodMatrix) else P
    col = jets.column(k)
    return [sum((p * v for p, v in zip(row, col)), 0) for row in rows]


def mirror_map_value(jets: JetPoint, ctx: PrecisionContext):
    den = jets.value(0, 0)
    if ctx.mp.fabs(den) < ctx.tolerance:
        raise ZeroDivisionError("varpi_0 vanishes at this point")
    return jets.value(1, 0) / den


def pairing(rho: Sequence, M: CupMatrix | Sequence[Sequence], v: Sequence, ctx: PrecisionContext):
    """Integral of rho against the class with coordinates v: v^T M rho.

    The order matters for odd n, where M is antisymmetric. rho may hold
    QuadraticNumbers, Fractions or numbers.
    """
    if len(rho) != len(v):
        raise ValueError("dimension mismatch")
    mat = M.numeric(ctx) if isinstance(M, CupMatrix) else M
    r = [ctx.convert(x) if isinstance(x, (QuadraticNumber, Fraction, int)) else x for x in rho]
    mr = [sum((mat[i][j] * r[j] for j in range(len(v))), 0) for i in range(len(v))]
    return sum((v[i] * mr[i] for i in range(len(v))), ctx.mp.mpc(0))


@dataclass(frozen=True)
class PeriodVectors:
    n: int
    P: PeriodMatrix
    cup: CupMatrix
    jets: JetPoint
    Pi: tuple[tuple, ...]
    t0: object

    def derivative(self, k: int) -> tuple:
        return self.Pi[k]


def period_vectors(n: int, jets: JetPoint, ctx: PrecisionContext, scale: Fraction | int = 1,
                   max_k: int | None = None) -> PeriodVectors:
    P = period_matrix(n, ctx, scale)
    cup = cup_matrix_alpha(n, P, ctx)
    top = jets.depth if max_k is None else min(max_k, jets.depth)
    Pi = tuple(tuple(rational_periods(jets, P, k)) for k in range(top + 1))
    return PeriodVectors(n, P, cup, jets, Pi, mirror_map_value(jets, ctx))
