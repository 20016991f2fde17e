"""Integer relations, rationals, quadratic numbers and minimal polynomials from numerics.

All lattice work goes through one routine: generators g_1..g_N with real
constraint values v_i in R^r span the lattice rows (e_i | round(S v_i)), which
is LLL-reduced (delta = 0.99). Short rows are integer vectors c with
sum c_i v_i ~ 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import flint
import sympy

from .numerics import PrecisionContext, QuadraticNumber

LLL_DELTA = 0.99


class InsufficientPrecision(ValueError):
    """The working precision cannot separate relations of the requested height."""


@dataclass(frozen=True)
class RelationResult:
    coefficients: tuple[int, ...]
    residual: object
    confidence_digits: int

    @property
    def height(self) -> int:
        return max(abs(c) for c in self.coefficients)


@dataclass(frozen=True)
class AlgebraicGuess:
    """Minimal polynomial, coefficients listed from the leading term down."""

    coefficients: tuple[int, ...]
    residual: object
    confidence_digits: int

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def height(self) -> int:
        return max(abs(c) for c in self.coefficients)

    def as_sympy(self, var: sympy.Symbol | None = None) -> sympy.Poly:
        x = var or sympy.Symbol("x")
        return sympy.Poly(list(self.coefficients), x)

    def evaluate(self, x, ctx: PrecisionContext):
        acc = ctx.mp.mpc(0)
        for c in self.coefficients:
            acc = acc * x + c
        return acc


def _confidence(residual, height: int, dim: int, rank: int, ctx: PrecisionContext) -> int:
    """Digits by which the residual beats a generic relation of the same height."""
    mp = ctx.mp
    noise = -(dim - rank) / rank * math.log10(max(height, 1)) if rank else 0.0
    if residual == 0:
        return ctx.tol_exponent - int(math.ceil(-noise))
    return int(math.floor(-float(mp.log10(residual)) + noise))


def reduce_relations(values: Sequence[Sequence], max_height: int, ctx: PrecisionContext,
                     scale_exponent: int | None = None) -> list[RelationResult]:
    """All reduced lattice vectors c (height <= max_height) with |sum_i c_i values[i]| below tolerance.

    ``values[i]`` is the tuple of constraint values of generator i. Results are
    sorted by height, then lexicographically.
    """
    mp = ctx.mp
    N = len(values)
    r = len(values[0]) if N else 0
    if N < 2 or r < 1:
        raise ValueError("need at least two generators and one constraint")
    e = ctx.tol_exponent if scale_exponent is None else scale_exponent
    needed = N / r * (math.log10(max(max_height, 2)) + 1)
    if needed > e:
        raise InsufficientPrecision(
            f"height {max_height:.3g} over {N} generators needs ~{needed:.0f} digits of scale, have {e}")
    # normalize each constraint column so its largest entry is 1
    cols = []
    for l in range(r):
        col = [mp.mpf(values[i][l]) for i in range(N)]
        big = max(mp.fabs(x) for x in col)
        cols.append([x / big for x in col] if big else col)
    S = mp.mpf(10) ** e
    rows = []
    for i in range(N):
        rows.append([1 if t == i else 0 for t in range(N)] + [int(mp.nint(S * cols[l][i])) for l in range(r)])
    red = flint.fmpz_mat(rows).lll(delta=LLL_DELTA)
    found = []
    tol = ctx.tolerance
    for row in range(N):
        c = tuple(int(red[row, t]) for t in range(N))
        h = max(abs(x) for x in c)
        if h == 0 or h > max_height:
            continue
        res = max(mp.fabs(mp.fsum(c[i] * cols[l][i] for i in range(N))) for l in range(r))
        if res > tol * h * N:
            continue
        if next(x for x in c if x) < 0:
            c = tuple(-x for x in c)
        found.append(RelationResult(c, res, _confidence(res, h, N, r, ctx)))
    found.sort(key=lambda rr: (rr.height, rr.coefficients))
    return found


def integer_relation(xs: Sequence, max_height: int, ctx: PrecisionContext) -> RelationResult | None:
    """Smallest-height integer vector m with sum m_i x_i ~ 0, or None."""
    if len(xs) < 2:
        raise ValueError("need at least two numbers")
    rel = reduce_relations([(x,) for x in xs], max_height, ctx)
    return rel[0] if rel else None


def _to_fraction(x) -> Fraction:
    sign, man, exp, _ = x._mpf_
    if not man:
        return Fraction(0)
    v = Fraction(int(man)) * (Fraction(2) ** exp)
    return -v if sign else v


def recognize_rational(x, den_bound: int, ctx: PrecisionContext) -> Fraction | None:
    """Best rational approximation with denominator <= den_bound, if it agrees to tolerance."""
    mp = ctx.mp
    x = mp.mpf(x)
    q = _to_fraction(x).limit_denominator(den_bound)
    err = mp.fabs(x - mp.mpf(q.numerator) / q.denominator)
    if err < ctx.tolerance * max(1, mp.fabs(x)):
        return q
    return None


def recognize_quadratic(x, d: int, height_bound: int, ctx: PrecisionContext) -> QuadraticNumber | None:
    """x = a + b sqrt(d) with a, b rational of bounded height, or None."""
    mp = ctx.mp
    x = mp.mpf(x)
    if d == 1:
        q = recognize_rational(x, height_bound, ctx)
        return None if q is None else QuadraticNumber(q)
    rel = integer_relation([x, mp.mpf(1), mp.sqrt(d)], height_bound, ctx)
    if rel is None or rel.coefficients[0] == 0:
        return None
    c0, c1, c2 = rel.coefficients
    return QuadraticNumber(Fraction(-c1, c0), Fraction(-c2, c0), d)


def recognize_minpoly(x, max_degree: int, height_bound: int, ctx: PrecisionContext) -> AlgebraicGuess | None:
    """Irreducible integer polynomial of least degree vanishing at x (real or complex)."""
    if not 1 <= max_degree <= 8:
        raise ValueError("max_degree must be between 1 and 8")
    mp = ctx.mp
    x = mp.mpc(x)
    real = mp.fabs(x.imag) < ctx.tolerance * max(1, mp.fabs(x))
    powers = [mp.mpc(1)]
    for _ in range(max_degree):
        powers.append(powers[-1] * x)
    for deg in range(1, max_degree + 1):
        if real:
            vals = [(p.real,) for p in powers[: deg + 1]]
        else:
            vals = [(p.real, p.imag) for p in powers[: deg + 1]]
        try:
            rels = reduce_relations(vals, height_bound, ctx)
        except InsufficientPrecision:
            raise
        if not rels:
            continue
        coeffs = list(reversed(rels[0].coefficients))  # leading term first
        while coeffs and coeffs[0] == 0:
            coeffs.pop(0)
        poly = _vanishing_factor(coeffs, x, ctx)
        if poly is None:
            continue
        guess = AlgebraicGuess(tuple(poly), mp.mpf(0), 0)
        res = mp.fabs(guess.evaluate(x, ctx))
        return AlgebraicGuess(tuple(poly), res, rels[0].confidence_digits)
    return None


def _vanishing_factor(coeffs: list[int], x, ctx: PrecisionContext) -> list[int] | None:
    """The irreducible factor of the polynomial that vanishes at x, normalized to positive lead."""
    mp = ctx.mp
    X = sympy.Symbol("x")
    poly = sympy.Poly(coeffs, X)
    if poly.degree() < 1:
        return None
    best = None
    for fac, _ in sympy.factor_list(poly)[1]:
        fc = [int(c) for c in sympy.Poly(fac, X).all_coeffs()]
        val = mp.mpc(0)
        for c in fc:
            val = val * x + c
        scale = sum(abs(c) * mp.fabs(x) ** k for k, c in enumerate(reversed(fc)))
        if mp.fabs(val) < ctx.tolerance * max(1, scale):
            if best is None or len(fc) < len(best):
                best = fc
    if best is None:
        return None
    if best[0] < 0:
        best = [-c for c in best]
    return best


def is_irreducible(coeffs: Sequence[int]) -> bool:
    X = sympy.Symbol("x")
    return sympy.Poly(list(coeffs), X).is_irreducible
