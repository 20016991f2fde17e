"""Charges at the Fermat point, the Hodge-structure split, and Deligne periods.

A charge at level j is a vector rho over Q(sqrt d) of the form
c Pi^(j-1)(0) + conj(c Pi^(j-1)(0)). It lies in the real plane spanned by
Re Pi^(j-1) and Im Pi^(j-1), so it is orthogonal to the complement W of that
plane. Integer relations among the generators {e_i, sqrt(d) e_i} against W
give all such charges of bounded height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import sympy

from .hodge import PeriodVectors, f_infinity
from .numerics import PrecisionContext, QuadraticNumber, qvec, squarefree_part
from .recognize import AlgebraicGuess, reduce_relations, recognize_minpoly, recognize_quadratic

HEIGHT_BOUNDS = {3: 10**4, 4: 10**4, 6: 10**6, 8: 10**10, 10: 10**12}
NONZERO_PAIRING = Fraction(1, 1000)


class NoSplitFound(LookupError):
    def __init__(self, n: int, j: int, d: int, height: int):
        super().__init__(f"no split detected at (d={d}, height={height:.3g}) for n={n}, j={j}")
        self.n, self.j, self.d, self.height = n, j, d, height


class DegenerateOrientation(ArithmeticError):
    """The plane has no basis separating real and imaginary periods."""


# ---------------------------------------------------------------- charges


@dataclass(frozen=True)
class Charge:
    coords: tuple[QuadraticNumber, ...]
    d: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", qvec(self.coords, self.d))
        if not any(self.coords):
            raise ValueError("a charge cannot be the zero vector")

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i: int) -> QuadraticNumber:
        return self.coords[i]

    def integer_form(self) -> tuple[tuple[int, ...], tuple[int, ...], int]:
        """(A, B, L) with coords = (A + B sqrt d) / L, L > 0 minimal."""
        L = 1
        for c in self.coords:
            L = math.lcm(L, c.a.denominator, c.b.denominator)
        A = tuple(int(c.a * L) for c in self.coords)
        B = tuple(int(c.b * L) for c in self.coords)
        return A, B, L

    def height(self) -> int:
        A, B, L = self.integer_form()
        return max([L] + [abs(x) for x in A + B])

    def numeric(self, ctx: PrecisionContext) -> list:
        return [c.numeric(ctx) for c in self.coords]

    def scaled(self, s) -> "Charge":
        return Charge(tuple(c * s for c in self.coords), self.d)

    def normalized(self) -> "Charge":
        """Scale so the first nonzero coordinate is 1."""
        lead = next(c for c in self.coords if c)
        return self.scaled(lead.inverse())

    def to_strings(self) -> list[str]:
        return [str(c) for c in self.coords]

    @classmethod
    def from_strings(cls, items: Sequence[str], d: int = 1) -> "Charge":
        return cls(tuple(QuadraticNumber.parse(s, d if d > 1 else None).with_field(d) for s in items), d)

    def __str__(self) -> str:
        return "(" + ", ".join(self.to_strings()) + ")"


def galois_conjugate(rho: Charge) -> Charge:
    return Charge(tuple(c.conjugate() for c in rho.coords), rho.d)


def _combine(x, a: Charge, y, b: Charge) -> Charge:
    return Charge(tuple(x * p + y * q for p, q in zip(a.coords, b.coords)), max(a.d, b.d))


def _k_rank(vectors: Sequence[Sequence[QuadraticNumber]]) -> int:
    """Rank over Q(sqrt d) by exact elimination."""
    rows = [list(v) for v in vectors]
    rank = 0
    cols = len(rows[0]) if rows else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = rows[rank][c].inverse()
        for r in range(len(rows)):
            if r != rank and rows[r][c]:
                f = rows[r][c] * inv
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def plane_contains(plane: Sequence[Charge], rho: Charge) -> bool:
    d = max([rho.d] + [p.d for p in plane])
    vecs = [qvec(p.coords, d) for p in plane]
    return _k_rank(vecs + [qvec(rho.coords, d)]) == _k_rank(vecs)


def _plane_coordinates(a: Charge, b: Charge, v: Sequence[QuadraticNumber]) -> tuple:
    """(x, y) with v = x a + y b, or None if v is outside the plane."""
    size = len(a)
    for i in range(size):
        for k in range(i + 1, size):
            det = a[i] * b[k] - a[k] * b[i]
            if det:
                x = (v[i] * b[k] - v[k] * b[i]) / det
                y = (a[i] * v[k] - a[k] * v[i]) / det
                if all(x * a[t] + y * b[t] == v[t] for t in range(size)):
                    return x, y
                return None
    raise ValueError("the two charges are proportional")


# ---------------------------------------------------------------- charge planes


def _orthonormal(vectors: list, mp) -> list:
    basis = []
    for v in vectors:
        w = list(v)
        for q in basis:
            dot = mp.fsum(x * y for x, y in zip(w, q))
            w = [x - dot * y for x, y in zip(w, q)]
        nrm = mp.sqrt(mp.fsum(x * x for x in w))
        if nrm > mp.mpf(10) ** (-mp.dps // 2):
            basis.append([x / nrm for x in w])
    return basis


def complement_basis(v: Sequence, ctx: PrecisionContext) -> list[list]:
    """Orthonormal basis of the real complement of span(Re v, Im v)."""
    mp = ctx.mp
    size = len(v)
    plane = _orthonormal([[mp.re(x) for x in v], [mp.im(x) for x in v]], mp)
    out: list[list] = []
    remaining = list(range(size))
    while len(plane) + len(out) < size:
        best, best_norm, best_vec = None, mp.mpf(-1), None
        for i in remaining:
            w = [mp.mpf(1) if t == i else mp.mpf(0) for t in range(size)]
            for q in plane + out:
                w = [x - q[i] * y for x, y in zip(w, q)]
            nrm = mp.sqrt(mp.fsum(x * x for x in w))
            if nrm > best_norm:
                best, best_norm, best_vec = i, nrm, w
        remaining.remove(best)
        out.append([x / best_norm for x in best_vec])
    return out


def projection_residual(rho: Charge | Sequence, v: Sequence, ctx: PrecisionContext):
    """|proj_W rho| / |rho| for W the complement of span(Re v, Im v)."""
    mp = ctx.mp
    r = rho.numeric(ctx) if isinstance(rho, Charge) else [ctx.convert(x) for x in rho]
    W = complement_basis(v, ctx)
    nrm = mp.sqrt(mp.fsum(x * x for x in r))
    comp = mp.sqrt(mp.fsum(mp.fsum(a * b for a, b in zip(w, r)) ** 2 for w in W))
    return comp / nrm


def _decode(coeffs: Sequence[int], size: int, d: int) -> Charge | None:
    if d == 1:
        vals = [QuadraticNumber(Fraction(c)) for c in coeffs]
    else:
        vals = [QuadraticNumber(Fraction(coeffs[i]), Fraction(coeffs[size + i]), d) for i in range(size)]
    if not any(vals):
        return None
    return Charge(tuple(vals), d)


def charge_plane(n: int, j: int, d: int, periods: PeriodVectors, max_height: int,
                 ctx: PrecisionContext) -> tuple[Charge, Charge]:
    """Two Q(sqrt d)-independent charges of height <= max_height at level j."""
    if j < 1 or j > len(periods.Pi):
        raise ValueError(f"level j={j} needs Pi^({j - 1}), which is not available")
    mp = ctx.mp
    size = n + 1
    W = complement_basis(periods.Pi[j - 1], ctx)
    gens = [tuple(w[i] for w in W) for i in range(size)]
    if d > 1:
        sq = mp.sqrt(d)
        gens += [tuple(sq * w[i] for w in W) for i in range(size)]
    found: list[Charge] = []
    for rel in reduce_relations(gens, max_height, ctx):
        rho = _decode(rel.coefficients, size, d)
        if rho is None:
            continue
        if _k_rank([c.coords for c in found] + [rho.coords]) > len(found):
            found.append(rho)
        if len(found) == 2:
            return found[0], found[1]
    raise NoSplitFound(n, j, d, max_height)


# ---------------------------------------------------------------- verification


@dataclass(frozen=True)
class ChargeCheck:
    projection_residual: object
    pairings: tuple
    expected_nonzero: tuple[int, ...]
    passed: bool


def expected_pairings(n: int, j: int) -> tuple[int, ...]:
    """Derivative orders k in {0,1,2} whose pairing with a level-j charge may be nonzero.

    A level-j charge has Hodge types (n-j+1, j-1) and (j-1, n-j+1); Omega^(k)(0)
    reaches F^(n-k) only, so the pairing survives for k = j-1 and k = n-j+1.
    """
    return tuple(sorted({j - 1, n - j + 1} & {0, 1, 2}))


def verify_charge(rho: Charge, periods: PeriodVectors, j: int, ctx: PrecisionContext) -> ChargeCheck:
    """Pairings with Pi^(k)(0), k = 0, 1, 2, and the distance from the level-j plane."""
    from .hodge import pairing

    mp = ctx.mp
    n = periods.n
    M = periods.cup.numeric(ctx)
    r = rho.numeric(ctx)
    Mr = [mp.fsum(M[i][t] * r[t] for t in range(len(r))) for i in range(len(r))]
    pairs = []
    ok = True
    expect = expected_pairings(n, j)
    for k in range(min(3, len(periods.Pi))):
        v = periods.Pi[k]
        p = pairing(r, M, v, ctx)
        scale = mp.fsum(mp.fabs(a) * mp.fabs(b) for a, b in zip(v, Mr))
        vanishes = mp.fabs(p) < ctx.tolerance * max(scale, 1)
        if k in expect:
            ok = ok and not vanishes and mp.fabs(p) > ctx.convert(NONZERO_PAIRING)
        else:
            ok = ok and vanishes
        pairs.append(p)
    res = projection_residual(rho, periods.Pi[j - 1], ctx) if j <= len(periods.Pi) else None
    return ChargeCheck(res, tuple(pairs), expect, ok)


# ---------------------------------------------------------------- summands and periods


@dataclass(frozen=True)
class Summand:
    n: int
    level: int
    d: int
    basis: tuple[Charge, ...]
    c_plus: object = None
    c_minus: object = None
    quotient: object = None
    recognized_quotient: AlgebraicGuess | None = None

    @property
    def hodge_type(self) -> tuple[int, int]:
        return (self.n - self.level + 1, self.level - 1)

    @property
    def dimension(self) -> int:
        return len(self.basis)


def charge_period(rho: Charge, periods: PeriodVectors, j: int, ctx: PrecisionContext):
    """(2 pi i)^-n times the pairing of rho with Pi^(j-1)(0)."""
    from .hodge import pairing

    return pairing(rho, periods.cup, periods.Pi[j - 1], ctx) / ctx.pi2i() ** periods.n


def _apply(F, rho: Charge) -> tuple[QuadraticNumber, ...]:
    return tuple(sum((Fraction(F[i][t]) * rho[t] for t in range(len(rho))), QuadraticNumber(0, 0, rho.d))
                 for i in range(len(rho)))


def _eigencharge(a: Charge, b: Charge, A, lam: int) -> Charge:
    (a11, a12), (a21, a22) = A
    if a12 or a11 != lam:
        u = (a12, lam - a11)
    elif a21 or a22 != lam:
        u = (lam - a22, a21)
    else:
        raise DegenerateOrientation(f"F_infinity acts as {lam} on the whole plane")
    if not u[0] and not u[1]:
        raise DegenerateOrientation("no eigenvector found")
    return _combine(u[0], a, u[1], b)


def eigen_sort(rho_a: Charge, rho_b: Charge, n: int, periods: PeriodVectors, j: int,
               ctx: PrecisionContext, finf=None, height: int = 10**12) -> tuple[Charge, Charge]:
    """(rho_plus, rho_minus), each scaled so its first nonzero coordinate is 1.

    With an involution matrix the split is by eigenvalue; otherwise rho_plus has a
    real period and rho_minus a purely imaginary one.
    """
    if finf is not None:
        d = max(rho_a.d, rho_b.d)
        Fa = _plane_coordinates(rho_a, rho_b, qvec(_apply(finf, rho_a), d))
        Fb = _plane_coordinates(rho_a, rho_b, qvec(_apply(finf, rho_b), d))
        if Fa is None or Fb is None:
            raise DegenerateOrientation("the plane is not stable under F_infinity")
        A = ((Fa[0], Fb[0]), (Fa[1], Fb[1]))
        plus = _eigencharge(rho_a, rho_b, A, 1)
        minus = _eigencharge(rho_a, rho_b, A, -1)
        return plus.normalized(), minus.normalized()

    mp = ctx.mp
    d = max(rho_a.d, rho_b.d)
    ca = charge_period(rho_a, periods, j, ctx)
    cb = charge_period(rho_b, periods, j, ctx)
    scale = max(mp.fabs(ca), mp.fabs(cb))

    def separate(part) -> Charge:
        pa, pb = part(ca), part(cb)
        if mp.fabs(pa) < ctx.tolerance * scale:
            return rho_a
        if mp.fabs(pb) < ctx.tolerance * scale:
            return rho_b
        r = recognize_quadratic(pb / pa, d, height, ctx)
        if r is None:
            raise DegenerateOrientation(f"period ratio {mp.nstr(pb / pa, 15)} is not in Q(sqrt({d}))")
        return _combine(r, rho_a, QuadraticNumber(-1, 0, d), rho_b)

    plus = separate(mp.im)
    minus = separate(mp.re)
    if _k_rank([plus.coords, minus.coords]) < 2:
        raise DegenerateOrientation("real and imaginary charges coincide")
    return plus.normalized(), minus.normalized()


def deligne_periods(summand: Summand, periods: PeriodVectors, ctx: PrecisionContext,
                    max_degree: int = 4, height: int = 10**8) -> Summand:
    """c+- = (2 pi i)^-n rho+-^T M Pi^(j-1)(0), their quotient and its minimal polynomial."""
    j = summand.level
    if summand.dimension == 1:
        c = charge_period(summand.basis[0], periods, j, ctx)
        mp = ctx.mp
        if mp.fabs(mp.im(c)) <= mp.fabs(mp.re(c)):
            return replace(summand, c_plus=c)
        return replace(summand, c_minus=c)
    cp = charge_period(summand.basis[0], periods, j, ctx)
    cm = charge_period(summand.basis[1], periods, j, ctx)
    if ctx.mp.fabs(cm) < ctx.tolerance:
        raise ZeroDivisionError("c_minus vanishes; the quotient is undefined")
    q = cp / cm
    guess = recognize_minpoly(q, max_degree, height, ctx)
    return replace(summand, c_plus=cp, c_minus=cm, quotient=q, recognized_quotient=guess)


def tate_twist(summand: Summand, m: int, ctx: PrecisionContext):
    """c+ of the twist by Q(m): (2 pi i)^m c- for odd m, (2 pi i)^m c+ for even m."""
    if m not in (0, 1, 2, 3):
        raise ValueError(f"unsupported twist m={m}")
    base = summand.c_minus if m % 2 else summand.c_plus
    if base is None:
        raise ValueError("the summand has no period of the needed parity")
    return ctx.pi2i() ** m * base


# ---------------------------------------------------------------- the split


@dataclass
class SplitReport:
    n: int
    d: int
    summands: list[Summand]
    residuals: dict = field(default_factory=dict)
    unresolved: dict | None = None
    attempts: list[dict] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return sum(s.dimension for s in self.summands) + (self.unresolved or {}).get("dimension", 0)


def field_candidates(n: int, user_d: int | None = None) -> list[int]:
    """The user's field, Q, then the real quadratic subfields of Q(zeta_(n+2)).

    Q(sqrt d) lies in Q(zeta_N) exactly when its discriminant divides N.
    """
    N = n + 2
    out = [] if user_d is None else [user_d]
    for d in range(1, N + 1):
        if d != squarefree_part(d):
            continue
        disc = d if d % 4 == 1 else 4 * d
        if d == 1 or N % disc == 0:
            out.append(d)
    return list(dict.fromkeys(out))


def plane_levels(n: int) -> int:
    return min(3, (n + 1) // 2)


def _hodge_tate(n: int, summands: list[Summand], periods: PeriodVectors) -> Charge | None:
    """The rational vector orthogonal under the exact cup product to every found charge."""
    if not periods.cup.exact:
        return None
    M = [[sympy.Rational(x.numerator, x.denominator) for x in row] for row in periods.cup.entries]
    rows = []
    for s in summands:
        for rho in s.basis:
            # x^T M rho = 0, split into rational and sqrt(d) parts
            for part in ("a", "b"):
                vec = [sympy.Rational(getattr(c, part).numerator, getattr(c, part).denominator) for c in rho.coords]
                row = [sum(M[i][t] * vec[t] for t in range(n + 1)) for i in range(n + 1)]
                if any(row):
                    rows.append(row)
    if not rows:
        return None
    null = sympy.Matrix(rows).nullspace()
    if len(null) != 1:
        return None
    vec = [Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in null[0]]
    return Charge(tuple(vec), 1).normalized()


def assemble_split(n: int, periods: PeriodVectors, ctx: PrecisionContext, d: int | None = None,
                   max_height: int | None = None, candidates: Sequence[int] | None = None) -> SplitReport:
    """Charge planes for levels 1..3, then the Hodge-Tate class when one dimension remains.

    ``candidates`` replaces the default field search order entirely.
    """
    height = max_height or HEIGHT_BOUNDS.get(n, 10**6)
    fields_to_try = list(candidates) if candidates is not None else field_candidates(n, d)
    finf = f_infinity(n)
    summands: list[Summand] = []
    residuals: dict = {}
    attempts: list[dict] = []
    fields = []
    for j in range(1, plane_levels(n) + 1):
        found = None
        for dd in fields_to_try:
            try:
                rho_a, rho_b = charge_plane(n, j, dd, periods, height, ctx)
            except NoSplitFound:
                attempts.append({"level": j, "d": dd, "found": False})
                continue
            attempts.append({"level": j, "d": dd, "found": True})
            found = (dd, rho_a, rho_b)
            break
        if found is None:
            continue
        dd, rho_a, rho_b = found
        plus, minus = eigen_sort(rho_a, rho_b, n, periods, j, ctx, finf)
        s = deligne_periods(Summand(n, j, dd, (plus, minus)), periods, ctx)
        checks = [verify_charge(r, periods, j, ctx) for r in s.basis]
        residuals[j] = {"passed": all(c.passed for c in checks),
                        "projection": max(c.projection_residual for c in checks)}
        summands.append(s)
        fields.append(dd)
    remaining = n + 1 - sum(s.dimension for s in summands)
    unresolved = None
    if remaining == 1 and n % 2 == 0 and len(summands) == plane_levels(n):
        j = len(summands) + 1
        rho = _hodge_tate(n, summands, periods)
        if rho is not None:
            s = deligne_periods(Summand(n, j, 1, (rho,)), periods, ctx)
            check = verify_charge(rho, periods, j, ctx)
            residuals[j] = {"passed": check.passed, "projection": check.projection_residual}
            summands.append(s)
            remaining = 0
    if remaining:
        first = len(summands) + 1
        levels = range(first, first + remaining)
        unresolved = {"dimension": remaining, "hodge_types": [(n - j + 1, j - 1) for j in levels]}
    big = max(fields, default=1)
    return SplitReport(n, big, summands, residuals, unresolved, attempts)


def attempt_deeper_split(n: int, periods: PeriodVectors, ctx: PrecisionContext,
                         d_candidates: Sequence[int] | None = None,
                         max_height: int = 10**8) -> list[dict]:
    """Exploratory charge planes past level 3; absence of a plane is a valid outcome."""
    if n not in (8, 10):
        raise ValueError("deeper splits are only attempted for n = 8 and n = 10")
    levels = (4,) if n == 8 else (4, 5)
    if len(periods.Pi) < max(levels):
        raise ValueError(f"jets must carry derivatives to order {max(levels) - 1} or more")
    outcomes = []
    for j in levels:
        for dd in d_candidates or field_candidates(n):
            try:
                a, b = charge_plane(n, j, dd, periods, max_height, ctx)
            except NoSplitFound:
                outcomes.append({"level": j, "d": dd, "found": False, "height": max_height})
                continue
            checks = [verify_charge(r, periods, j, ctx) for r in (a, b)]
            outcomes.append({"level": j, "d": dd, "found": True, "height": max_height,
                             "charges": [a.to_strings(), b.to_strings()],
                             "verified": all(c.passed for c in checks)})
    return outcomes


# ---------------------------------------------------------------- serialization


def _num(x, ctx: PrecisionContext, digits: int | None = None):
    if x is None:
        return None
    mp = ctx.mp
    k = digits or ctx.tol_exponent
    return {"re": mp.nstr(mp.re(x), k), "im": mp.nstr(mp.im(x), k)}


def summand_to_json(s: Summand, ctx: PrecisionContext, digits: int | None = None) -> dict:
    out = {
        "level": s.level,
        "hodge_type": list(s.hodge_type),
        "d": s.d,
        "basis": [r.to_strings() for r in s.basis],
        "c_plus": _num(s.c_plus, ctx, digits),
        "c_minus": _num(s.c_minus, ctx, digits),
        "quotient": _num(s.quotient, ctx, digits),
    }
    if s.recognized_quotient is not None:
        out["quotient_minpoly"] = list(s.recognized_quotient.coefficients)
    return out


def report_to_json(report: SplitReport, ctx: PrecisionContext, digits: int | None = None) -> dict:
    mp = ctx.mp
    return {
        "n": report.n,
        "d": report.d,
        "summands": [summand_to_json(s, ctx, digits) for s in report.summands],
        "residuals": {str(k): {"passed": v["passed"], "projection": mp.nstr(v["projection"], 5)}
                      for k, v in report.residuals.items()},
        "unresolved": None if report.unresolved is None else {
            "dimension": report.unresolved["dimension"],
            "hodge_types": [list(t) for t in report.unresolved["hodge_types"]]},
        "attempts": report.attempts,
    }
