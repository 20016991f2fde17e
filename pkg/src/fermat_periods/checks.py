"""Acceptance checks shared by the command line reports.

Every check returns a Check whose detail holds decimal strings only, so
reports serialize deterministically.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from . import reference as ref
from .frobenius import build_h_series, eval_canonical, monodromy_T0, order_for_point
from .hodge import PeriodVectors
from .lfunc import ModularForm, deligne_check, l_value
from .numerics import PrecisionContext
from .pf_transport import JetPoint, derivative_ode, psi_ode
from .recognize import AlgebraicGuess, recognize_minpoly, recognize_rational
from .splitter import (HEIGHT_BOUNDS, Summand, charge_period, charge_plane, deligne_periods, plane_contains,
                       projection_residual, verify_charge)


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _s(x, ctx: PrecisionContext, digits: int = 20) -> str:
    return ctx.mp.nstr(x, digits)


def relative_gap(value, text: str, ctx: PrecisionContext):
    mp = ctx.mp
    target = mp.mpf(text)
    return mp.fabs(value - target) / max(mp.fabs(target), mp.mpf(10) ** -ctx.tol_exponent)


def agrees(value, text: str, digits: int, ctx: PrecisionContext) -> bool:
    """value matches the printed decimal to `digits` significant digits."""
    return relative_gap(value, text, ctx) < ctx.mp.mpf(10) ** (-digits)


# ---------------------------------------------------------------- series, ODEs, monodromy


def check_series() -> Check:
    series = build_h_series(3, 5)
    bad = {}
    for k, want in ref.SERIES_N3.items():
        got = tuple(series.coefficient(k, m) for m in range(1, 5))
        if got != want:
            bad[str(k)] = [str(x) for x in got]
    return Check("series_n3_exact", not bad, {"mismatches": bad})


def check_odes(n: int) -> Check:
    table = ref.reference_odes()
    base = psi_ode(n)
    bad = []
    levels = [lv for (m, lv) in table if m == n]
    for lv in sorted(levels):
        ode = base if lv == 0 else derivative_ode(base, lv)
        ours = [_strip(c) for c in ode.coeffs]
        theirs = [_strip(c) for c in table[(n, lv)]]
        if ours != theirs:
            bad.append(lv)
    return Check("ode_coefficients", bool(levels) and not bad, {"levels": sorted(levels), "mismatched": bad})


def _strip(c) -> list[int]:
    c = list(c)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def _matpow_nilpotent(n: int) -> bool:
    T = sympy.Matrix(monodromy_T0(n)) - sympy.eye(n + 1)
    return (T ** (n + 1)).is_zero_matrix


def check_monodromy(n: int, ctx: PrecisionContext, points: int = 10, seed: int = 0) -> Check:
    """(T0 - I)^(n+1) = 0 and branch + 1 acting as T0 at random points inside |phi| < 0.9.

    points=0 checks nilpotency only; the exact series gets expensive for large n at full precision.
    """
    mp = ctx.mp
    nilpotent = _matpow_nilpotent(n)
    rng = random.Random(seed)
    T0 = monodromy_T0(n)
    series = build_h_series(n, order_for_point(n, 0.4, ctx)) if points else None
    worst = mp.mpf(0)
    for _ in range(points):
        r = 0.05 + 0.35 * rng.random()
        theta = rng.uniform(-3.1, 3.1)
        phi = mp.mpc(r * mp.cos(theta), r * mp.sin(theta))
        b = rng.randint(-2, 2)
        lo = eval_canonical(series, phi, b, ctx)
        hi = eval_canonical(series, phi, b + 1, ctx)
        for i in range(n + 1):
            pred = mp.fsum(T0[i][k] * lo[k] for k in range(n + 1))
            worst = max(worst, mp.fabs(pred - hi[i]) / max(1, mp.fabs(hi[i])))
    ok = nilpotent and worst < ctx.tolerance
    return Check("monodromy", ok, {"nilpotent": nilpotent, "points": points, "worst_relative": _s(worst, ctx, 5)})


# ---------------------------------------------------------------- jets


def check_jets(n: int, jets: JetPoint, ctx: PrecisionContext, digits: int = 40) -> Check:
    mp = ctx.mp
    table = {k: v for k, v in ref.reference_jets().items() if k[0] == n}
    worst = mp.mpf(0)
    failed = []
    for (_, j, k), (re, im) in sorted(table.items()):
        target = mp.mpc(mp.mpf(re), mp.mpf(im))
        got = jets.value(j, k)
        gap = mp.fabs(got - target) / mp.fabs(target)
        worst = max(worst, gap)
        if gap >= mp.mpf(10) ** (-digits):
            failed.append(f"{j},{k}")
    ok = bool(table) and not failed
    return Check("jets_match_tables", ok, {"entries": len(table), "worst_relative": _s(worst, ctx, 5),
                                           "failed": failed})


# ---------------------------------------------------------------- mirror map


@dataclass(frozen=True)
class MirrorRecognition:
    t: object
    real_part_gap: object
    minpoly: AlgebraicGuess | None


def recognize_mirror(t, ctx: PrecisionContext, max_degree: int = 8, height: int = 10**6) -> MirrorRecognition:
    """Re t should be 1/2; Im t is recognized by its minimal polynomial."""
    mp = ctx.mp
    return MirrorRecognition(t, mp.fabs(mp.re(t) - mp.mpf(1) / 2),
                             recognize_minpoly(mp.im(t), max_degree, height, ctx))


def _sympy_minpoly(expr) -> list[int]:
    x = sympy.Symbol("x")
    p = sympy.Poly(sympy.minimal_polynomial(expr, x), x)
    c = [int(v) for v in p.all_coeffs()]
    return c if c[0] > 0 else [-v for v in c]


def _numeric(expr, ctx: PrecisionContext):
    v = sympy.N(expr, ctx.decimal_digits + 5)
    re, im = v.as_real_imag()
    return ctx.mp.mpc(ctx.mp.mpf(str(re)), ctx.mp.mpf(str(im)))


def check_mirror(n: int, periods: PeriodVectors, ctx: PrecisionContext) -> Check:
    mp = ctx.mp
    rec = recognize_mirror(periods.t0, ctx)
    expr = ref.closed_form(ref.MIRROR[n])
    want = _sympy_minpoly(sympy.im(expr))
    got = list(rec.minpoly.coefficients) if rec.minpoly else None
    gap = mp.fabs(periods.t0 - _numeric(expr, ctx))
    bound = mp.mpf(10) ** -min(60, ctx.tol_exponent)
    residual = rec.minpoly.residual if rec.minpoly else None
    ok = got == want and gap < bound and rec.real_part_gap < bound and residual is not None and residual < bound
    return Check("mirror_closed_form", ok, {
        "t": [_s(mp.re(periods.t0), ctx, 40), _s(mp.im(periods.t0), ctx, 40)],
        "minpoly": got, "expected_minpoly": want, "closed_form": ref.MIRROR[n],
        "gap": _s(gap, ctx, 5), "residual": None if residual is None else _s(residual, ctx, 5)})


# ---------------------------------------------------------------- charges and periods


def _levels(n: int) -> dict[int, tuple[int, ...]]:
    return ref.SUMMAND_CHARGES[n]


def check_splits(n: int, periods: PeriodVectors, ctx: PrecisionContext, max_height: int | None = None) -> Check:
    mp = ctx.mp
    d = ref.PLANE_FIELD[n]
    charges = ref.reference_charges(n)
    height = max_height or HEIGHT_BOUNDS[n]
    detail: dict = {"d": d, "levels": {}}
    ok = True
    for j, idx in _levels(n).items():
        entry: dict = {}
        if len(idx) == 2:
            plane = charge_plane(n, j, d, periods, height, ctx)
            members = {str(k): plane_contains(plane, charges[k]) for k in idx}
            res = max(projection_residual(charges[k], periods.Pi[j - 1], ctx) for k in idx)
            entry.update(members=members, projection=_s(res, ctx, 5))
            ok = ok and all(members.values()) and res < mp.mpf(10) ** -40
        verified = {str(k): verify_charge(charges[k], periods, j, ctx).passed for k in idx}
        entry["verified"] = verified
        ok = ok and all(verified.values())
        detail["levels"][str(j)] = entry
    return Check("charge_planes", ok, detail)


def reference_summands(n: int, periods: PeriodVectors, ctx: PrecisionContext) -> list[Summand]:
    """Summands spanned by the tabulated charges, with periods and quotients filled in."""
    charges = ref.reference_charges(n)
    out = []
    for j, idx in _levels(n).items():
        basis = tuple(charges[k] for k in idx)
        out.append(deligne_periods(Summand(n, j, ref.PLANE_FIELD[n], basis), periods, ctx))
    return out


def check_periods(n: int, periods: PeriodVectors, ctx: PrecisionContext, digits: int = 30) -> Check:
    mp = ctx.mp
    ok = True
    detail = {}
    for s in reference_summands(n, periods, ctx):
        if s.dimension != 2:
            continue
        key = (n, s.level)
        cp = s.c_plus
        row = {"c_plus": _s(mp.re(cp), ctx, digits + 5), "c_plus_imag": _s(mp.im(cp), ctx, 5)}
        match = agrees(mp.re(cp), ref.C_PLUS[key], digits, ctx) and mp.fabs(mp.im(cp)) < ctx.tolerance * mp.fabs(cp)
        expr = ref.closed_form(ref.QUOTIENTS[key])
        want = _sympy_minpoly(expr)
        got = list(s.recognized_quotient.coefficients) if s.recognized_quotient else None
        qgap = mp.fabs(s.quotient - _numeric(expr, ctx)) / mp.fabs(s.quotient)
        pure = mp.fabs(mp.re(s.quotient)) < ctx.tolerance * mp.fabs(s.quotient)
        qok = got == want and qgap < ctx.tolerance and pure
        row.update(quotient=_s(mp.im(s.quotient), ctx, 30) + "*I", minpoly=got, expected=ref.QUOTIENTS[key],
                   c_plus_match=match, quotient_match=qok)
        ok = ok and match and qok
        detail[str(s.level)] = row
    return Check("deligne_periods", ok, detail)


def hodge_tate_value(periods: PeriodVectors, ctx: PrecisionContext) -> tuple[object, Fraction | None]:
    """c-(2 pi i)^2 / i for the one-dimensional n = 4 summand, and its rational recognition."""
    rho = ref.reference_charges(4)[5]
    c = charge_period(rho, periods, 3, ctx)
    v = c * ctx.pi2i() ** 2 / ctx.mp.mpc(0, 1)
    rec = recognize_rational(ctx.mp.re(v), 10**6, ctx) if ctx.mp.fabs(ctx.mp.im(v)) < ctx.tolerance else None
    return v, rec


def check_hodge_tate(periods: PeriodVectors, ctx: PrecisionContext) -> Check:
    v, rec = hodge_tate_value(periods, ctx)
    return Check("hodge_tate", rec == ref.HODGE_TATE_N4,
                 {"value": _s(ctx.mp.re(v), ctx, 30), "recognized": None if rec is None else str(rec)})


# ---------------------------------------------------------------- L-function


def l_values(form: ModularForm, ctx: PrecisionContext) -> dict:
    return {s: l_value(form, s, ctx) for s in (1, 2, 3)}


def check_lfunction(summand: Summand, form: ModularForm, ctx: PrecisionContext, digits: int = 30) -> Check:
    mp = ctx.mp
    lv = l_values(form, ctx)
    match = {str(s): agrees(v.value, ref.L_VALUES[s], digits, ctx) for s, v in lv.items()}
    verdict = deligne_check(summand, form, ctx, {s: v.value for s, v in lv.items()})
    ratios_ok = verdict.recognized == ref.DELIGNE_RATIOS
    ok = all(match.values()) and ratios_ok and verdict.passed
    return Check("l_function", ok, {
        "values": {str(s): _s(v.value, ctx, digits + 5) for s, v in lv.items()},
        "matches": match,
        "sign": lv[1].sign_used,
        "terms": lv[1].terms_used,
        "ratios": {str(m): None if r is None else str(r) for m, r in verdict.recognized.items()},
        "steps": [None if verdict.ratio_21 is None else str(verdict.ratio_21),
                  None if verdict.ratio_32 is None else str(verdict.ratio_32)],
    })
