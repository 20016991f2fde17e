"""L-values of self-dual newforms from q-expansion coefficients, and Deligne ratios.

With g(y) = f(i y / sqrt N) and g(1/y) = eps y^k g(y), splitting the Mellin
integral at y = t gives

    Lambda(s) = sum a_n (sqrt N / 2 pi n)^s Gamma(s, 2 pi n t / sqrt N)
              + eps sum a_n (sqrt N / 2 pi n)^(k-s) Gamma(k-s, 2 pi n / (t sqrt N)),

for every t > 0, where Lambda(s) = (sqrt N / 2 pi)^s Gamma(s) L(s). The value
must not depend on t, which is how an unknown eps is fixed.
"""

from __future__ import annotations

import itertools
import json
import math
import urllib.request
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .numerics import PrecisionContext, incomplete_gamma_int
from .recognize import recognize_rational

F5_LABEL = "432.5.e.a"
SHIFTED_T = Fraction(11, 10)


class FormError(ValueError):
    """Malformed or insufficient coefficient data."""


class SignIndeterminate(ArithmeticError):
    def __init__(self, diagnostics: dict):
        super().__init__(f"cannot determine the functional-equation sign: {diagnostics}")
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class ModularForm:
    label: str
    weight: int
    level: int
    an: tuple[int, ...]
    eps: int | None = None

    def __post_init__(self) -> None:
        if not self.an or self.an[0] != 1:
            raise FormError("coefficients must start with a_1 = 1")
        if self.eps not in (None, 1, -1):
            raise FormError(f"sign must be +1, -1 or absent, got {self.eps}")

    @property
    def count(self) -> int:
        return len(self.an)

    def terms_needed(self, ctx: PrecisionContext, t: Fraction | int = 1) -> int:
        """Smallest M with exp(-2 pi M / (t sqrt N)) < 10^-(digits+5)."""
        rate = 2 * math.pi / (float(t) * math.sqrt(self.level))
        return int(math.ceil((ctx.decimal_digits + 5) * math.log(10) / rate)) + 1

    def check_precision(self, ctx: PrecisionContext, t: Fraction | int = 1) -> None:
        need = self.terms_needed(ctx, t)
        if self.count < need:
            raise FormError(f"too few coefficients: {self.count} given, {need} needed for "
                            f"{ctx.decimal_digits} digits at level {self.level}")


@dataclass(frozen=True)
class LValue:
    s: int
    value: object
    terms_used: int
    sign_used: int


def _parse_form(doc: dict) -> ModularForm:
    for key in ("label", "weight", "level", "an"):
        if key not in doc:
            raise FormError(f"missing field {key!r}")
    an = []
    for i, x in enumerate(doc["an"], start=1):
        if isinstance(x, bool) or not isinstance(x, int):
            raise FormError(f"a_{i} = {x!r} is not an integer")
        an.append(x)
    eps = doc.get("eps")
    return ModularForm(str(doc["label"]), int(doc["weight"]), int(doc["level"]), tuple(an), eps)


def default_form_path() -> Path:
    return Path(str(resources.files("fermat_periods") / "data" / f"{F5_LABEL}.json"))


def fetch_form(label: str, url_template: str, timeout: float = 30.0) -> dict:
    """Build the coefficient document from an LMFDB-style JSON endpoint (explicit opt-in only)."""
    url = url_template.format(label=label)
    with urllib.request.urlopen(url, timeout=timeout) as fh:
        payload = json.load(fh)
    rec = payload["data"][0] if "data" in payload else payload
    traces = rec["traces"]
    an = [int(x) for x in traces[1:]] if traces and traces[0] == 0 else [int(x) for x in traces]
    return {"label": label, "weight": int(rec["weight"]), "level": int(rec["level"]), "eps": None, "an": an}


def load_form(source: str | Path | None = None, ctx: PrecisionContext | None = None, fetch: bool = False,
              url_template: str = "https://www.lmfdb.org/api/mf_newforms/?label={label}&_format=json") -> ModularForm:
    """Read a coefficient file (default: the bundled f5 data); URLs need fetch=True."""
    if source is None:
        source = default_form_path()
    text = str(source)
    if text.startswith(("http://", "https://")) or (fetch and not Path(text).exists()):
        if not fetch:
            raise FormError("network access is disabled; pass fetch=True to download coefficients")
        doc = fetch_form(text if not text.startswith("http") else F5_LABEL,
                         text if text.startswith("http") else url_template)
    else:
        path = Path(text)
        if not path.exists():
            raise FormError(f"coefficient file {path} not found")
        doc = json.loads(path.read_text())
    form = _parse_form(doc)
    if ctx is not None:
        form.check_precision(ctx)
    return form


def save_form(form: ModularForm, path: Path) -> None:
    doc = {"label": form.label, "weight": form.weight, "level": form.level, "eps": form.eps, "an": list(form.an)}
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(doc, separators=(",", ":")) + "\n")
    tmp.replace(path)


# ---------------------------------------------------------------- evaluation


def _halves(form: ModularForm, s: int, t: Fraction, ctx: PrecisionContext) -> tuple:
    """The two sums of the t-split functional equation, without the sign."""
    mp = ctx.mp
    k, N = form.weight, form.level
    sqN = mp.sqrt(N)
    tt = mp.mpf(t.numerator) / t.denominator
    terms = min(form.count, max(form.terms_needed(ctx, t), form.terms_needed(ctx, 1 / t)))
    first = mp.mpf(0)
    second = mp.mpf(0)
    for n in range(1, terms + 1):
        a = form.an[n - 1]
        if not a:
            continue
        base = sqN / (2 * mp.pi * n)
        first += a * base**s * incomplete_gamma_int(s, 2 * mp.pi * n * tt / sqN, ctx)
        second += a * base ** (k - s) * incomplete_gamma_int(k - s, 2 * mp.pi * n / (tt * sqN), ctx)
    return first, second, terms


def _to_l(form: ModularForm, s: int, lam, ctx: PrecisionContext):
    mp = ctx.mp
    return lam * (2 * mp.pi) ** s / (mp.sqrt(form.level) ** s * mp.factorial(s - 1))


def infer_sign(form: ModularForm, ctx: PrecisionContext, points: tuple[int, ...] = (1, 2)) -> int:
    """The sign for which Lambda(s) does not depend on the split point, at every test point."""
    mp = ctx.mp
    agree = {1: True, -1: True}
    diag = {}
    for s in points:
        a1, b1, _ = _halves(form, s, Fraction(1), ctx)
        a2, b2, _ = _halves(form, s, SHIFTED_T, ctx)
        for eps in (1, -1):
            gap = mp.fabs((a1 + eps * b1) - (a2 + eps * b2))
            scale = max(mp.fabs(a1), mp.fabs(b1), 1)
            ok = gap < ctx.tolerance * scale
            diag[(s, eps)] = mp.nstr(gap / scale, 5)
            agree[eps] = agree[eps] and ok
    good = [e for e, ok in agree.items() if ok]
    if len(good) != 1:
        raise SignIndeterminate(diag)
    return good[0]


def l_value(form: ModularForm, s: int, ctx: PrecisionContext, eps: int | None = None) -> LValue:
    if not 1 <= s <= form.weight - 1:
        raise ValueError(f"s={s} is outside 1..{form.weight - 1}")
    sign = eps if eps is not None else form.eps
    if sign is None:
        sign = infer_sign(form, ctx)
    form.check_precision(ctx)
    a, b, terms = _halves(form, s, Fraction(1), ctx)
    return LValue(s, _to_l(form, s, a + sign * b, ctx), terms, sign)


def completed_l(form: ModularForm, s: int, ctx: PrecisionContext, eps: int, t: Fraction = Fraction(1)):
    a, b, _ = _halves(form, s, t, ctx)
    return a + eps * b


# ---------------------------------------------------------------- Deligne ratios


@dataclass(frozen=True)
class DeligneVerdict:
    ratios: dict
    recognized: dict
    ratio_21: Fraction | None
    ratio_32: Fraction | None
    passed: bool


EXPECTED_STEPS = (Fraction(132), Fraction(-72))


def deligne_check(summand, form: ModularForm, ctx: PrecisionContext, lvalues: dict | None = None,
                  den_bound: int = 10**6) -> DeligneVerdict:
    """r_m = c+(H(m)) / L(f, m) for m = 1, 2, 3, recognized as rationals.

    A purely imaginary twisted period is divided by i first.
    """
    from .splitter import tate_twist

    mp = ctx.mp
    raw, rec = {}, {}
    for m in (1, 2, 3):
        L = lvalues[m] if lvalues and m in lvalues else l_value(form, m, ctx).value
        r = tate_twist(summand, m, ctx) / L
        if mp.fabs(mp.re(r)) < mp.fabs(mp.im(r)):
            r = r / mp.mpc(0, 1)
        raw[m] = r
        if mp.fabs(mp.im(r)) > ctx.tolerance * mp.fabs(r):
            rec[m] = None
        else:
            rec[m] = recognize_rational(mp.re(r), den_bound, ctx)
    r21 = rec[2] / rec[1] if rec[1] and rec[2] is not None else None
    r32 = rec[3] / rec[2] if rec[2] and rec[3] is not None else None
    return DeligneVerdict(raw, rec, r21, r32, (r21, r32) == EXPECTED_STEPS)


# ---------------------------------------------------------------- CM coefficients of f5


def _zmul(x: tuple[int, int], y: tuple[int, int]) -> tuple[int, int]:
    """(a + b w)(c + d w) in Z[w], w^2 = -1 - w."""
    a, b = x
    c, d = y
    return (a * c - b * d, a * d + b * c - b * d)


def _znorm(a: int, b: int) -> int:
    return a * a - a * b + b * b


def _unit_group(mod: int) -> list[tuple[int, int]]:
    return [(a, b) for a in range(mod) for b in range(mod) if math.gcd(_znorm(a, b), mod) == 1]


def _characters(mod: int) -> list[dict]:
    """All characters of (Z[w]/mod)^x with values in mu_6, as exponent maps x -> e (chi = zeta_6^e)."""
    group = _unit_group(mod)
    one = (1, 0)

    def mulm(x, y):
        p = _zmul(x, y)
        return (p[0] % mod, p[1] % mod)

    def order(g):
        k, x = 1, g
        while x != one:
            x, k = mulm(x, g), k + 1
        return k

    def closure(gs):
        seen, frontier = {one}, [one]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gs:
                    y = mulm(x, g)
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return seen

    gens, span = [], {one}
    for g in sorted(group, key=lambda g: (-order(g), g)):
        if g not in span:
            gens.append(g)
            span = closure(gens)
    out = []
    for vals in itertools.product(*[range(order(g)) for g in gens]):
        if any((6 * v) % order(g) for g, v in zip(gens, vals)):
            continue
        chi = {one: 0}
        frontier, ok = [one], True
        while frontier and ok:
            nxt = []
            for x in frontier:
                for g, v in zip(gens, vals):
                    y = mulm(x, g)
                    e = (chi[x] + 6 * v // order(g)) % 6
                    if y in chi:
                        if chi[y] != e:
                            ok = False
                            break
                    else:
                        chi[y] = e
                        nxt.append(y)
                if not ok:
                    break
            frontier = nxt
        if ok and len(chi) == len(group):
            out.append(chi)
    return out


_ZETA6 = (1, 1)  # 1 + w = exp(pi i / 3)


def _zpow(x: tuple[int, int], e: int) -> tuple[int, int]:
    out = (1, 0)
    for _ in range(e):
        out = _zmul(out, x)
    return out


def hecke_coefficients(chi: dict, mod: int, count: int, weight: int = 5) -> list[tuple[int, int]]:
    """6 a_n = sum over alpha in Z[w] with N(alpha) = n, gcd(n, 6) = 1, of chi(alpha) alpha^(k-1)."""
    acc = [(0, 0)] * (count + 1)
    R = int(2 * math.sqrt(count)) + 2
    for x in range(-R, R + 1):
        for y in range(-R, R + 1):
            N = _znorm(x, y)
            if 0 < N <= count and math.gcd(N, 6) == 1:
                term = _zmul(_zpow(_ZETA6, chi[(x % mod, y % mod)]), _zpow((x, y), weight - 1))
                acc[N] = (acc[N][0] + term[0], acc[N][1] + term[1])
    return acc[1:]


F5_CHECKS = {7: -71, 13: -337, 19: 601, 25: 625, 31: -194}


def f5_coefficients(count: int) -> list[int]:
    """a_1..a_count of the weight-5 CM newform of level 432.

    psi((alpha)) = chi(alpha) alpha^4 with chi a character mod 12 satisfying
    chi(w) = w^-1 and chi(-1) = 1 (so psi is well defined on ideals), pinned down
    by the leading q-expansion coefficients.
    """
    mod = 12
    wbar = 4  # zeta_6^4 = w^2 = w^-1
    hits = []
    for chi in _characters(mod):
        if chi[(0, 1)] != wbar or chi[(mod - 1, 0)] != 0:
            continue
        small = hecke_coefficients(chi, mod, max(F5_CHECKS))
        if all(small[k - 1] == (6 * v, 0) for k, v in F5_CHECKS.items()):
            hits.append(chi)
    if len(hits) != 1:
        raise FormError(f"expected one matching character, found {len(hits)}")
    raw = hecke_coefficients(hits[0], mod, count)
    out = []
    for n, (a, b) in enumerate(raw, start=1):
        if b or a % 6:
            raise FormError(f"a_{n} = ({a} + {b} w)/6 is not an integer")
        out.append(a // 6)
    return out
