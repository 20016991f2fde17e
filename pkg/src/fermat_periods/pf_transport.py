"""Picard-Fuchs equation in the psi chart and Taylor-method transport to psi = 0.

With phi = psi^-(n+2) the functions psi^-1 varpi_j(phi(psi)) satisfy an
order n+1 linear ODE whose leading coefficient is 1 - psi^(n+2). The point
psi = 0 is ordinary, so jets at 0 come from plain Taylor continuation along
a path that avoids the (n+2)-th roots of unity.
"""

from __future__ import annotations

import cmath
import hashlib
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import gmpy2

from .frobenius import build_h_series, log_lambda_phi, combine_canonical, order_for_point
from .numerics import PrecisionContext, TruncatedSeries


class PathError(ValueError):
    """The transport path comes too close to a singular fibre."""


class PrecisionError(ArithmeticError):
    """A Taylor step could not reach the requested accuracy."""


# ---------------------------------------------------------------- operators in psi and d/dpsi

# An operator is a dict {(i, k): c} standing for sum c * psi^i * D^k with D = d/dpsi,
# coefficients written to the left. Negative powers of psi are allowed.


def _falling(x: int, r: int) -> int:
    out = 1
    for t in range(r):
        out *= x - t
    return out


def op_mul(A: dict, B: dict) -> dict:
    out: dict = defaultdict(Fraction)
    for (a, b), ca in A.items():
        for (c, d), cb in B.items():
            # D^b psi^c = sum_r C(b, r) c^(r falling) psi^(c-r) D^(b-r)
            for r in range(b + 1):
                f = _falling(c, r)
                if f == 0:
                    continue
                out[(a + c - r, b - r + d)] += ca * cb * math.comb(b, r) * f
    return {key: v for key, v in out.items() if v}


def op_add(A: dict, B: dict, scale=1) -> dict:
    out: dict = defaultdict(Fraction, A)
    for key, v in B.items():
        out[key] += scale * v
    return {key: v for key, v in out.items() if v}


def op_pow(A: dict, e: int) -> dict:
    out = {(0, 0): Fraction(1)}
    for _ in range(e):
        out = op_mul(out, A)
    return out


@dataclass(frozen=True)
class PsiODE:
    """sum_k p_k(psi) (d/dpsi)^k annihilating the level-th psi-derivative of psi^-1 varpi_j."""

    n: int
    coeffs: tuple[tuple[int, ...], ...]
    level: int = 0

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def poly(self, k: int) -> dict[int, int]:
        return {e: c for e, c in enumerate(self.coeffs[k]) if c}

    def as_operator(self) -> dict:
        return {(e, k): Fraction(c) for k, p in enumerate(self.coeffs) for e, c in enumerate(p) if c}

    def __str__(self) -> str:
        def poly_str(p):
            terms = []
            for e, c in enumerate(p):
                if c:
                    terms.append(f"{c}" + (f"*psi^{e}" if e else ""))
            return " + ".join(terms) or "0"

        return "; ".join(f"[D^{k}] {poly_str(p)}" for k, p in reversed(list(enumerate(self.coeffs))))


def _normalize(op: dict, n: int, level: int) -> PsiODE:
    """Scale by c psi^a so the leading coefficient is psi^level (1 - psi^(n+2)), integer entries."""
    m = max(k for (_, k) in op)
    lead = {i: c for (i, k), c in op.items() if k == m}
    low = min(lead)
    if set(lead) != {low, low + n + 2} or lead[low] != -lead[low + n + 2]:
        raise ValueError("unexpected leading coefficient")
    shift = level - low
    scale = 1 / lead[low]
    rows = [[Fraction(0)] * 0 for _ in range(m + 1)]
    by_k: dict = defaultdict(dict)
    for (i, k), c in op.items():
        e = i + shift
        if e < 0:
            raise ValueError("negative power survived normalization")
        by_k[k][e] = c * scale
    for k in range(m + 1):
        top = max(by_k[k], default=-1)
        row = [by_k[k].get(e, Fraction(0)) for e in range(top + 1)]
        if any(c.denominator != 1 for c in row):
            raise ValueError("non-integral coefficient after normalization")
        rows[k] = tuple(int(c) for c in row)
    return PsiODE(n, tuple(tuple(r) for r in rows), level)


def psi_ode(n: int) -> PsiODE:
    """Change variables in D_n (applied to psi * Omega) from phi to psi = phi^(-1/(n+2))."""
    if n < 1:
        raise ValueError("n must be at least 1")
    w = n + 2
    theta_phi = {(1, 1): Fraction(-1, w)}
    phi = {(-w, 0): Fraction(1)}
    prod = {(0, 0): Fraction(1)}
    for k in range(1, n + 2):
        prod = op_mul(prod, op_add(theta_phi, {(0, 0): Fraction(k, w)}))
    D = op_add(op_pow(theta_phi, n + 1), op_mul(phi, prod), scale=-1)
    op = op_mul(D, {(1, 0): Fraction(1)})
    return _normalize(op, n, 0)


def _derive_once(ode: PsiODE) -> PsiODE:
    p0 = ode.poly(0)
    if len(p0) != 1:
        raise ValueError("derivative_ode needs a monomial zeroth coefficient")
    (e0, c0), = p0.items()
    inner: dict = {}
    for k in range(1, ode.order + 1):
        for e, c in ode.poly(k).items():
            inner[(e - e0, k - 1)] = Fraction(c, c0)
    op = op_add(op_mul({(0, 1): Fraction(1)}, inner), {(0, 0): Fraction(1)})
    return _normalize(op, ode.n, ode.level + 1)


def derivative_ode(ode: PsiODE, j: int) -> PsiODE:
    """ODE of the same order for the j-th psi-derivative (j = 1 or 2)."""
    if j not in (1, 2):
        raise ValueError("derivative_ode supports j = 1 and j = 2")
    out = ode
    for _ in range(j):
        out = _derive_once(out)
    return out


# ---------------------------------------------------------------- jets


@dataclass(frozen=True)
class JetPoint:
    """jets[j][k] = d^k/dpsi^k of psi^-1 varpi_j at psi."""

    psi: object
    jets: tuple[tuple, ...]

    @property
    def depth(self) -> int:
        return len(self.jets[0]) - 1

    def value(self, j: int, k: int = 0):
        return self.jets[j][k]

    def column(self, k: int) -> list:
        return [row[k] for row in self.jets]


def initial_jet(n: int, psi0, log_branch: int, ctx: PrecisionContext, depth: int | None = None) -> JetPoint:
    """Jets of psi^-1 varpi_j at psi0 from the phi-series, composed through phi = psi^-(n+2)."""
    mp = ctx.mp
    psi0 = mp.mpc(psi0)
    if mp.fabs(psi0) <= 1:
        raise ValueError("initial point must satisfy |psi0| > 1")
    w = n + 2
    L = (depth if depth is not None else n) + 1
    phi0 = psi0 ** (-w)
    series = build_h_series(n, order_for_point(n, float(mp.fabs(phi0)), ctx))
    # log(1 + u) and (1 + u)^-w
    log1p = TruncatedSeries.of(
        [mp.mpc(0)] + [mp.mpc((-1) ** (r + 1)) / r / psi0**r for r in range(1, L)], L)
    binom = TruncatedSeries.of([mp.mpc(mp.binomial(-w, r)) / psi0**r for r in range(L)], L)
    dphi = binom.scale(phi0)
    dphi = TruncatedSeries((mp.mpc(0),) + dphi.coeffs[1:], L)
    L0 = log_lambda_phi(n, phi0, log_branch, ctx)
    logser = log1p.scale(-w)
    logser = TruncatedSeries((logser.coeffs[0] + L0,) + logser.coeffs[1:], L)
    hs = []
    for row in series.h:
        coeffs = [mp.mpf(c.numerator) / c.denominator for c in row.coeffs]
        taylor = []
        for r in range(L):
            acc = mp.mpc(0)
            for mm in range(len(coeffs) - 1, r - 1, -1):
                acc = acc * phi0 + coeffs[mm] * math.comb(mm, r)
            taylor.append(acc)
        hs.append(TruncatedSeries.of(taylor, L).compose(dphi))
    varpi = combine_canonical(hs, logser, ctx)
    inv_psi = TruncatedSeries.of([(-1) ** r / psi0 ** (r + 1) for r in range(L)], L)
    rows = []
    for v in varpi:
        s = v * inv_psi
        rows.append(tuple(s.coeffs[r] * math.factorial(r) for r in range(L)))
    return JetPoint(psi0, tuple(rows))


# ---------------------------------------------------------------- paths


def singular_points(n: int) -> list[complex]:
    w = n + 2
    return [cmath.exp(2j * math.pi * k / w) for k in range(w)]


def _segment_distance(a: complex, b: complex, p: complex) -> float:
    ab = b - a
    if ab == 0:
        return abs(p - a)
    t = max(0.0, min(1.0, ((p - a) * ab.conjugate()).real / abs(ab) ** 2))
    return abs(a + t * ab - p)


MIN_CLEARANCE = 0.15


@dataclass(frozen=True)
class TransportPath:
    """Polygonal path from psi0 to the Fermat point; arcs are sampled densely."""

    waypoints: tuple[complex, ...]
    n: int
    label: str = "custom"

    @property
    def clearance(self) -> float:
        sing = singular_points(self.n)
        return min(_segment_distance(a, b, s) for a, b in zip(self.waypoints, self.waypoints[1:]) for s in sing)

    def check(self) -> None:
        if len(self.waypoints) < 2:
            raise PathError("a path needs at least two waypoints")
        if self.waypoints[-1] != 0:
            raise PathError("paths must end at the Fermat point psi = 0")
        if self.clearance < MIN_CLEARANCE:
            raise PathError(f"path clearance {self.clearance:.3f} is below {MIN_CLEARANCE}")

    def digest(self) -> str:
        text = ",".join(f"{z.real!r}:{z.imag!r}" for z in self.waypoints)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def straight(cls, n: int, psi0: complex = -3) -> "TransportPath":
        return cls((complex(psi0), 0j), n, "straight")

    @classmethod
    def detour(cls, n: int, side: int, psi0: complex = -3, radius: float = 0.2, samples: int = 8) -> "TransportPath":
        """Straight to -1-r, half circle around psi = -1 (side +1 upper, -1 lower), then to 0."""
        if side not in (1, -1):
            raise ValueError("side must be +1 (upper) or -1 (lower)")
        pts = [complex(psi0), complex(-1 - radius)]
        for s in range(1, samples):
            theta = math.pi * (1 - s / samples)
            pts.append(complex(-1 + radius * math.cos(theta), side * radius * math.sin(theta)))
        pts += [complex(-1 + radius), 0j]
        return cls(tuple(pts), n, "upper" if side == 1 else "lower")

    @classmethod
    def parse(cls, n: int, text: str, psi0: complex = -3) -> "TransportPath":
        """'straight', 'upper', 'lower' or a comma separated waypoint list."""
        if text == "straight":
            return cls.straight(n, psi0)
        if text in ("upper", "lower"):
            return cls.detour(n, 1 if text == "upper" else -1, psi0)
        pts = tuple(complex(t.replace(" ", "").replace("i", "j")) for t in text.split(","))
        return cls(pts, n, "custom")


# (path preset, log branch at psi0 = -3) reproducing the published tables
DEFAULT_ROUTES: dict[int, tuple[str, int]] = {
    3: ("straight", 0),
    4: ("upper", 0),
    6: ("upper", 0),
    8: ("upper", 0),
    10: ("upper", 0),
}


def default_path(n: int) -> TransportPath:
    preset, _ = DEFAULT_ROUTES.get(n, ("upper" if n % 2 == 0 else "straight", 0))
    return TransportPath.parse(n, preset)


def default_branch(n: int) -> int:
    return DEFAULT_ROUTES.get(n, ("", 0))[1]


# ---------------------------------------------------------------- Taylor stepping (gmpy2)


def _g_real(x):
    sign, man, exp, _ = x._mpf_
    if not man:
        return gmpy2.mpfr(0)
    v = gmpy2.mul_2exp(gmpy2.mpfr(man), exp)
    return -v if sign else v


def _to_g(x):
    """mpmath mpf/mpc -> gmpy2 mpfr/mpc without decimal round trips."""
    if hasattr(x, "_mpc_"):
        return gmpy2.mpc(_g_real(x.real), _g_real(x.imag))
    return _g_real(x)


def _from_g(x, mp):
    if isinstance(x, type(gmpy2.mpc(0))):
        return mp.mpc(_from_g(x.real, mp), _from_g(x.imag, mp))
    if x == 0:
        return mp.mpf(0)
    man, exp = x.as_mantissa_exp()
    return mp.mpf((int(man), int(exp)))


def _shifted(ode: PsiODE, c) -> list[list]:
    """q[k][i]: coefficients of p_k(c + delta) in delta."""
    out = []
    for p in ode.coeffs:
        deg = len(p) - 1
        row = []
        for i in range(deg + 1):
            acc = 0
            for e in range(deg, i - 1, -1):
                acc = acc * c + p[e] * math.comb(e, i)
            row.append(acc)
        out.append(row)
    return out


def _scaled_taylor(ode: PsiODE, initial: Sequence, N: int, q: list) -> list[list]:
    """A[k][r] = r!/(r-k)! a_r for the Taylor coefficients a_r at the centre of ``q``.

    The recurrence reads sum_{k,i} q[k][i] A[k][s-i+k] = 0 for every s >= 0.
    """
    m = ode.order
    a = [initial[r] / math.factorial(r) for r in range(m)]
    A = [[_falling(r, k) * a[r] for r in range(m)] for k in range(m + 1)]
    terms = []
    for k, row in enumerate(q):
        pairs = [(i, qi) for i, qi in enumerate(row) if qi and not (k == m and i == 0)]
        terms.append(pairs)
    inv_lead = 1 / q[m][0]
    for s in range(0, N - m + 1):
        acc = 0
        for k in range(m + 1):
            Ak = A[k]
            base = s + k
            for i, qi in terms[k]:
                if i > s:
                    break
                acc += qi * Ak[base - i]
        r = s + m
        a_new = -acc * inv_lead / _falling(r, m)
        f = 1
        for k in range(m + 1):
            A[k].append(f * a_new)
            f *= r - k
    return A


def taylor_coefficients(ode: PsiODE, c, initial: Sequence, N: int, q=None) -> list:
    """Taylor coefficients a_0..a_N at c of the solution with derivatives ``initial`` at c."""
    if q is None:
        q = _shifted(ode, c)
    return _scaled_taylor(ode, initial, N, q)[0]


def _evaluate_jet(A: list[list], h, depth: int) -> list:
    """Derivatives 0..depth at centre + h from the scaled coefficient table."""
    out = []
    for k in range(depth + 1):
        Ak = A[k]
        acc = 0
        for r in range(len(Ak) - 1, k - 1, -1):
            acc = acc * h + Ak[r]
        out.append(acc)
    return out


def _radius(n: int, c: complex) -> float:
    return min(abs(c - s) for s in singular_points(n))


def taylor_order(digits: int, ratio: float, m: int) -> int:
    return int(math.ceil((digits + 10) / -math.log10(ratio))) + m + 2


@dataclass
class TransportStats:
    steps: int = 0
    terms: list = field(default_factory=list)


def transport(ode: PsiODE, start: JetPoint, path: TransportPath, ctx: PrecisionContext,
              rho: float = 0.5, depth: int | None = None, stats: TransportStats | None = None) -> JetPoint:
    """Continue the jets of every row along ``path``; returns derivatives 0..depth at psi = 0."""
    path.check()
    mp = ctx.mp
    m = ode.order
    if depth is None:
        depth = m + 4
    if abs(complex(start.psi) - path.waypoints[0]) > 1e-12:
        raise PathError("start jet is not at the first waypoint")
    if start.depth < m - 1:
        raise ValueError("start jet must carry derivatives up to order m - 1")
    with gmpy2.context(gmpy2.get_context(), precision=ctx.bits + 64):
        rows = [[_to_g(v) for v in row[:m]] for row in start.jets]
        here = gmpy2.mpc(_to_g(start.psi))
        for target in path.waypoints[1:]:
            tgt = gmpy2.mpc(target)
            while True:
                cz = complex(here)
                remaining = tgt - here
                R = _radius(ode.n, cz)
                dist = abs(complex(remaining))
                if dist == 0:
                    break
                last = dist <= rho * R
                h = remaining if last else remaining * (rho * R / dist)
                ratio = abs(complex(h)) / R
                N = taylor_order(ctx.decimal_digits, ratio, m)
                rows = _step(ode, here, h, rows, N, m)
                here = tgt if last else here + h
                if stats is not None:
                    stats.steps += 1
                    stats.terms.append(N)
                if last:
                    break
        # full Taylor jet at the end point
        q = _shifted(ode, here)
        out = []
        for row in rows:
            a = taylor_coefficients(ode, here, row, max(depth, m), q)
            out.append(tuple(_from_g(a[k] * math.factorial(k), mp) for k in range(depth + 1)))
    return JetPoint(_from_g(gmpy2.mpc(here), mp), tuple(out))


def _step(ode: PsiODE, c, h, rows: list, N: int, m: int) -> list:
    real = c.imag == 0 and h.imag == 0
    if real:
        cr, hr = c.real, h.real
        q = _shifted(ode, cr)
        # transition matrix over the reals, then applied to the complex jets
        phi = []
        for i in range(m):
            init = [gmpy2.mpfr(1) if r == i else gmpy2.mpfr(0) for r in range(m)]
            phi.append(_evaluate_jet(_scaled_taylor(ode, init, N, q), hr, m - 1))
        return [[sum((row[i] * phi[i][k] for i in range(m)), gmpy2.mpc(0)) for k in range(m)] for row in rows]
    q = _shifted(ode, c)
    out = []
    for row in rows:
        out.append(_evaluate_jet(_scaled_taylor(ode, row, N, q), h, m - 1))
    return out


# ---------------------------------------------------------------- public composite + cache


def fermat_jets(n: int, ctx: PrecisionContext, path: TransportPath | None = None,
                log_branch: int | None = None, psi0: complex = -3, depth: int | None = None,
                rho: float = 0.5) -> JetPoint:
    """Jets at psi = 0 using the default route for n unless overridden."""
    if path is None:
        path = default_path(n) if psi0 == -3 else TransportPath.parse(n, DEFAULT_ROUTES.get(n, ("straight", 0))[0], psi0)
    if log_branch is None:
        log_branch = default_branch(n)
    ode = psi_ode(n)
    start = initial_jet(n, path.waypoints[0], log_branch, ctx, depth=ode.order - 1)
    return transport(ode, start, path, ctx, rho=rho, depth=depth)


def transport_version() -> str:
    return hashlib.sha256(Path(__file__).read_bytes()).hexdigest()[:12]


def cache_key(n: int, digits: int, path: TransportPath, branch: int, depth: int) -> str:
    return f"jets_n{n}_d{digits}_{path.digest()}_b{branch}_k{depth}_{transport_version()}"


def save_jets(jp: JetPoint, target: Path, header: dict, ctx: PrecisionContext) -> None:
    mp = ctx.mp
    lines = [json.dumps(header, sort_keys=True)]
    for row in jp.jets:
        for v in row:
            v = mp.mpc(v)
            lines.append(f"{mp.nstr(v.real, ctx.decimal_digits)} {mp.nstr(v.imag, ctx.decimal_digits)}")
    tmp = Path(str(target) + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(target)


def load_jets(source: Path, ctx: PrecisionContext) -> tuple[JetPoint, dict]:
    mp = ctx.mp
    head, *body = Path(source).read_text().splitlines()
    header = json.loads(head)
    n, depth = header["n"], header["depth"]
    vals = [mp.mpc(*map(mp.mpf, line.split())) for line in body]
    if len(vals) != (n + 1) * (depth + 1):
        raise ValueError(f"jet cache {source} is truncated")
    rows = tuple(tuple(vals[j * (depth + 1):(j + 1) * (depth + 1)]) for j in range(n + 1))
    return JetPoint(mp.mpf(0), rows), header
