"""Canonical logarithmic solutions of the hypergeometric operator at phi = 0.

The operator is D_n = theta^(n+1) - phi * prod_{k=1}^{n+1} (theta + k/(n+2)),
theta = phi d/dphi. Its Frobenius basis is

    varpi_j = (2 pi i)^-j sum_{k<=j} C(j, k) h_k(phi) log^(j-k)(lambda phi),

with lambda = (n+2)^-(n+2), h_0(0) = 1 and h_k(0) = 0 otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

from .numerics import PrecisionContext, TruncatedSeries


class TruncationError(ValueError):
    """The series truncation cannot reach the requested tolerance at this point."""


@dataclass(frozen=True)
class CanonicalSeries:
    n: int
    order: int
    h: tuple[TruncatedSeries, ...]

    @property
    def scale(self) -> Fraction:
        return Fraction(1, (self.n + 2) ** (self.n + 2))

    def coefficient(self, k: int, m: int) -> Fraction:
        return self.h[k].coeffs[m]


def eps_jet(coeffs, n: int) -> TruncatedSeries:
    """An element of Q[eps]/(eps^(n+1))."""
    return TruncatedSeries.of([Fraction(c) for c in coeffs], n + 1, zero=Fraction(0))


def _linear_times(jet: list[Fraction], c: Fraction) -> list[Fraction]:
    """jet * (c + eps), truncated."""
    out = [c * jet[0]]
    for i in range(1, len(jet)):
        out.append(c * jet[i] + jet[i - 1])
    return out


def _divide_linear(jet: list[Fraction], c: Fraction) -> list[Fraction]:
    """jet / (c + eps), truncated; c != 0."""
    out = []
    prev = Fraction(0)
    for i in range(len(jet)):
        prev = (jet[i] - prev) / c
        out.append(prev)
    return out


@lru_cache(maxsize=32)
def build_h_series(n: int, order: int) -> CanonicalSeries:
    """Exact h_0..h_n through phi^(order-1) from the eps-jet Frobenius recursion."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if order < 2:
        raise ValueError("truncation order must be at least 2")
    w = n + 1
    fact = [math.factorial(k) for k in range(w)]
    jet = [Fraction(1)] + [Fraction(0)] * n
    rows: list[list[Fraction]] = [[jet[k] * fact[k]] for k in range(w)]
    for m in range(1, order):
        for k in range(1, n + 2):
            jet = _linear_times(jet, Fraction(m - 1) + Fraction(k, n + 2))
        for _ in range(n + 1):
            jet = _divide_linear(jet, Fraction(m))
        for k in range(w):
            rows[k].append(jet[k] * fact[k])
    h = tuple(TruncatedSeries(tuple(r), order) for r in rows)
    return CanonicalSeries(n, order, h)


def default_order(ctx: PrecisionContext, radius: float = 0.9) -> int:
    """Smallest M with radius^M < 10^-(digits+5)."""
    return int(math.ceil((ctx.decimal_digits + 5) / -math.log10(radius))) + 1


def order_for_point(n: int, abs_phi: float, ctx: PrecisionContext) -> int:
    """Truncation for |phi| well inside the disc; the coefficients grow like m^n."""
    if abs_phi >= 0.9:
        raise TruncationError(f"|phi| = {abs_phi:.3g} is too close to the singular circle")
    if abs_phi == 0:
        return 2
    target = ctx.decimal_digits + 5
    m = 2
    while m * math.log10(abs_phi) + n * math.log10(m + 1) + 2 * n > -target:
        m += 1
    return m


def log_lambda_phi(n: int, phi, log_branch: int, ctx: PrecisionContext):
    mp = ctx.mp
    return -(n + 2) * mp.log(n + 2) + mp.log(phi) + log_branch * ctx.pi2i()


def _eval_series(series: TruncatedSeries, x, ctx: PrecisionContext):
    mp = ctx.mp
    acc = mp.mpf(0)
    for c in reversed(series.coeffs):
        acc = acc * x + mp.mpf(c.numerator) / c.denominator
    return acc


def eval_canonical(series: CanonicalSeries, phi, log_branch: int, ctx: PrecisionContext) -> list:
    """varpi_0(phi)..varpi_n(phi) with log(lambda phi) = Log(lambda phi) + 2 pi i log_branch."""
    mp = ctx.mp
    phi = mp.mpc(phi)
    if phi == 0:
        raise ValueError("the logarithmic solutions need phi != 0")
    aphi = float(mp.fabs(phi))
    needed = order_for_point(series.n, aphi, ctx)
    if needed > series.order:
        raise TruncationError(f"order {series.order} is below the {needed} terms needed at |phi|={aphi:.3g}")
    h = [_eval_series(s, phi, ctx) for s in series.h]
    L = log_lambda_phi(series.n, phi, log_branch, ctx)
    return combine_canonical(h, L, ctx)


def combine_canonical(h: list, L, ctx: PrecisionContext) -> list:
    """Assemble varpi_j from h_k values (or series) and the logarithm L (value or series)."""
    n = len(h) - 1
    inv2pii = 1 / ctx.pi2i()
    powers = [None] * (n + 1)
    powers[0] = 1
    for p in range(1, n + 1):
        powers[p] = L if p == 1 else powers[p - 1] * L
    out = []
    for j in range(n + 1):
        acc = h[j]
        for k in range(j):
            acc = acc + h[k] * powers[j - k] * math.comb(j, k)
        out.append(acc * inv2pii**j)
    return out


def monodromy_T0(n: int) -> list[list[int]]:
    """Lower-triangular binomial matrix: varpi(branch + 1) = T0 varpi(branch)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return [[math.comb(j, k) for k in range(n + 1)] for j in range(n + 1)]


def save_series(series: CanonicalSeries, path: Path) -> None:
    lines = [f"n {series.n} order {series.order}"]
    for row in series.h:
        lines.append(" ".join(f"{c.numerator}/{c.denominator}" for c in row.coeffs))
    tmp = Path(str(path) + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(path)


def load_series(path: Path) -> CanonicalSeries:
    head, *rows = Path(path).read_text().splitlines()
    parts = head.split()
    n, order = int(parts[1]), int(parts[3])
    h = tuple(TruncatedSeries(tuple(Fraction(t) for t in r.split()), order) for r in rows)
    if len(h) != n + 1 or any(len(s.coeffs) != order for s in h):
        raise ValueError(f"malformed series cache {path}")
    return CanonicalSeries(n, order, h)
