"""Arbitrary-precision carriers, exact quadratic numbers and truncated series.

Real and complex values are mpmath ``mpf``/``mpc`` objects owned by a
per-precision ``MPContext``. Contexts are never mutated after creation, so a
``PrecisionContext`` can be shared freely between threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Generic, Iterable, Sequence, TypeVar

import mpmath

T = TypeVar("T")

DEFAULT_DIGITS = {3: 120, 4: 150, 6: 250, 8: 400, 10: 500}


@lru_cache(maxsize=None)
def _mpcontext(digits: int) -> mpmath.ctx_mp.MPContext:
    mp = mpmath.MPContext()
    mp.dps = digits
    return mp


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision plus the guard digits used for zero tests."""

    decimal_digits: int
    guard_digits: int = 15

    def __post_init__(self) -> None:
        if self.decimal_digits < 30:
            raise ValueError("decimal_digits must be at least 30")
        if self.guard_digits <= 0 or self.guard_digits >= self.decimal_digits:
            raise ValueError("guard_digits must be positive and below decimal_digits")

    @classmethod
    def for_n(cls, n: int, digits: int | None = None) -> "PrecisionContext":
        if digits is None:
            if n not in DEFAULT_DIGITS:
                raise ValueError(f"no default precision for n={n}")
            digits = DEFAULT_DIGITS[n]
        return cls(digits)

    @property
    def mp(self) -> mpmath.ctx_mp.MPContext:
        return _mpcontext(self.decimal_digits)

    @property
    def bits(self) -> int:
        return self.mp.prec

    @property
    def tol_exponent(self) -> int:
        return self.decimal_digits - self.guard_digits

    @property
    def tolerance(self):
        return self.mp.mpf(10) ** (-self.tol_exponent)

    def raised(self, extra: int) -> "PrecisionContext":
        return PrecisionContext(self.decimal_digits + extra, self.guard_digits)

    def convert(self, x):
        """Bring ``x`` (int, Fraction, QuadraticNumber, str or mpmath value) into this context."""
        mp = self.mp
        if isinstance(x, Fraction):
            return mp.mpf(x.numerator) / x.denominator
        if isinstance(x, QuadraticNumber):
            return x.numeric(self)
        if isinstance(x, complex) or (hasattr(x, "imag") and not isinstance(x, (int, float))):
            return mp.mpc(x)
        return mp.mpf(x)

    def pi2i(self):
        return self.mp.mpc(0, 2 * self.mp.pi)


def is_zero(x, ctx: PrecisionContext, scale=1) -> bool:
    """The single "numerically zero" test: |x| < scale * 10^-(digits - guard)."""
    return ctx.mp.fabs(x) < ctx.tolerance * scale


def magnitude_exponent(x, ctx: PrecisionContext) -> float:
    """log10 |x|, or -inf for an exact zero."""
    a = ctx.mp.fabs(x)
    if a == 0:
        return -math.inf
    return float(ctx.mp.log10(a))


# ---------------------------------------------------------------- quadratic numbers


def squarefree_part(d: int) -> int:
    if d <= 0:
        raise ValueError("d must be positive")
    out, p = 1, 2
    while p * p <= d:
        while d % (p * p) == 0:
            d //= p * p
        if d % p == 0:
            out *= p
            d //= p
        p += 1
    return out * d


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot make an exact rational from {type(x).__name__}")


@dataclass(frozen=True)
class QuadraticNumber:
    """Exact element a + b*sqrt(d) of a real quadratic field (d = 1 means Q)."""

    a: Fraction
    b: Fraction = Fraction(0)
    d: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", _as_fraction(self.a))
        object.__setattr__(self, "b", _as_fraction(self.b))
        if self.d < 1 or squarefree_part(self.d) != self.d:
            raise ValueError(f"d={self.d} is not a squarefree positive integer")
        if self.d == 1 and self.b != 0:
            object.__setattr__(self, "a", self.a + self.b)
            object.__setattr__(self, "b", Fraction(0))

    # field bookkeeping
    def _field(self, other: "QuadraticNumber") -> int:
        if self.d == other.d or other.b == 0:
            return self.d
        if self.b == 0:
            return other.d
        raise ValueError(f"mixing Q(sqrt({self.d})) and Q(sqrt({other.d}))")

    def _coerce(self, other) -> "QuadraticNumber":
        if isinstance(other, QuadraticNumber):
            return other
        if isinstance(other, (int, Fraction)):
            return QuadraticNumber(Fraction(other), Fraction(0), self.d)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return QuadraticNumber(self.a + other.a, self.b + other.b, self._field(other))

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.a, -self.b, self.d)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        d = self._field(other)
        return QuadraticNumber(
            self.a * other.a + d * self.b * other.b,
            self.a * other.b + self.b * other.a,
            d,
        )

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        return self.a * self.a - self.d * self.b * self.b

    def conjugate(self) -> "QuadraticNumber":
        return QuadraticNumber(self.a, -self.b, self.d)

    def inverse(self) -> "QuadraticNumber":
        nrm = self.norm()
        if nrm == 0:
            raise ZeroDivisionError("inverse of zero")
        return QuadraticNumber(self.a / nrm, -self.b / nrm, self.d)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __bool__(self) -> bool:
        return self.a != 0 or self.b != 0

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        if not isinstance(other, QuadraticNumber):
            return NotImplemented
        if self.b == 0 and other.b == 0:
            return self.a == other.a
        return self.d == other.d and self.a == other.a and self.b == other.b

    def __hash__(self) -> int:
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def is_rational(self) -> bool:
        return self.b == 0

    def with_field(self, d: int) -> "QuadraticNumber":
        if self.b and self.d != d:
            raise ValueError(f"{self} is not in Q(sqrt({d}))")
        return QuadraticNumber(self.a, self.b, d)

    def numeric(self, ctx: PrecisionContext):
        mp = ctx.mp
        val = mp.mpf(self.a.numerator) / self.a.denominator
        if self.b:
            val += mp.mpf(self.b.numerator) / self.b.denominator * mp.sqrt(self.d)
        return val

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        tail = f"{abs(self.b)}*sqrt({self.d})"
        if self.a == 0:
            return ("-" if self.b < 0 else "") + tail
        return f"{self.a}{'-' if self.b < 0 else '+'}{tail}"

    __repr__ = __str__

    @classmethod
    def parse(cls, text: str, d: int | None = None) -> "QuadraticNumber":
        """Parse strings such as ``-3/2``, ``5/2-1/2*sqrt(5)`` or ``sqrt(2)``."""
        s = text.replace(" ", "")
        m = re.fullmatch(
            r"(?:(?P<a>[+-]?\d+(?:/\d+)?)(?=[+-]|$))?"
            r"(?:(?P<sign>[+-])?(?:(?P<b>\d+(?:/\d+)?)\*)?sqrt\((?P<d>\d+)\))?",
            s,
        )
        if not s or m is None or (m.group("a") is None and m.group("d") is None):
            raise ValueError(f"cannot parse quadratic number {text!r}")
        a = Fraction(m.group("a")) if m.group("a") else Fraction(0)
        if m.group("d") is None:
            return cls(a, Fraction(0), d or 1)
        b = Fraction(m.group("b")) if m.group("b") else Fraction(1)
        if m.group("sign") == "-":
            b = -b
        dd = int(m.group("d"))
        if d is not None and d != dd:
            raise ValueError(f"field mismatch: sqrt({dd}) in Q(sqrt({d}))")
        return cls(a, b, dd)


def qvec(values: Iterable, d: int = 1) -> tuple[QuadraticNumber, ...]:
    """Coerce ints, Fractions, strings or QuadraticNumbers into a vector over Q(sqrt d)."""
    out = []
    for v in values:
        if isinstance(v, str):
            v = QuadraticNumber.parse(v)
        elif not isinstance(v, QuadraticNumber):
            v = QuadraticNumber(_as_fraction(v))
        out.append(v.with_field(d))
    return tuple(out)


# ---------------------------------------------------------------- truncated series


@dataclass(frozen=True)
class TruncatedSeries(Generic[T]):
    """Power series truncated at order M: coefficients c_0..c_{M-1}."""

    coeffs: tuple
    order: int

    @classmethod
    def of(cls, coeffs: Sequence, order: int, zero=0) -> "TruncatedSeries":
        c = list(coeffs[:order])
        c += [zero] * (order - len(c))
        return cls(tuple(c), order)

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        m = min(self.order, other.order)
        return TruncatedSeries(tuple(self.coeffs[i] + other.coeffs[i] for i in range(m)), m)

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        m = min(self.order, other.order)
        return TruncatedSeries(tuple(self.coeffs[i] - other.coeffs[i] for i in range(m)), m)

    def scale(self, c) -> "TruncatedSeries":
        return TruncatedSeries(tuple(c * x for x in self.coeffs), self.order)

    def __mul__(self, other) -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        m = min(self.order, other.order)
        a, b = self.coeffs, other.coeffs
        out = []
        for k in range(m):
            acc = a[0] * b[k]
            for i in range(1, k + 1):
                if a[i] and b[k - i]:
                    acc = acc + a[i] * b[k - i]
            out.append(acc)
        return TruncatedSeries(tuple(out), m)

    def __rmul__(self, other) -> "TruncatedSeries":
        return self.scale(other)

    def reciprocal(self) -> "TruncatedSeries":
        a = self.coeffs
        if not a[0]:
            raise ZeroDivisionError("series with zero constant term has no reciprocal")
        inv0 = 1 / a[0]
        out = [inv0]
        for k in range(1, self.order):
            acc = a[1] * out[k - 1]
            for i in range(2, k + 1):
                acc = acc + a[i] * out[k - i]
            out.append(-acc * inv0)
        return TruncatedSeries(tuple(out), self.order)

    def compose(self, inner: "TruncatedSeries") -> "TruncatedSeries":
        """self(inner(x)) for an inner series with zero constant term (Horner)."""
        if inner.coeffs[0]:
            raise ValueError("inner series must vanish at 0")
        m = min(self.order, inner.order)
        acc = TruncatedSeries.of([self.coeffs[m - 1]], m, zero=self.coeffs[0] * 0)
        for k in range(m - 2, -1, -1):
            acc = acc * inner
            acc = TruncatedSeries((acc.coeffs[0] + self.coeffs[k],) + acc.coeffs[1:], m)
        return acc

    def map(self, f: Callable) -> "TruncatedSeries":
        return TruncatedSeries(tuple(f(x) for x in self.coeffs), self.order)

    def __getitem__(self, k: int):
        return self.coeffs[k]

    def __len__(self) -> int:
        return self.order


# ---------------------------------------------------------------- special values


def zeta_odd(m: int, ctx: PrecisionContext):
    """zeta(m) for odd m >= 3 by the Borwein alternating-series acceleration.

    With d_k = N sum_{i<=k} (N+i-1)! 4^i / ((N-i)! (2i)!) the error of the
    N-term formula is at most 3 (3+sqrt 8)^-N / (1 - 2^(1-m)).
    """
    if not isinstance(m, int) or m < 3 or m % 2 == 0:
        raise ValueError("zeta_odd needs an odd integer m >= 3")
    mp = ctx.mp
    target = ctx.decimal_digits + 10
    n_terms = int(math.ceil(target * math.log(10) / math.log(3 + math.sqrt(8)))) + 2
    d = []
    acc = 0
    term = Fraction(1, n_terms)  # (N+i-1)! 4^i / ((N-i)! (2i)!) at i = 0
    for i in range(n_terms + 1):
        if i > 0:
            term *= Fraction((n_terms + i - 1) * 4 * (n_terms - i + 1), (2 * i - 1) * (2 * i))
        acc += term
        d.append(n_terms * acc)
    dn = d[n_terms]
    with_extra = _mpcontext(ctx.decimal_digits + 20)
    s = with_extra.mpf(0)
    for k in range(n_terms):
        w = d[k] - dn
        val = with_extra.mpf(w.numerator) / w.denominator / with_extra.mpf(k + 1) ** m
        s = s - val if k % 2 else s + val
    dn_f = with_extra.mpf(dn.numerator) / dn.denominator
    res = -s / (dn_f * (1 - with_extra.mpf(2) ** (1 - m)))
    return mp.mpf(res)


def incomplete_gamma_int(s: int, x, ctx: PrecisionContext):
    """Upper incomplete gamma Gamma(s, x) for integer 1 <= s <= 12 by the finite recurrence."""
    if not isinstance(s, int) or s < 1 or s > 12:
        raise ValueError("incomplete_gamma_int supports integer orders 1..12")
    mp = ctx.mp
    x = mp.mpf(x)
    if x < 0:
        raise ValueError("incomplete_gamma_int needs x >= 0")
    ex = mp.exp(-x)
    g = ex
    xp = mp.mpf(1)
    for k in range(1, s):
        xp *= x
        g = k * g + xp * ex
    return g
