"""Known values used by the verification commands and the test suite.

Decimal strings are kept as printed (truncated, not rounded), so comparisons
should allow one unit in the last printed place.
"""

from __future__ import annotations

import json
from fractions import Fraction
from functools import lru_cache
from importlib import resources

import sympy

from .numerics import QuadraticNumber
from .splitter import Charge

# field of definition of the charge planes
PLANE_FIELD = {3: 5, 4: 1, 6: 2, 8: 5, 10: 3}

# charge indices spanning each resolved summand, by level
SUMMAND_CHARGES = {
    3: {1: (1, 2), 2: (3, 4)},
    4: {1: (1, 2), 2: (3, 4), 3: (5,)},
    6: {1: (1, 2), 2: (3, 4), 3: (5, 6), 4: (7,)},
    8: {1: (1, 2), 2: (3, 4), 3: (5, 6)},
    10: {1: (1, 2), 2: (3, 4), 3: (5, 6)},
}

# c+ with l_n = 1
C_PLUS = {
    (3, 1): "-5.587567637704784064376190685029719491579683585192",
    (3, 2): "5.042486199854973654128289120367407561074741855844668",
    (4, 1): "-42.0880126267428075536142059740344624777125095306",
    (4, 2): "9.41456533191957346749114895059375683751750691454905533",
    (6, 1): "8007.10875567897668453754447710594661081111628358109",
    (6, 2): "-444.84837172669323395518041219005289087906852670921",
    (6, 3): "286.85024228542971686694718641015790360409402",
    (8, 1): "-5212961.1265694976222689791525301848232107600478095",
    (8, 2): "79815.6087659784105899046934127518572733437994818904",
    (8, 3): "-20875.2118612791484236100896801533250654143203133",
    (10, 1): "8628829314.63181296956648940152332863328728264485086",
    (10, 2): "-36916404.2175706170751471487392255869214751161125761",
    (10, 3): "4474246.1550369742331223061834922036711622476664701339",
}

# c+/c- in closed form
QUOTIENTS = {
    (3, 1): "I*sqrt(5 - 2*sqrt(5))",
    (3, 2): "I*sqrt(5 + 2*sqrt(5))",
    (4, 1): "-sqrt(3)/3*I",
    (4, 2): "-2*sqrt(3)/3*I",
    (6, 1): "(1 - sqrt(2))*I",
    (6, 2): "-I",
    (6, 3): "-(1 + sqrt(2))*I",
    (8, 1): "-I/sqrt(5 + 2*sqrt(5))",
    (8, 2): "-I*sqrt(5 - 2*sqrt(5))",
    (8, 3): "-I/sqrt(5 - 2*sqrt(5))",
    (10, 1): "(-2 + sqrt(3))*I",
    (10, 2): "-I/sqrt(3)",
    (10, 3): "-I",
}

# mirror map t at psi = 0
MIRROR = {
    3: "1/2 + I*sqrt(1/4 + sqrt(5)/10)",
    4: "1/2 + I*sqrt(3)/2",
    6: "1/2 + (1 + sqrt(2))*I/2",
    8: "1/2 + I*sqrt(5 + 2*sqrt(5))/2",
    10: "1/2 + (1 + sqrt(3)/2)*I",
}

# Hodge-Tate class for n = 4: c- (2 pi i)^2 / i
HODGE_TATE_N4 = 216

L_VALUES = {
    1: "209.93282899673655336021291418393011340981657763388528082",
    2: "5.7693338146389626445008495222440642858917514380024752429",
    3: "0.8720345004205937749699892581739981454552490455009608792",
}

# c+(H(m)) / L(f5, m) with l_4 = 1
DELIGNE_RATIOS = {1: Fraction(24, 11), 2: Fraction(288), 3: Fraction(-20736)}

# leading coefficients [phi^1..phi^4] of h_0..h_3 for n = 3, phi = psi^-5
SERIES_N3 = {
    0: (Fraction(24, 625), Fraction(4536, 390625), Fraction(1345344, 244140625),
        Fraction(488864376, 152587890625)),
    1: (Fraction(154, 625), Fraction(32409, 390625), Fraction(29965432, 732421875),
        Fraction(296135721, 12207031250)),
    2: (Fraction(46, 125), Fraction(168327, 781250), Fraction(271432352, 2197265625),
        Fraction(57606926969, 732421875000)),
    3: (Fraction(-276, 125), Fraction(-79161, 156250), Fraction(-373292959, 2197265625),
        Fraction(-104105463971, 1464843750000)),
}


def _load(name: str):
    return json.loads((resources.files("fermat_periods") / "data" / name).read_text())


@lru_cache(maxsize=None)
def reference_jets() -> dict[tuple[int, int, int], tuple[str, str]]:
    """(n, j, k) -> (real, imaginary) strings of (d/dpsi)^k [psi^-1 varpi_j] at 0."""
    return {tuple(map(int, key.split(","))): tuple(v) for key, v in _load("reference_jets.json").items()}


@lru_cache(maxsize=None)
def reference_odes() -> dict[tuple[int, int], tuple[tuple[int, ...], ...]]:
    """(n, level) -> coefficient lists, ascending in psi, for d^0 .. d^order."""
    return {(e["n"], e["level"]): tuple(tuple(c) for c in e["coeffs"]) for e in _load("reference_odes.json")}


@lru_cache(maxsize=None)
def reference_charges(n: int) -> dict[int, Charge]:
    """Charge index -> Charge over Q(sqrt d) with d = PLANE_FIELD[n]."""
    d = PLANE_FIELD[n]
    out = {}
    for k, entry in _load("reference_charges.json")[str(n)].items():
        coords = tuple(QuadraticNumber(Fraction(a), Fraction(b), d) for a, b in entry["coords"])
        out[int(k)] = Charge(coords, d)
    return out


def closed_form(text: str) -> sympy.Expr:
    return sympy.sympify(text)
