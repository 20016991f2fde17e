import json
from fractions import Fraction

import mpmath
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from fermat_periods.lfunc import (
    F5_CHECKS,
    FormError,
    ModularForm,
    SignIndeterminate,
    completed_l,
    default_form_path,
    f5_coefficients,
    infer_sign,
    l_value,
    load_form,
    save_form,
)
from fermat_periods.numerics import PrecisionContext
from fermat_periods.reference import L_VALUES

CTX = PrecisionContext(60)


@pytest.fixture(scope="module")
def form():
    return load_form()


def _legendre_minus3(p: int) -> int:
    return 0 if p == 3 else (1 if p % 3 == 1 else -1)


def test_bundled_coefficients_regenerate(form):
    assert form.label == "432.5.e.a" and form.weight == 5 and form.level == 432
    assert list(form.an) == f5_coefficients(form.count)


def test_q_expansion_values(form):
    for n, v in F5_CHECKS.items():
        assert form.an[n - 1] == v
    assert (form.an[6], form.an[12], form.an[18], form.an[24], form.an[30]) == (-71, -337, 601, 625, -194)


def test_hecke_relations(form):
    a = (0,) + form.an
    N = form.count
    for n in range(1, N + 1):
        if n % 2 == 0 or n % 3 == 0:
            assert a[n] == 0
    for p in sympy.primerange(5, 200):
        chi = _legendre_minus3(p)
        assert abs(a[p]) <= 2 * p**2
        if chi == -1:
            assert a[p] == 0
        pk = [1, a[p]]
        while p ** len(pk) <= N:
            pk.append(a[p] * pk[-1] - chi * p**4 * pk[-2])
        for r, want in enumerate(pk):
            if p**r <= N:
                assert a[p**r] == want
    for m in range(1, 60):
        for n in range(1, 60):
            if m * n <= N and sympy.gcd(m, n) == 1:
                assert a[m * n] == a[m] * a[n]


def _mellin_oracle(form: ModularForm, s: int, eps: int, dps: int = 25):
    """Lambda(s) = int_1^inf g(y) (y^(s-1) + eps y^(k-1-s)) dy by quadrature, then L(s)."""
    with mpmath.workdps(dps + 10):
        N, k = form.level, form.weight
        c = 2 * mpmath.pi / mpmath.sqrt(N)
        terms = form.an[:400]

        def g(y):
            return mpmath.fsum(a * mpmath.exp(-c * n * y) for n, a in enumerate(terms, start=1) if a)

        lam = mpmath.quad(lambda y: g(y) * (y ** (s - 1) + eps * y ** (k - 1 - s)), [1, 3, 10, 40, mpmath.inf])
        return lam * (2 * mpmath.pi) ** s / (mpmath.sqrt(N) ** s * mpmath.gamma(s))


@pytest.mark.parametrize("s", [1, 2, 3])
def test_l_values_against_quadrature(form, s):
    got = l_value(form, s, CTX)
    assert got.sign_used == 1
    want = _mellin_oracle(form, s, 1)
    assert abs(got.value - want) < mpmath.mpf(10) ** -20 * abs(want)


@pytest.mark.parametrize("s", [1, 2, 3])
def test_l_values_against_reference(form, s):
    got = l_value(form, s, CTX).value
    ref = CTX.mp.mpf(L_VALUES[s])
    assert abs(got - ref) < CTX.mp.mpf(10) ** -50 * ref


def test_functional_equation_symmetry(form):
    # Lambda(s) = eps Lambda(k - s)
    for s in (1, 2):
        a = completed_l(form, s, CTX, 1)
        b = completed_l(form, form.weight - s, CTX, 1)
        assert abs(a - b) < CTX.tolerance * abs(a)


@settings(max_examples=8, deadline=None)
@given(st.fractions(min_value=Fraction(4, 5), max_value=Fraction(5, 4), max_denominator=50))
def test_completed_value_independent_of_split(form, t):
    ctx = PrecisionContext(40)
    base = completed_l(form, 2, ctx, 1)
    moved = completed_l(form, 2, ctx, 1, t)
    assert abs(base - moved) < ctx.tolerance * abs(base)


def test_sign_inference(form):
    assert infer_sign(form, CTX) == 1
    bad = ModularForm("bad", 5, 432, form.an[:3] + (form.an[3] + 1,) + form.an[4:])
    with pytest.raises(SignIndeterminate):
        infer_sign(bad, CTX)


def test_explicit_sign_is_respected(form):
    wrong = l_value(form, 1, CTX, eps=-1)
    assert wrong.sign_used == -1
    assert abs(wrong.value - l_value(form, 1, CTX).value) > 1


def test_too_few_coefficients(form):
    short = ModularForm("short", 5, 432, form.an[:100])
    with pytest.raises(FormError):
        l_value(short, 1, CTX, eps=1)
    with pytest.raises(FormError):
        short.check_precision(CTX)


def test_load_form_errors(tmp_path):
    with pytest.raises(FormError):
        load_form(tmp_path / "missing.json")
    with pytest.raises(FormError):
        load_form("https://example.invalid/form.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"label": "x", "weight": 5, "level": 432, "an": [1, 0, 0.5]}))
    with pytest.raises(FormError):
        load_form(bad)
    bad.write_text(json.dumps({"label": "x", "weight": 5, "an": [1]}))
    with pytest.raises(FormError):
        load_form(bad)
    bad.write_text(json.dumps({"label": "x", "weight": 5, "level": 432, "an": [2, 1]}))
    with pytest.raises(FormError):
        load_form(bad)
    with pytest.raises(ValueError):
        l_value(load_form(), 5, CTX)


def test_save_load_round_trip(form, tmp_path):
    target = tmp_path / "f5.json"
    save_form(form, target)
    assert load_form(target) == form
    assert default_form_path().exists()


class _DoubledCutoff(ModularForm):
    def terms_needed(self, ctx, t=1):
        return 2 * super().terms_needed(ctx, t)


def test_cutoff_stability(form):
    doubled = _DoubledCutoff(form.label, form.weight, form.level, form.an)
    for s in (1, 2, 3):
        base = l_value(form, s, CTX, eps=1)
        more = l_value(doubled, s, CTX, eps=1)
        assert more.terms_used == 2 * base.terms_used
        assert abs(base.value - more.value) < CTX.tolerance * abs(base.value)
