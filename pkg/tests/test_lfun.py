from fractions import Fraction

import pytest
import sympy as sp

from trivzero.hida import EigenMember, FamilySlice, family_slice, lambda_log_derivative, tate_period_oracle
from trivzero.lfun import (LevelData, Symbolic, SymbolMismatch, euler_factor_Dq, eval_poly,
                           interpolation_constants, l_invariant_report, left_inverse_check, two_variable_Lp)
from trivzero.padic import DomainError, agreement, padic

CURVE_15A = [1, 1, 1, -10, -10]


@pytest.fixture(scope="module")
def small_slice():
    return family_slice(5, 3, 2, [8], prec=20)


def test_euler_factor_steinberg_and_supersingular():
    assert euler_factor_Dq(5, 1, 1, 2, steinberg=True) == [1, -1]
    assert euler_factor_Dq(5, -1, 1, 2, steinberg=True) == [1, -1]
    assert euler_factor_Dq(7, 0, 0, 2, steinberg=True) == [1]


@pytest.mark.parametrize("q,a,k", [(2, -1, 2), (7, 3, 4), (11, -5, 6)])
def test_euler_factor_from_roots(q, a, k):
    X, x = sp.symbols("X x")
    al, be = sp.roots(x**2 - a * x + q ** (k - 1), x, multiple=True)
    expr = sp.expand((1 - al**2 * X) * (1 - al * be * X) * (1 - be**2 * X))
    want = [Fraction(str(sp.nsimplify(sp.simplify(c)))) for c in sp.Poly(expr, X).all_coeffs()[::-1]]
    got = euler_factor_Dq(q, a, 1, k)
    assert got == want
    assert eval_poly(got, Fraction(1, q)) == eval_poly(want, Fraction(1, q))


def test_symbolic_constants_cancel_or_refuse():
    x = Symbolic.make(Fraction(3, 5), i=-1)
    assert (x / x).embed(3, 10) == padic(3, 1, 10)
    with pytest.raises(SymbolMismatch):
        x.embed(3, 10)


def test_interpolation_constants_at_steinberg_point():
    lam = padic(3, -1, 20)
    c = interpolation_constants(2, 1, lam, LevelData(p=3, N=5), True)
    assert c.E1.is_zero()
    assert c.E2 == padic(3, 1, 20)
    assert c.C.symbols == (("i", -1),)
    assert c.C.value.to_rational() == Fraction(1, 5)
    c4 = interpolation_constants(4, 1, lam, LevelData(p=3, N=5), False)
    assert c4.E1 == padic(3, -8, 20)
    assert not c4.E1.is_zero() and c4.n0 == 0


def test_interpolation_constants_domain():
    with pytest.raises(DomainError):
        interpolation_constants(2, 3, padic(3, 1, 10), LevelData(), True)


def test_level_data_validation():
    with pytest.raises(DomainError):
        LevelData(p=3, N=15).validate()
    with pytest.raises(DomainError):
        LevelData(p=3, N=5, N1=2).validate()
    with pytest.raises(DomainError):
        LevelData(p=3, N=5, R=3).validate()


def test_vanishing_on_line_t_one(small_slice):
    for k in (2, 8):
        r = two_variable_Lp(small_slice, k, 1)
        assert r.value.is_zero() and r.value.prec >= 5
        assert r.provenance["level"]["N"] == 5


def test_left_inverses_agree_at_k2(small_slice):
    r = left_inverse_check(small_slice, 2, 1)
    assert r["equal"]


def test_l_invariant_rejects_non_steinberg_point():
    m = EigenMember(padic(3, 2, 20), 1, [], [], [])
    S = FamilySlice(5, 3, 2, {2: m, 8: m}, {}, {})
    with pytest.raises(DomainError):
        l_invariant_report(S, 2)


def test_family_l_invariant_matches_tate_period():
    S = family_slice(5, 3, 2, [56], prec=20)
    d = lambda_log_derivative(S, 2, 56)
    tate = tate_period_oracle(CURVE_15A, 3, 20).value
    assert agreement(d.quotient * (-2), tate) >= 5
