from fractions import Fraction

import pytest

from trivzero.hida import (EigenMember, FamilyMatchError, FamilySlice, RegularityError, eigen_package,
                           family_slice, lambda_log_derivative, level_space_np, log_unit, petersson_functional,
                           tate_period_oracle, u_level_inverse)
from trivzero.padic import DomainError, agreement, padic, vp
import flint

from trivzero.qseries import cusp_space

CURVE_15A = [1, 1, 1, -10, -10]


@pytest.fixture(scope="module")
def pkg15():
    return eigen_package(level_space_np(2, 5, 3), 3, 20)


def test_level_15_weight_2(pkg15):
    (f,) = [m for m in pkg15.members if m.kind == "cusp"]
    assert f.lam == padic(3, -1, 20)
    assert [f.a(n).lift() if f.a(n).valuation() >= 0 else None for n in (1, 2, 5, 7)] == [1, 2**0 * -1 % 3**20, 1, 0]


def test_level_11_ordinary_member():
    V = cusp_space(2, 11, Q=11 * 6).saturate(11)
    pkg = eigen_package(V, 11, 10, nq=11)
    cusp = [m for m in pkg.members if m.kind == "cusp"]
    assert len(cusp) == 1 and cusp[0].lam == padic(11, 1, 10)


def test_eisenstein_branch_lambda_one(pkg15):
    # the two ordinary Eisenstein lines share lambda = 1 and form one residual cluster
    assert pkg15.clusters == {1: 2, 2: 1}
    U = flint.fmpq_mat([[flint.fmpq(x.numerator, x.denominator) for x in r] for r in pkg15.U])
    x1 = flint.fmpq_poly([-1, 1])
    assert U.charpoly() % (x1 * x1) == 0
    assert pkg15.ordinary_rank == 3


def test_petersson_functional(pkg15):
    (f,) = [m for m in pkg15.members if m.kind == "cusp"]
    assert petersson_functional(f, f.vector) == padic(3, 1, 20)
    for g in pkg15.members:
        if g is not f:
            assert petersson_functional(f, g.vector).is_zero()
    a, b = padic(3, 7, 20), padic(3, Fraction(-2, 5), 20)
    G1 = [padic(3, c, 20) for c in (1, Fraction(2, 7), -4, 9)]
    G2 = [padic(3, c, 20) for c in (0, 5, Fraction(1, 2), 1)]
    mix = [a * x + b * y for x, y in zip(G1, G2)]
    lhs = petersson_functional(f, mix)
    rhs = a * petersson_functional(f, G1) + b * petersson_functional(f, G2)
    assert (lhs - rhs).is_zero()


def test_family_slice_through_15a():
    S = family_slice(5, 3, 2, [8], prec=20)
    assert set(S.members) == {2, 8}
    assert all(S.certificates[8].values()) and set(S.certificates[8]) == {2, 7, 11, 13}
    assert S.lam(8).valuation() == 0
    single = family_slice(5, 3, 2, [], prec=20)
    assert set(single.members) == {2}
    with pytest.raises(FamilyMatchError):
        family_slice(5, 3, 2, [5], prec=20)


def test_tame_and_level_routes_agree():
    a = family_slice(5, 3, 2, [8], prec=20, route="level")
    b = family_slice(5, 3, 2, [8], prec=20, route="tame")
    assert a.lam(8) == b.lam(8)


def _const_member(lam):
    return EigenMember(lam, 1, [], [], [])


def test_derivative_of_constant_family_is_zero():
    one = padic(3, 1, 20)
    S = FamilySlice(5, 3, 2, {2: _const_member(one), 8: _const_member(one)}, {}, {})
    d = lambda_log_derivative(S, 2, 8)
    assert d.value.is_zero() and d.certified == 1


def test_steinberg_point_and_finer_step():
    S = family_slice(5, 3, 2, [20, 56], prec=20)
    lam0 = S.lam(2)
    assert lam0 * lam0 == padic(3, 1, 20) and log_unit(lam0).is_zero()
    d20 = lambda_log_derivative(S, 2, 20)
    d56 = lambda_log_derivative(S, 2, 56)
    assert agreement(d20.value, d56.value) >= min(d20.certified, d56.certified)


def test_u_level_inverse():
    assert u_level_inverse({}, 5, 5) == 1
    assert u_level_inverse({5: 1}, 5) == 1
    assert u_level_inverse({5: -1, 3: -1}, 15) == 1
    assert u_level_inverse({7: -1}, 7) == 1 and u_level_inverse({7: -1}, 49, 7) == 1
    with pytest.raises(RegularityError):
        u_level_inverse({5: 0}, 5)


def test_tate_period():
    T = tate_period_oracle(CURVE_15A, 3, 20)
    assert T.q.valuation() == -vp(T.j, 3) == 4
    assert T.residual >= 20
    assert not T.split
    with pytest.raises(DomainError):
        tate_period_oracle(CURVE_15A, 3, 20, require_split=True)
    with pytest.raises(DomainError):
        tate_period_oracle(CURVE_15A, 7, 20)  # good reduction at 7
