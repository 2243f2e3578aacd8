from fractions import Fraction

import flint
import pytest

from oracles import ordinary_rank_mod_p
from trivzero.characters import DirichletCharacter, kronecker_sigma
from trivzero.padic import DomainError
from trivzero.qseries import (QExp1, QExp2, TruncationError, build_space, cusp_space, dim_modular_forms,
                              eisenstein_gl2, eta_quotient, fit_tensor, hecke_T, hecke_U, hecke_V, slope_project,
                              _reduce, zp_matrix)

TRIV = DirichletCharacter.trivial(1)


def _sigma(n, k):
    return sum(d**k for d in range(1, n + 1) if n % d == 0)


def test_eta_quotients():
    delta = eta_quotient([(1, 24)], Q=5)
    assert delta[1] == 1 and delta[2] == -24
    f11 = eta_quotient([(1, 2), (11, 2)], Q=10)
    assert f11[2] == -2
    assert eta_quotient([], Q=4) == QExp1([1, 0, 0, 0, 0])


def test_eisenstein_series():
    E4 = eisenstein_gl2(4, TRIV, TRIV, 10)
    assert E4[0] == Fraction(1, 240)
    assert all(E4[n] == _sigma(n, 3) for n in range(1, 11))
    with pytest.raises(DomainError):
        eisenstein_gl2(3, TRIV, TRIV, 5)
    chi = kronecker_sigma(-4)
    E = eisenstein_gl2(3, TRIV, chi, 30)
    for m, n in ((2, 3), (3, 5), (4, 7)):
        assert E[m * n] == E[m] * E[n]


@pytest.mark.parametrize("k,M,cusp,d", [(2, 11, True, 1), (2, 15, False, 4), (4, 1, False, 1), (12, 1, True, 1),
                                        (8, 15, False, 16)])
def test_dimensions(k, M, cusp, d):
    assert dim_modular_forms(k, M, cusp=cusp) == d


def test_U_and_V():
    ones = QExp1([1] * 41)
    assert hecke_U(2, ones) == QExp1([1] * 21)
    f = QExp1(list(range(31)), 2, 5)
    assert hecke_U(3, hecke_V(3, f)) == f
    g = hecke_V(3, hecke_U(3, f))
    assert all(g[n] == (f[n] if n % 3 == 0 else 0) for n in range(31))
    assert hecke_V(1, f) == f
    assert hecke_V(4, f).level == 20


def test_U_on_level_11():
    f = eta_quotient([(1, 2), (11, 2)], Q=110)
    assert hecke_U(11, f).coeffs == tuple(f[11 * n] for n in range(11))


def test_T2_on_level_11_newform():
    f = eta_quotient([(1, 2), (11, 2)], Q=40)
    assert hecke_T(2, f, 2, 11) == f * (-2)


def test_T_on_eisenstein():
    E = eisenstein_gl2(4, TRIV, TRIV, 60, )
    E = QExp1(E.coeffs, 4, 1)
    for q in (2, 3, 5):
        assert hecke_T(q, E) == E * (1 + q**3)


def test_hecke_operators_commute():
    V = build_space(4, 15, Q=80)
    T2 = flint.fmpq_mat([[flint.fmpq(x.numerator, x.denominator) for x in r] for r in V.hecke_matrix(2)])
    T7 = flint.fmpq_mat([[flint.fmpq(x.numerator, x.denominator) for x in r] for r in V.hecke_matrix(7)])
    U3 = flint.fmpq_mat([[flint.fmpq(x.numerator, x.denominator) for x in r] for r in V.hecke_matrix(3)])
    assert T2 * T7 == T7 * T2
    assert T2 * U3 == U3 * T2


def test_space_coordinates_check_every_coefficient():
    V = build_space(2, 11)
    f = eta_quotient([(1, 2), (11, 2)], Q=V.Q)
    c = V.coordinates(f)
    assert V.combine(c) == f


def test_cusp_space_level_15():
    S = cusp_space(2, 15, Q=60)
    assert S.dim == 1
    f = S.basis[0]
    f = f * (1 / f[1])
    assert [f[n] for n in (1, 2, 3, 5, 7)] == [1, -1, -1, 1, 0]


def test_ordinary_projector_level_15():
    V = build_space(2, 15, Q=60).saturate(3)
    U = V.hecke_matrix(3)
    e = slope_project(U, 3, 0, 15)
    mod = 3**15
    Um = zp_matrix(U, 3, 15)
    assert _reduce(e.matrix * e.matrix - e.matrix, mod).is_zero()
    assert _reduce(e.matrix * Um - Um * e.matrix, mod).is_zero()
    assert e.rank == ordinary_rank_mod_p(U, 3) == 3
    # the ordinary cuspidal part is the line of the a_3 = -1 form
    S = cusp_space(2, 15, Q=60)
    coords = V.coordinates(S.basis[0])
    img = e.apply(coords)
    assert img == [x % mod for x in e.apply(img)]


def test_qexp2_operators_and_roundtrip():
    H = QExp2.from_function(lambda a, b: Fraction(a + 2 * b, 3), 12, 12, weight=2, level=15)
    assert H.U(3, 3)[2, 1] == H[6, 3]
    assert H.V(2, 2).U(2, 2) == H
    assert QExp2.from_json(H.to_json()) == H
    with pytest.raises(TruncationError):
        H[13, 0]


def test_tensor_fit_roundtrip():
    V = build_space(2, 15, Q=40)
    B = V.basis
    h = [[Fraction(i + 2 * j + 1, 5) if i <= j else Fraction(j + 2 * i + 1, 5) for j in range(V.dim)]
         for i in range(V.dim)]
    table = {(a, b): sum(h[i][j] * B[i][a] * B[j][b] for i in range(V.dim) for j in range(V.dim))
             for a in range(12) for b in range(12)}
    tf = fit_tensor(V, table)
    assert tf.coords == h
