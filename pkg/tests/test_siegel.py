import random
from fractions import Fraction

import pytest

from oracles import b_polynomial_oracle
from trivzero.padic import WeightPoint, padic
from trivzero.siegel import (CharacterData, HalfIntegralMatrix, b_congruence_check, b_interpolated, b_polynomial,
                             c_coefficient, c_coefficient_factorial, coset_reps, eisenstein_coeff_classical,
                             eisenstein_coeff_family, enumerate_matrices, local_factor, twisted_data)


def test_b_polynomial_base_cases():
    assert b_polynomial(3, 0).at_zero() == {(0, 0, 0): 1}
    for l in (1, Fraction(3, 2), 5):
        assert b_polynomial(l, 1).at_zero() == {(0, 1, 0): -(Fraction(l) - Fraction(1, 2))}


def test_b_polynomial_s2_against_differentiation():
    for l in (1, 2, 5):
        assert b_polynomial(l, 2).terms == b_polynomial_oracle(l, 2)


def test_literal_recursion_drops_a_term_from_s3_on():
    assert b_polynomial(2, 2, literal=True).at_zero() == b_polynomial(2, 2).at_zero()
    assert b_polynomial(2, 3, literal=True).at_zero() != b_polynomial(2, 3).at_zero()


def test_homogeneity():
    rng = random.Random(5)
    for _ in range(20):
        l, s = rng.randint(1, 8), rng.randint(0, 5)
        T = [Fraction(rng.randint(-9, 9)) for _ in range(3)]
        lam = Fraction(rng.randint(1, 7), rng.randint(1, 5))
        b = b_polynomial(l, s)
        assert b(*(lam * x for x in T)) == lam**s * b(*T)


def test_c_coefficient():
    assert c_coefficient(4, 0) == 1
    assert c_coefficient(Fraction(7, 2), 1) == -3
    assert c_coefficient(2, 3) == c_coefficient_factorial(2, 3)
    for l in range(1, 9):
        for s in range(7):
            if 2 * l + s >= 3:
                assert c_coefficient(l, s) == c_coefficient_factorial(l, s)
            assert b_polynomial(l, s).at_zero().get((0, s, 0), 0) == c_coefficient(l, s)


def test_congruence_examples():
    assert b_congruence_check(3, 4, HalfIntegralMatrix(0, 5, 0), 9, 3)[1] == 0
    rng = random.Random(11)
    for _ in range(20):
        I = HalfIntegralMatrix(9 * rng.randint(1, 5), rng.randint(-30, 30), 9 * rng.randint(1, 5))
        assert b_congruence_check(rng.randint(2, 8), rng.randint(0, 6), I, 9, 2)[0]
    assert b_congruence_check(4, 3, HalfIntegralMatrix(2, 1, 5), 1, 1)[0]


def test_b_interpolated_specializes():
    for t in (1, 2, 3):
        for s0 in (0, 1, 2, 3):
            got = b_interpolated(WeightPoint.classical(3, t), s0, 20)
            want = b_polynomial(t + 1, s0).at_zero()
            keys = set(got) | set(want)
            assert all((got.get(k, padic(3, 0, 20)) - padic(3, want.get(k, 0), 20)).is_zero() for k in keys)
    assert {k: v.lift() for k, v in b_interpolated(WeightPoint.classical(3, 4), 0).items()} == {(0, 0, 0): 1}


def test_enumerate_matrices():
    assert [m.T2 * 2 for m in enumerate_matrices(1, 1)] == [-1, 0, 1]
    assert enumerate_matrices(0, 4) == []
    assert len(enumerate_matrices(2, 3)) == 9


def test_coset_reps():
    I = HalfIntegralMatrix(1, 1, 2)  # det 2I = 7, squarefree
    assert coset_reps(I) == [(((1, 0), (0, 1)), 1)]
    reps = coset_reps(HalfIntegralMatrix(1, 0, 1))
    assert (((1, 0), (0, 1)), 1) in reps
    assert all(m == 1 for _, m in reps)
    for a, b, c in ((4, 4, 4), (9, 0, 9), (3, 2, 12)):
        assert ((((1, 0), (0, 1)), 1)) in coset_reps(HalfIntegralMatrix(a, b, c))


def test_providers_agree():
    for a in range(1, 9):
        for c in range(a, 9):
            for b in range(-a, a + 1):
                S = HalfIntegralMatrix(a, b, c)
                if S.det2 <= 0:
                    continue
                for q in (2, 3, 5, 7):
                    if S.det2 % q == 0:
                        assert local_factor("closed-form", q, S) == local_factor("kaufhold", q, S)


def test_classical_coefficient_small_cases():
    data = twisted_data(3, 1, 0)
    assert eisenstein_coeff_classical(0, 0, 1, data, 1, 0) == 0
    # 2 T2 = 0 is killed by the p-component, leaving 2 T2 = +-1 with L(0, sigma_-3) = 1/3 each
    assert eisenstein_coeff_classical(1, 1, 1, data, 1, 0) == Fraction(2, 3)
    assert eisenstein_coeff_classical(1, 1, 1, CharacterData(p=3), 1, 0) != Fraction(2, 3)


def test_family_zero_index_and_p2_integrality():
    kap = WeightPoint.classical(3, 0)
    kp = WeightPoint.classical(3, 1)
    assert eisenstein_coeff_family(0, 0, 1, kap, kp, twisted_data(3, 5, 0)).is_zero()
    data = twisted_data(2, 3, 0)
    k2, kp2 = WeightPoint.classical(2, 2), WeightPoint.classical(2, 1)
    for T1, T4 in ((1, 1), (1, 2), (2, 3)):
        v = eisenstein_coeff_family(T1, T4, 2, k2, kp2, data, prec=12)
        assert v.valuation() >= 0
    assert data.t2_value(4) == 0 and data.t2_value(3) == 1
