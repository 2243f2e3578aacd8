from fractions import Fraction
from math import gcd

import pytest

from oracles import euler_removed_L_oracle, generalized_bernoulli as bernoulli_oracle
from trivzero.characters import (DirichletCharacter, PoleError, decompose_character, generalized_bernoulli,
                                 gauss_sum, kl_twist, kronecker_sigma, kubota_leopoldt, teichmuller_character)
from trivzero.padic import CyclotomicNumber, DomainError, PadicField, WeightPoint, agreement, padic


def test_decompose_trivial():
    parts = decompose_character(DirichletCharacter.trivial(15), 1, 1, 3)
    assert all(c.primitive().is_trivial for c in parts)


def test_decompose_crt_split():
    q5, q3 = kronecker_sigma(5), kronecker_sigma(-3)
    chi1, chip, eps1 = decompose_character(q5 * q3, 1, 5, 3)
    assert chi1.primitive().is_trivial
    assert chip.primitive() == q5.primitive()
    assert eps1.primitive() == q3.primitive()


def test_decompose_rejects_imprimitive_R_part():
    with pytest.raises(DomainError):
        decompose_character(DirichletCharacter.trivial(5) * kronecker_sigma(-3), 1, 5, 3)


def test_primitive():
    assert DirichletCharacter.trivial(12).primitive().modulus == 1
    q8 = kronecker_sigma(8)
    assert q8.primitive() == q8
    assert q8.extend(24).conductor == 8


def test_gauss_sums():
    assert gauss_sum(DirichletCharacter.trivial(1)) == CyclotomicNumber.rational(1)
    g = gauss_sum(kronecker_sigma(-4))
    assert g == CyclotomicNumber.zeta(4) - CyclotomicNumber.zeta(4, 3)
    for chi in (kronecker_sigma(-7), DirichletCharacter.from_generators(7, 3, [(3, 1)]),
                DirichletCharacter.from_generators(13, 4, [(2, 1)])):
        c = chi.modulus
        prod = gauss_sum(chi) * gauss_sum(chi.inverse()) * chi(-1)
        assert prod == CyclotomicNumber.rational(c, prod.M)


def test_kronecker():
    assert kronecker_sigma(1).is_trivial
    assert kronecker_sigma(-4).real_value(3) == -1
    s = kronecker_sigma(-23)
    assert all(s.real_value(n) ** 2 == 1 for n in range(1, 200) if gcd(n, 46) == 1)


def test_bernoulli_small_cases():
    triv = DirichletCharacter.trivial(1)
    assert generalized_bernoulli(1, triv) * Fraction(-1) == CyclotomicNumber.rational(Fraction(-1, 2))
    odd = kronecker_sigma(-3)
    assert generalized_bernoulli(2, odd) == CyclotomicNumber.rational(0, odd.order)
    assert generalized_bernoulli(3, triv) == CyclotomicNumber.rational(0)


@pytest.mark.parametrize("chi", [kronecker_sigma(-3), kronecker_sigma(8), kronecker_sigma(-20),
                                 DirichletCharacter.from_generators(7, 3, [(3, 1)]),
                                 DirichletCharacter.from_generators(13, 4, [(2, 1)])])
def test_bernoulli_against_generating_function(chi):
    for t in range(1, 7):
        assert generalized_bernoulli(t, chi) == bernoulli_oracle(t, chi.primitive())


def test_kl_trivial_eta_at_one():
    p = 5
    v = kubota_leopoldt(WeightPoint.classical(p, 1), DirichletCharacter.trivial(1), prec=15, method="series")
    exact = euler_removed_L_oracle(1, teichmuller_character(p) ** -1, p)
    K = v.field if hasattr(v, "field") else PadicField.get(p, exact.M, 40)
    assert agreement(v, K.embed(exact, 20)) >= 15


def test_kl_omega_squared():
    p = 5
    eta = teichmuller_character(p) ** 2
    v = kubota_leopoldt(WeightPoint.classical(p, 1), eta, prec=15, method="series")
    chi = kl_twist(eta, p, 1)
    assert chi.primitive() == teichmuller_character(p).primitive()
    exact = euler_removed_L_oracle(1, chi, p)  # omega(5) = 0, so no Euler factor
    assert agreement(v, v.field.embed(exact, 20)) >= 15


def test_kl_contracts():
    with pytest.raises(DomainError):
        kubota_leopoldt(WeightPoint.classical(5, 1), kronecker_sigma(-3))
    with pytest.raises(PoleError):
        kubota_leopoldt(WeightPoint.classical(5, 0), DirichletCharacter.trivial(1))
