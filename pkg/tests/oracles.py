"""Independent reference computations used by the tests.

Each oracle works from definitions (generating functions, direct
enumeration, symbolic differentiation) and shares no code path with the
package beyond exact cyclotomic arithmetic.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

import sympy as sp

from trivzero.padic import CyclotomicNumber


def _frac(x) -> Fraction:
    x = sp.Rational(x)
    return Fraction(int(x.p), int(x.q))


@lru_cache(maxsize=None)
def bernoulli_poly_values(n: int, f: int) -> tuple:
    """B_n(a/f) for a = 1..f, with B_n(x) read off t e^{xt}/(e^t - 1)."""
    x, t = sp.symbols("x t")
    gen = sp.series(t * sp.exp(x * t) / (sp.exp(t) - 1), t, 0, n + 1).removeO()
    Bn = sp.expand(gen.coeff(t, n) * sp.factorial(n))
    return tuple(_frac(Bn.subs(x, sp.Rational(a, f))) for a in range(1, f + 1))


def generalized_bernoulli(n: int, chi) -> CyclotomicNumber:
    """B_{n,chi} = f^(n-1) sum_a chi(a) B_n(a/f) for a primitive character of modulus f."""
    f = chi.modulus
    vals = bernoulli_poly_values(n, f)
    acc = {}
    for a in range(1, f + 1):
        e = chi.exp(a)
        if e is None:
            continue
        acc[e] = acc.get(e, Fraction(0)) + vals[a - 1]
    scale = Fraction(f) ** (n - 1)
    return CyclotomicNumber.from_exponent_dict(chi.order, {e: c * scale for e, c in acc.items()})


def euler_removed_L_oracle(t: int, chi, p: int) -> CyclotomicNumber:
    """(1 - chi0(p) p^(t-1)) L(1-t, chi0), chi0 the primitive character of chi."""
    chi0 = chi.primitive()
    L = generalized_bernoulli(t, chi0) * Fraction(-1, t)
    return L - chi0(p) * L * Fraction(p) ** (t - 1)


# ---------------------------------------------------------------------------
# differential operator on exp(tr ZI), by brute-force symbolic differentiation

_z1, _z2, _z4, _T1, _T2, _T4, _l = sp.symbols("z1 z2 z4 T1 T2 T4 l")


def _operator(lv, F):
    d2 = lambda G: sp.Rational(1, 2) * sp.diff(G, _z2)  # noqa: E731
    return _z2 * (sp.diff(F, _z1, _z4) - d2(d2(F))) - (lv - sp.Rational(1, 2)) * d2(F)


@lru_cache(maxsize=None)
def b_polynomials_symbolic(s_max: int) -> tuple:
    """P^s(l; z2, T) for s = 0..s_max with l symbolic, from composing the operator on the exponential."""
    E = sp.exp(_T1 * _z1 + 2 * _T2 * _z2 + _T4 * _z4)
    out = [sp.Integer(1)]
    F = E
    for s in range(1, s_max + 1):
        F = sp.expand(_operator(_l + s - 1, F))
        out.append(sp.expand(sp.simplify(F / E)))
    return tuple(out)


def b_polynomial_oracle(l: int, s: int) -> dict:
    """{(a, e1, e2, e4): coefficient} of P_l^s(z2, I)."""
    P = sp.Poly(sp.expand(b_polynomials_symbolic(s)[s].subs(_l, l)), _z2, _T1, _T2, _T4)
    return {m: _frac(c) for m, c in P.terms() if c != 0}


# ---------------------------------------------------------------------------
# Cohen's function and full-level genus-2 Eisenstein coefficients


class RealCharacter:
    """Kronecker symbol (D/.) as a character modulo |D| (D a fundamental discriminant)."""

    def __init__(self, D: int):
        self.D = D
        self.modulus = abs(D)
        self.order = 2 if D != 1 else 1

    def value(self, n: int) -> int:
        return int(sp.jacobi_symbol(self.D % n, n)) if n % 2 and gcd(self.D, n) == 1 else _kron2(self.D, n)

    def exp(self, a: int):
        v = self.value(a % self.modulus or self.modulus)
        return None if v == 0 else (0 if v == 1 else 1)


def _kron2(D: int, n: int) -> int:
    if gcd(D, n) != 1:
        return 0
    res = 1
    while n % 2 == 0:
        n //= 2
        res *= 1 if D % 8 in (1, 7) else -1
    return res * (int(sp.jacobi_symbol(D % n, n)) if n > 1 else 1)


def fundamental_part(Delta: int) -> tuple:
    """Delta = D0 f^2 with D0 fundamental."""
    f, D = 1, Delta
    changed = True
    while changed:
        changed = False
        for q in sp.factorint(abs(D)):
            if D % (q * q) == 0 and (D // (q * q)) % 4 in (0, 1):
                D //= q * q
                f *= q
                changed = True
                break
    return D, f


def cohen_H(r: int, N: int) -> Fraction:
    """Cohen's H(r, N) for N > 0 with -N a discriminant."""
    if N % 4 not in (0, 3):
        return Fraction(0)
    D, f = fundamental_part(-N)
    chi = RealCharacter(D)
    L = generalized_bernoulli(r, chi).coeffs[0] * Fraction(-1, r)
    tot = Fraction(0)
    for d in sp.divisors(f):
        mu = int(sp.mobius(d))
        if mu:
            tot += mu * _kron2(D, d) * Fraction(d) ** (r - 1) * int(sp.divisor_sigma(f // d, 2 * r - 1))
    return L * tot


def siegel_eisenstein_cohen(t: int, a: int, b: int, c: int) -> Fraction:
    """sum_{d | content} d^t H(t, (4ac - b^2)/d^2): weight t+1 full-level coefficient up to one constant."""
    e = gcd(gcd(a, b), c)
    N = 4 * a * c - b * b
    return sum((Fraction(d) ** t * cohen_H(t, N // (d * d)) for d in sp.divisors(e)), Fraction(0))


# ---------------------------------------------------------------------------
# ordinary rank from the reduced characteristic polynomial


def ordinary_rank_mod_p(U_rows, p: int) -> int:
    """Number of unit eigenvalues of U: degree minus the multiplicity of 0 in charpoly mod p."""
    M = sp.Matrix([[sp.Rational(x.numerator, x.denominator) for x in r] for r in U_rows])
    x = sp.Symbol("x")
    cp = sp.Poly(M.charpoly(x).as_expr(), x)
    red = sp.Poly([int(sp.Rational(c).p * pow(int(sp.Rational(c).q), -1, p)) % p for c in cp.all_coeffs()], x,
                  modulus=p)
    coeffs = red.all_coeffs()[::-1]
    k = next(i for i, c in enumerate(coeffs) if c % p)
    return cp.degree() - k
