"""Quadratic characters at scale: sieves, class numbers and L(1-t, chi_D) tables.

Values L(1-t, chi_D) for fundamental discriminants D are needed for many
thousands of D at once when Eisenstein coefficients are assembled.  Three
routes are provided and cross-checked in the tests:

* a direct generalized-Bernoulli sum (any D, cost O(|D|));
* t = 1, D < 0: counting reduced binary quadratic forms for all |D| <= X;
* t >= 2: Cohen's numbers H(t, N) are the coefficients of a modular form of
  weight t + 1/2 in Kohnen's plus space; the form is fitted on a few small
  coefficients in the basis theta^(2t+1-4j) F2^j and expanded to q^X.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, gcd, isqrt

import flint
import numpy as np

from .padic import DomainError


class PrimeSieve:
    """Smallest-prime-factor table on [0, X]."""

    def __init__(self, X: int):
        self.X = X
        spf = np.zeros(X + 1, dtype=np.int64)
        for q in range(2, isqrt(X) + 1):
            if spf[q] == 0:
                block = spf[q * q:: q]
                block[block == 0] = q
        idx = np.nonzero(spf == 0)[0]
        spf[idx] = idx
        self.spf = spf

    def factor(self, n: int) -> list:
        if n > self.X:
            return [(int(q), int(e)) for q, e in flint.fmpz(n).factor()]
        out = []
        spf = self.spf
        while n > 1:
            q = int(spf[n])
            e = 0
            while n % q == 0:
                n //= q
                e += 1
            out.append((q, e))
        return out


_SIEVE = [PrimeSieve(1000)]


def sieve(X: int) -> PrimeSieve:
    if _SIEVE[0].X < X:
        _SIEVE[0] = PrimeSieve(max(X, 2 * _SIEVE[0].X))
    return _SIEVE[0]


def factor_int(n: int) -> list:
    s = _SIEVE[0]
    if n <= s.X:
        return s.factor(n)
    return [(int(q), int(e)) for q, e in flint.fmpz(n).factor()]


def disc_decomposition(D: int, fac: list | None = None):
    """(D0, f, primes of f) with D = D0 f^2, D0 fundamental; D must be 0 or 1 mod 4."""
    if D % 4 not in (0, 1) or D == 0:
        raise DomainError(f"{D} is not a nonzero discriminant")
    fac = fac if fac is not None else factor_int(abs(D))
    core = 1
    f = 1
    for q, e in fac:
        if e % 2:
            core *= q
        f *= q ** (e // 2)
    D0 = core if D > 0 else -core
    if D0 % 4 != 1:
        D0 *= 4
        f //= 2
    return D0, f


def kron(D: int, n: int) -> int:
    """Kronecker symbol (D/n), n > 0."""
    res = 1
    while n % 2 == 0:
        n //= 2
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5):
            res = -res
    if n == 1:
        return res
    if gcd(D, n) != 1:
        return 0
    return res * int(flint.fmpz(D % n).jacobi(n))


def kron_table(D: int) -> list:
    """[chi_D(a) for a in 0..|D|-1] via complete multiplicativity on a sieve."""
    f = abs(D)
    tab = [0] * (f + 1)
    if f == 1:
        return [1, 1]
    tab[1] = 1
    s = sieve(f)
    spf = s.spf
    for a in range(2, f + 1):
        q = int(spf[a])
        if q == a:
            tab[a] = kron(D, q)
        else:
            tab[a] = tab[q] * tab[a // q]
    return tab[:f]


@lru_cache(maxsize=None)
def _bern(i: int) -> Fraction:
    b = flint.fmpq.bernoulli(i)
    return Fraction(int(b.p), int(b.q))


def quadratic_bernoulli(t: int, D: int) -> Fraction:
    """B_{t, chi_D} for a fundamental discriminant D (D = 1 gives B_t with B_1 = +1/2)."""
    if D == 1:
        return Fraction(1, 2) if t == 1 else _bern(t)
    f = abs(D)
    tab = kron_table(D)
    sums = [0] * (t + 1)
    for a in range(1, f):
        c = tab[a]
        if not c:
            continue
        x = c
        for m in range(t + 1):
            sums[m] += x
            x *= a
    acc = Fraction(0)
    fp = Fraction(1, f)
    for i in range(t + 1):
        bi = _bern(i)
        if bi:
            acc += comb(t, i) * bi * fp * sums[t - i]
        fp *= f
    return acc


def _parity_zero(t: int, D: int) -> bool:
    # chi_D is even iff D > 0; L(1-t, chi) vanishes unless chi(-1) = (-1)^t
    if D == 1:
        return t > 1 and t % 2 == 1
    return (D > 0) != (t % 2 == 0)


_TABLES: dict = {}


def quadratic_L_neg(t: int, D: int) -> Fraction:
    """L(1 - t, chi_D) for a fundamental discriminant D, t >= 1."""
    if t < 1:
        raise DomainError("t must be >= 1")
    if _parity_zero(t, D):
        return Fraction(0)
    tab = _TABLES.get(t)
    if tab is not None and D < 0 and -D < len(tab):
        v = tab[-D]
        if v is not None:
            return v
    return _direct_L(t, D)


@lru_cache(maxsize=200000)
def _direct_L(t: int, D: int) -> Fraction:
    return -quadratic_bernoulli(t, D) / t


def class_number_counts(X: int) -> np.ndarray:
    """h'(N) = number of reduced forms (all, primitive or not) of discriminant -N, N <= X."""
    cnt = np.zeros(X + 1, dtype=np.int64)
    a = 1
    while 3 * a * a <= X:
        for b in range(-a + 1, a + 1):
            cmin = a if b >= 0 else a + 1
            start = 4 * a * cmin - b * b
            if start > X:
                continue
            cnt[start:: 4 * a] += 1
        a += 1
    return cnt


def cohen_H_direct(t: int, N: int) -> Fraction:
    """Cohen's H(t, N) from the L-value of the fundamental part."""
    if N == 0:
        return _bern(2 * t) / (-2 * t)  # zeta(1 - 2t)
    D = N if t % 2 == 0 else -N
    if D % 4 not in (0, 1):
        return Fraction(0)
    D0, f = disc_decomposition(D)
    s = 0
    for d in _divisors(f):
        mu = _mobius(d)
        if mu:
            s += mu * kron(D0, d) * d ** (t - 1) * _sigma(f // d, 2 * t - 1)
    return _direct_L(t, D0) * s


def _divisors(n: int) -> list:
    ds = [1]
    for q, e in factor_int(n):
        ds = [d * q**i for d in ds for i in range(e + 1)]
    return sorted(ds)


def _mobius(n: int) -> int:
    out = 1
    for _, e in factor_int(n):
        if e > 1:
            return 0
        out = -out
    return out


def _sigma(n: int, k: int) -> int:
    return sum(d**k for d in _divisors(n))


def _theta(X: int) -> flint.fmpz_poly:
    cs = [0] * (X + 1)
    cs[0] = 1
    n = 1
    while n * n <= X:
        cs[n * n] = 2
        n += 1
    return flint.fmpz_poly(cs)


def _f2(X: int) -> flint.fmpz_poly:
    """F2 = sum_{n odd} sigma_1(n) q^n."""
    s = np.zeros(X + 1, dtype=np.int64)
    for d in range(1, X + 1, 2):
        s[d::2 * d] += d  # odd multiples of d
    cs = [0] * (X + 1)
    for n in range(1, X + 1, 2):
        cs[n] = int(s[n])
    return flint.fmpz_poly(cs)


def cohen_generating_series(t: int, X: int) -> list:
    """[H(t, N) for N <= X] from the plus-space expansion (t >= 2)."""
    if t < 2:
        raise DomainError("the plus-space route needs t >= 2")
    n = X + 1
    th = _theta(X)
    F2 = _f2(X)
    jmax = (2 * t + 1) // 4
    basis = []
    for j in range(jmax + 1):
        g = flint.fmpz_poly([1])
        for _ in range(2 * t + 1 - 4 * j):
            g = _trunc(g * th, n)
        for _ in range(j):
            g = _trunc(g * F2, n)
        basis.append(g)
    m = len(basis)
    # fit on the first coefficients, verify on a few more
    fitN = list(range(0, 4 * m + 12))
    A = flint.fmpq_mat([[int(basis[j][N]) for j in range(m)] for N in fitN])
    rhs = flint.fmpq_mat([[_fq(cohen_H_direct(t, N))] for N in fitN])
    sol = _lstsq_exact(A, rhs)
    coef = [Fraction(int(sol[j, 0].p), int(sol[j, 0].q)) for j in range(m)]
    den = 1
    for c in coef:
        den = den * c.denominator // gcd(den, c.denominator)
    total = flint.fmpz_poly([0])
    for c, g in zip(coef, basis):
        total += g * int(c * den)
    cs = total.coeffs()
    cs += [0] * (n - len(cs))
    return [Fraction(int(c), den) for c in cs[:n]]


def _trunc(g, n):
    cs = g.coeffs()
    return flint.fmpz_poly(cs[:n]) if len(cs) > n else g


def _fq(x: Fraction):
    return flint.fmpq(x.numerator, x.denominator)


def _lstsq_exact(A, b):
    """Solve A x = b exactly for a consistent overdetermined system, or raise."""
    At = A.transpose()
    x = (At * A).solve(At * b)
    if A * x != b:
        raise ArithmeticError("plus-space fit is inconsistent")
    return x


def prepare_quadratic_table(t: int, X: int) -> None:
    """Tabulate L(1-t, chi_D) for negative fundamental D with |D| <= X (t odd)."""
    if t % 2 == 0:
        return
    cur = _TABLES.get(t)
    if cur is not None and len(cur) > X:
        return
    sieve(X)
    tab: list = [None] * (X + 1)
    if t == 1:
        h = class_number_counts(X)
        for N in range(3, X + 1):
            D = -N
            if D % 4 not in (0, 1):
                continue
            D0, f = disc_decomposition(D)
            if f != 1:
                continue
            w = 6 if N == 3 else 4 if N == 4 else 2
            tab[N] = Fraction(2 * int(h[N]), w)
    else:
        H = cohen_generating_series(t, X)
        for N in range(3, X + 1):
            D = -N
            if D % 4 not in (0, 1):
                continue
            D0, f = disc_decomposition(D)
            if f == 1:
                tab[N] = H[N]
    _TABLES[t] = tab
