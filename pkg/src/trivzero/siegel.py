"""Genus-2 Eisenstein coefficients restricted to the diagonal H x H.

The Fourier coefficient of q1^T1 q2^T4 is a finite sum over half-integral
matrices I = [[L^2 T1, T2], [T2, L^2 T4]] of

    b(I) * chi^-1(2 T2) * sum_G psi^2(det G) |det G|^(2t-1)
         * L(1-t, sigma_{-det 2I} psi) * prod_q B_q(psi(q) q^(t-2), I[G^-1])

where b(I) comes from a holomorphic differential operator.  The inner sum over
superlattices G is evaluated either coset by coset or prime by prime through
the local polynomials F_q (the default; both are cross-checked).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt, prod

from .characters import DirichletCharacter, PoleError, kronecker_sigma, dirichlet_L_neg, kubota_leopoldt
from .padic import (
    CyclotomicNumber,
    DomainError,
    PadicNumber,
    PrecisionError,
    WeightPoint,
    log_weight,
    padic,
    teichmuller,
    vp,
)
from .quadratic import disc_decomposition, factor_int, kron, prepare_quadratic_table, quadratic_L_neg, sieve

HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# half-integral matrices


@dataclass(frozen=True, order=True)
class HalfIntegralMatrix:
    """[[T1, b/2], [b/2, T4]]; the off-diagonal entry is stored doubled."""

    T1: int
    b: int
    T4: int

    @property
    def T2(self) -> Fraction:
        return Fraction(self.b, 2)

    @property
    def det2(self) -> int:
        return 4 * self.T1 * self.T4 - self.b * self.b

    def is_positive_definite(self) -> bool:
        return self.T1 > 0 and self.det2 > 0

    @property
    def content(self) -> int:
        return gcd(gcd(self.T1, self.b), self.T4)

    def transform(self, G) -> "HalfIntegralMatrix | None":
        """G^-t I G^-1 if half-integral, else None."""
        (a, b), (c, d) = G
        m = a * d - b * c
        if m == 0:
            raise DomainError("singular G")
        # G^-1 = [[d, -b], [-c, a]] / m
        gi = ((Fraction(d, m), Fraction(-b, m)), (Fraction(-c, m), Fraction(a, m)))
        M = ((Fraction(self.T1), self.T2), (self.T2, Fraction(self.T4)))
        r = [[sum(gi[k][i] * M[k][l] * gi[l][j] for k in range(2) for l in range(2)) for j in range(2)]
             for i in range(2)]
        A, B2, C = r[0][0], 2 * r[0][1], r[1][1]
        if A.denominator != 1 or C.denominator != 1 or B2.denominator != 1:
            return None
        return HalfIntegralMatrix(int(A), int(B2), int(C))

    def __str__(self):
        return f"[[{self.T1}, {self.b}/2], [{self.b}/2, {self.T4}]]"


def enumerate_matrices(T1: int, T4: int, L: int = 1) -> list:
    """All positive definite [[L^2 T1, T2], [T2, L^2 T4]] with 2 T2 integral."""
    A, C = L * L * T1, L * L * T4
    if A <= 0 or C <= 0:
        return []
    out = []
    bmax = isqrt(4 * A * C - 1)
    for b in range(-bmax, bmax + 1):
        out.append(HalfIntegralMatrix(A, b, C))
    return out


def _divisors(n: int) -> list:
    ds = [1]
    for q, e in factor_int(n):
        ds = [d * q**i for d in ds for i in range(e + 1)]
    return sorted(ds)


def coset_reps(I: HalfIntegralMatrix) -> list:
    """Left GL2(Z)-cosets of {G : G^-t I G^-1 half-integral}, as (G, |det G|).

    Representatives are the row Hermite forms [[a, c], [0, d]], 0 <= c < d,
    which are unique in their coset.
    """
    if not I.is_positive_definite():
        raise DomainError("positive definite index required")
    n = I.det2
    out = []
    for m in range(1, isqrt(n) + 1):
        if n % (m * m):
            continue
        for a in _divisors(m):
            d = m // a
            for c in range(d):
                G = ((a, c), (0, d))
                if I.transform(G) is not None:
                    out.append((G, m))
    return out


# ---------------------------------------------------------------------------
# differential-operator polynomials
#
# A polynomial in (z2, T1, T2, T4) is a dict {(ez, e1, e2, e4): Fraction}.


def _padd(P: dict, Q: dict, c=1) -> dict:
    out = dict(P)
    for k, v in Q.items():
        w = out.get(k, 0) + c * v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def _pmul(P: dict, Q: dict) -> dict:
    out: dict = {}
    for (a0, a1, a2, a4), x in P.items():
        for (b0, b1, b2, b4), y in Q.items():
            k = (a0 + b0, a1 + b1, a2 + b2, a4 + b4)
            out[k] = out.get(k, 0) + x * y
    return {k: v for k, v in out.items() if v}


def _pdz(P: dict) -> dict:
    out = {}
    for (a0, a1, a2, a4), x in P.items():
        if a0:
            out[(a0 - 1, a1, a2, a4)] = x * a0
    return out


def _pshift(P: dict, dz=0, d2=0) -> dict:
    return {(a0 + dz, a1, a2 + d2, a4): x for (a0, a1, a2, a4), x in P.items()}


class BPolynomial:
    """P_l^s(z2, I): applying the composed operator to exp(tr ZI) gives P * exp(tr ZI)."""

    def __init__(self, l, s: int, terms: dict):
        self.l = Fraction(l)
        self.s = s
        self.terms = terms

    def at_zero(self) -> dict:
        """b_l^s as {(e1, e2, e4): coefficient}."""
        return {k[1:]: v for k, v in self.terms.items() if k[0] == 0}

    @property
    def degree_z(self) -> int:
        return max((k[0] for k in self.terms), default=0)

    def __call__(self, T1, T2, T4, z2=0):
        return sum(c * z2**a * T1**e1 * T2**e2 * T4**e4 for (a, e1, e2, e4), c in self.terms.items())

    def evaluate(self, I: HalfIntegralMatrix) -> Fraction:
        return sum((c * I.T1**e1 * I.T2**e2 * I.T4**e4 for (e1, e2, e4), c in self.at_zero().items()),
                   Fraction(0))

    def b_coefficients(self, A: int, C: int) -> list:
        """b_l^s(A, b/2, C) as a polynomial in b (list, low degree first)."""
        out = [Fraction(0)] * (self.s + 1)
        for (e1, e2, e4), c in self.at_zero().items():
            out[e2] += c * A**e1 * C**e4 / 2**e2
        return out

    def __eq__(self, other):
        return isinstance(other, BPolynomial) and self.terms == other.terms

    def __repr__(self):
        return f"BPolynomial(l={self.l}, s={self.s}, {len(self.terms)} terms)"


@lru_cache(maxsize=None)
def _b_terms(l: Fraction, s: int, literal: bool) -> dict:
    if s == 0:
        return {(0, 0, 0, 0): Fraction(1)}
    P = _b_terms(l, s - 1, literal)
    lp = l + s - 1
    # P^1_{lp} = z2 (T1 T4 - T2^2) - (lp - 1/2) T2
    P1 = {(1, 1, 0, 1): Fraction(1), (1, 0, 2, 0): Fraction(-1), (0, 0, 1, 0): -(lp - HALF)}
    dP = _pdz(P)
    out = _pmul(P1, P)
    out = _padd(out, _pshift(_pdz(dP), dz=1), Fraction(-1, 4))
    out = _padd(out, dP, -(lp - HALF) / 2)
    if not literal:
        # d2^2 acting on P exp(2 T2 z2) also produces the cross term T2 dP/dz2
        out = _padd(out, _pshift(dP, dz=1, d2=1), -1)
    return out


def b_polynomial(l, s: int, literal: bool = False) -> BPolynomial:
    """P_l^s by recursion on s.

    ``literal=True`` drops the cross term z2 T2 dP/dz2 of the second
    derivative; that variant agrees with the true operator only for s <= 2 and
    is kept for comparison.
    """
    if s < 0:
        raise DomainError("s must be >= 0")
    return BPolynomial(l, s, _b_terms(Fraction(l), s, literal))


def c_coefficient(l, s: int) -> Fraction:
    """Coefficient of T2^s in b_l^s: (-1)^s prod_{i=1}^s (l - 1 + s - i/2)."""
    l = Fraction(l)
    out = Fraction((-1) ** s)
    for i in range(1, s + 1):
        out *= l - 1 + s - Fraction(i, 2)
    return out


def c_coefficient_factorial(l: int, s: int) -> Fraction:
    """The same number as (-1)^s 2^-s (2l+2s-3)! / (2l+s-3)! for integer l."""
    from math import factorial

    if 2 * l + s - 3 < 0:
        raise DomainError("factorial form needs 2l + s >= 3")
    return Fraction((-1) ** s * factorial(2 * l + 2 * s - 3), 2**s * factorial(2 * l + s - 3))


def b_congruence_check(l, s: int, I: HalfIntegralMatrix, L: int, d: int, sign: str = "plain"):
    """Check 4^s b_l^s(I) = 4^s sum_{j1+j4<d} c^J T^J modulo L^d.

    ``sign="alternating"`` multiplies the right side by (-1)^s.  Returns
    (holds, difference).
    """
    if L < 1 or I.T1 % L or I.T4 % L:
        raise DomainError("L must divide T1 and T4")
    b = b_polynomial(l, s).at_zero()
    lhs = 4**s * sum((c * Fraction(I.T1) ** e1 * I.T2**e2 * Fraction(I.T4) ** e4 for (e1, e2, e4), c in b.items()),
                     Fraction(0))
    rhs = 4**s * sum((c * Fraction(I.T1) ** e1 * I.T2**e2 * Fraction(I.T4) ** e4 for (e1, e2, e4), c in b.items()
                      if e1 + e4 < d), Fraction(0))
    if sign == "alternating":
        rhs *= (-1) ** s
    diff = lhs - rhs
    if L == 1 or diff == 0:
        return True, diff
    p = factor_int(L)[0][0]
    return vp(diff, p) >= d * vp(L, p), diff


@lru_cache(maxsize=None)
def b_coefficient_polynomials(s: int) -> dict:
    """{(e1,e2,e4): [a_0, ..., a_s]} with coefficient of T^J in b_l^s equal to sum a_i l^i."""
    pts = list(range(1, s + 2))
    vals = {l: b_polynomial(l, s).at_zero() for l in pts}
    keys = set()
    for v in vals.values():
        keys |= set(v)
    out = {}
    for key in sorted(keys):
        ys = [vals[l].get(key, Fraction(0)) for l in pts]
        out[key] = _interpolate(pts, ys)
    return out


def _interpolate(xs, ys) -> list:
    n = len(xs)
    coef = [Fraction(0)] * n
    for i in range(n):
        basis = [Fraction(1)]
        den = Fraction(1)
        for j in range(n):
            if j == i:
                continue
            basis = [Fraction(0)] + basis
            for m in range(len(basis) - 1):
                basis[m] -= xs[j] * basis[m + 1]
            den *= xs[i] - xs[j]
        for m in range(n):
            coef[m] += ys[i] * basis[m] / den
    return coef


def b_interpolated(kappa: WeightPoint, s0: int, prec: int = 20) -> dict:
    """b_{t+1}^{s0} with t replaced by Log_p(kappa): {(e1,e2,e4): p-adic coefficient}."""
    lam = log_weight(kappa, prec) + 1
    out = {}
    for key, cs in b_coefficient_polynomials(s0).items():
        acc = padic(kappa.p, 0, prec)
        for c in reversed(cs):
            acc = acc * lam + padic(kappa.p, c, prec)
        out[key] = acc
    return out


# ---------------------------------------------------------------------------
# local factors


class ProviderUnavailable(LookupError):
    pass


def _local_invariants(q: int, S: HalfIntegralMatrix):
    """(ord_q content, ord_q f, chi_D0(q)) with -det 2S = D0 f^2."""
    D0, f = disc_decomposition(-S.det2)
    a = vp(S.content, q)
    b = vp(f, q)
    return a, b, kron(D0, q)


@lru_cache(maxsize=None)
def kaufhold_polynomial(q: int, a: int, b: int, chi: int) -> tuple:
    """F_q(X) = sum_{G q-power} (q^3 X^2)^{ord det G} B_q(X, S[G^-1]), integer coefficients.

    F = sum_{i<=a} (q^2 X)^i [ sum_{j<=b-i} Y^j - chi q X sum_{j<=b-i-1} Y^j ],  Y = q^3 X^2.
    """
    deg = 2 * b + 1 + 1
    cs = [0] * (deg + a + 2)
    for i in range(a + 1):
        for j in range(b - i + 1):
            cs[i + 2 * j] += q ** (2 * i + 3 * j)
        for j in range(b - i):
            cs[i + 2 * j + 1] -= chi * q ** (2 * i + 3 * j + 1)
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


def _peval(cs, X):
    acc = 0
    for c in reversed(cs):
        acc = acc * X + c
    return acc


class LocalFactorProvider:
    name = "abstract"

    def __call__(self, q: int, S: HalfIntegralMatrix) -> tuple:
        raise ProviderUnavailable(self.name)


class ClosedFormProvider(LocalFactorProvider):
    """B_q = (1 - chi_D0(q) q X)^[q | f] (1 + q^2 X)^[q | content]."""

    name = "closed-form"

    def __call__(self, q, S):
        a, b, chi = _local_invariants(q, S)
        out = [1]
        if b:
            out = _polymul(out, [1, -chi * q])
        if a:
            out = _polymul(out, [1, q * q])
        while len(out) > 1 and out[-1] == 0:
            out.pop()
        return tuple(out)


class KaufholdProvider(LocalFactorProvider):
    """B_q recovered from F_q by removing the contributions of proper q-power superlattices."""

    name = "kaufhold"

    def __call__(self, q, S):
        return self._bq(q, S)

    @staticmethod
    @lru_cache(maxsize=None)
    def _bq(q, S):
        a, b, chi = _local_invariants(q, S)
        val = list(kaufhold_polynomial(q, a, b, chi))
        for G, m in coset_reps(S):
            if m == 1:
                continue
            r = vp(m, q)
            if q**r != m:
                continue
            sub = KaufholdProvider._bq(q, S.transform(G))
            term = _polymul([0] * (2 * r) + [q ** (3 * r)], list(sub))
            val = _polysub(val, term)
        while len(val) > 1 and val[-1] == 0:
            val.pop()
        return tuple(val)


def _polymul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _polysub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return [x - y for x, y in zip(a, b)]


PROVIDERS = {"closed-form": ClosedFormProvider(), "kaufhold": KaufholdProvider()}
DEFAULT_PROVIDER = "closed-form"


def get_provider(name) -> LocalFactorProvider:
    if isinstance(name, LocalFactorProvider):
        return name
    try:
        return PROVIDERS[name]
    except KeyError:
        raise ProviderUnavailable(f"unknown provider {name!r}") from None


def local_factor(provider, q: int, S: HalfIntegralMatrix) -> tuple:
    """Coefficients (b0, b1, ...) of B_q(X, S), low degree first."""
    if S.det2 % q:
        raise DomainError("B_q is only consulted for q | det 2S")
    return get_provider(provider)(q, S)


# ---------------------------------------------------------------------------
# character data


def _rational(z):
    if isinstance(z, CyclotomicNumber):
        return z.to_rational() if z.is_rational() else z
    return z


@dataclass(frozen=True)
class CharacterData:
    """Characters entering one Eisenstein coefficient.

    ``chi`` is the character read off 2 T2 (its inverse is applied), ``psi``
    the product entering the L-value, the G-sum and B_q.  ``kill_t2`` and
    ``bad`` list primes at which chi, respectively psi, are read as zero
    (characters taken modulo a multiple of those primes).
    """

    p: int
    chi: DirichletCharacter | None = None
    psi: DirichletCharacter | None = None
    kill_t2: tuple = ()
    bad: tuple = ()

    def t2_value(self, b: int):
        for q in self.kill_t2:
            if b % q == 0:
                return 0
        if self.chi is None or self.chi.is_trivial:
            return 1
        if gcd(b, self.chi.modulus) != 1:
            return 0
        return _rational(self.chi(b % self.chi.modulus).inverse())

    def psi_value(self, n: int):
        for q in self.bad:
            if n % q == 0:
                return 0
        if self.psi is None or self.psi.is_trivial:
            return 1
        if gcd(n, self.psi.modulus) != 1:
            return 0
        return _rational(self.psi(n % self.psi.modulus))

    def psi_discriminant(self):
        """Fundamental discriminant of psi's primitive part if psi has order <= 2, else None."""
        if self.psi is None or self.psi.is_trivial:
            return 1
        if self.psi.order > 2:
            return None
        prim = self.psi.primitive()
        f = prim.modulus
        return f if prim.is_even else -f

    def euler_primes(self) -> tuple:
        qs = set(self.bad)
        if self.psi is not None:
            qs |= set(q for q, _ in factor_int(self.psi.modulus))
        return tuple(sorted(qs))

    def describe(self) -> dict:
        def lit(c):
            return None if c is None else c.to_literal()

        return {"p": self.p, "chi": lit(self.chi), "psi": lit(self.psi), "kill_t2": list(self.kill_t2),
                "bad": list(self.bad)}


def twisted_data(p: int, N: int, s: int, chi: DirichletCharacter | None = None) -> CharacterData:
    """Data of the two-variable family at a classical point: chi * omega^-s, imprimitive at N p."""
    from .characters import teichmuller_character

    om = teichmuller_character(p) ** (-s)
    c = om if chi is None else chi * om
    bad = tuple(sorted(set(q for q, _ in factor_int(N * p))))
    return CharacterData(p=p, chi=c, psi=c, kill_t2=(p,), bad=bad)


def untwisted_data(p: int, N: int, chi: DirichletCharacter | None = None, s0: int = 0) -> CharacterData:
    """Data of the improved family: the 2 T2 character does not see p."""
    from .characters import teichmuller_character

    om = teichmuller_character(p) ** (s0)
    c = om if chi is None else chi * om
    bad = tuple(sorted(set(q for q, _ in factor_int(N * p))))
    return CharacterData(p=p, chi=chi, psi=c, kill_t2=(), bad=bad)


# ---------------------------------------------------------------------------
# L-values


def quadratic_twist_L(t: int, D0: int, data: CharacterData):
    """L(1-t, sigma_D0 psi) for the character modulo lcm(|D0|, Euler primes)."""
    dpsi = data.psi_discriminant()
    if dpsi is None:
        chi = (kronecker_sigma(D0) * data.psi).extend(prod(data.bad) or 1)
        return _rational(dirichlet_L_neg(t, chi, imprimitive=True))
    D1, _ = disc_decomposition(D0 * dpsi) if D0 * dpsi != 1 else (1, 1)
    val = quadratic_L_neg(t, D1)
    if not val:
        return val
    primes = set(data.euler_primes()) | set(q for q, _ in factor_int(abs(D0)))
    for q in sorted(primes):
        if D1 % q:
            val *= 1 - kron(D1, q) * Fraction(q) ** (t - 1)
    return val


# ---------------------------------------------------------------------------
# classical coefficients


@dataclass
class CoefficientReport:
    value: object
    terms: int
    provider: str
    method: str
    meta: dict = field(default_factory=dict)


def _term_local(I: HalfIntegralMatrix, t: int, data: CharacterData, D0: int, f: int):
    """sum_G psi^2 |det G|^(2t-1) prod_q B_q  via the local polynomials F_q."""
    val = 1
    e = I.content
    primes = set(q for q, _ in factor_int(f)) | set(q for q, _ in factor_int(e))
    for q in primes:
        pv = data.psi_value(q)
        if not pv:
            continue
        X = pv * Fraction(q) ** (t - 2)
        cs = kaufhold_polynomial(q, vp(e, q), vp(f, q), kron(D0, q))
        val *= _peval(cs, X)
    return val


def _term_cosets(I: HalfIntegralMatrix, t: int, data: CharacterData, provider: LocalFactorProvider):
    val = 0
    for G, m in coset_reps(I):
        pm = data.psi_value(m)
        if not pm:
            continue
        S = I.transform(G)
        prodq = 1
        for q, _ in factor_int(S.det2):
            pv = data.psi_value(q)
            if not pv:
                continue
            prodq *= _peval(provider(q, S), pv * Fraction(q) ** (t - 2))
        val += pm * pm * Fraction(m) ** (2 * t - 1) * prodq
    return val


def matrix_term(I: HalfIntegralMatrix, t: int, data: CharacterData, provider=DEFAULT_PROVIDER,
                method: str = "local"):
    """L(1-t, sigma_{-det 2I} psi) sum_G psi^2(det G) |det G|^(2t-1) prod_q B_q for one index I."""
    D0, f = disc_decomposition(-I.det2)
    Lv = quadratic_twist_L(t, D0, data)
    if not Lv:
        return Lv
    if method == "local":
        return Lv * _term_local(I, t, data, D0, f)
    if method == "cosets":
        return Lv * _term_cosets(I, t, data, get_provider(provider))
    raise DomainError(f"unknown method {method!r}")


def eisenstein_coeff_classical(T1: int, T4: int, L: int, data: CharacterData, t: int, s: int,
                               provider=DEFAULT_PROVIDER, method: str = "local"):
    """Coefficient of q1^T1 q2^T4, normalized by the archimedean and Gauss-sum prefactor.

    ``method="local"`` sums over superlattices prime by prime (F_q), while
    ``method="cosets"`` enumerates cosets and applies ``provider`` to each.
    """
    if t < 1 or s < 0:
        raise DomainError("need t >= 1 and s >= 0")
    A, C = L * L * T1, L * L * T4
    if A <= 0 or C <= 0:
        return Fraction(0)
    prov = get_provider(provider)
    bpol = b_polynomial(t + 1, s)
    bco = bpol.b_coefficients(A, C)
    bmax = isqrt(4 * A * C - 1)
    sieve(4 * A * C)
    total = 0
    for b in range(-bmax, bmax + 1):
        w = data.t2_value(b)
        if not w:
            continue
        bval = _peval(bco, b)
        if not bval:
            continue
        I = HalfIntegralMatrix(A, b, C)
        D0, f = disc_decomposition(-I.det2)
        Lv = quadratic_twist_L(t, D0, data)
        if not Lv:
            continue
        if method == "local":
            inner = _term_local(I, t, data, D0, f)
        elif method == "cosets":
            inner = _term_cosets(I, t, data, prov)
        else:
            raise DomainError(f"unknown method {method!r}")
        total += bval * w * Lv * inner
    return total


def prepare_tables(t: int, X: int) -> None:
    """Precompute L(1-t, chi_D) for |D| <= X (used before large assemblies)."""
    sieve(X)
    prepare_quadratic_table(t, X)


# ---------------------------------------------------------------------------
# the p-adic family


class _FamilyContext:
    """Caches of the weight-dependent p-adic quantities of one evaluation."""

    def __init__(self, kappa: WeightPoint, kappa_p: WeightPoint, data: CharacterData, prec: int):
        self.kappa, self.kappa_p, self.data, self.prec = kappa, kappa_p, data, prec
        self.p = kappa.p
        self.b_cache: dict = {}
        self.X_cache: dict = {}
        self.L_cache: dict = {}
        self.F_cache: dict = {}

    def t2_weight(self, b: int):
        """kappa(<b>) omega^j(b) chi^-1(b), the family analogue of b^s chi^-1(b)."""
        c = self.b_cache.get(b)
        if c is None:
            w = self.data.t2_value(b)
            if not w:
                c = 0
            else:
                p, prec = self.p, self.prec
                c = self.kappa.principal(abs(b), prec) * _omega_pow(b, p, self.kappa.j, prec) * _embed(w, p, prec)
            self.b_cache[b] = c
        return c

    def X(self, q: int):
        """psi(q) kappa'(q) q^-2, the family analogue of psi(q) q^(t-2)."""
        x = self.X_cache.get(q)
        if x is None:
            p, prec = self.p, self.prec
            pv = self.data.psi_value(q)
            if not pv:
                x = 0
            else:
                x = self.kappa_p.principal(q, prec) * _omega_pow(q, p, self.kappa_p.j, prec) * _embed(pv, p, prec)
                x = x / q**2
            self.X_cache[q] = x
        return x

    def L(self, D0: int):
        v = self.L_cache.get(D0)
        if v is None:
            v = _family_L(self, D0)
            self.L_cache[D0] = v
        return v

    def F(self, q: int, a: int, b: int, chi: int):
        key = (q, a, b, chi)
        v = self.F_cache.get(key)
        if v is None:
            X = self.X(q)
            v = _peval(kaufhold_polynomial(q, a, b, chi), X) if X != 0 else 1
            self.F_cache[key] = v
        return v


def _omega_pow(n: int, p: int, j: int, prec: int):
    """omega(n)^j for n prime to p."""
    if p == 2:
        return padic(2, -1 if (j % 2 and n % 4 == 3) else 1, prec)
    j %= p - 1
    if j == 0:
        return padic(p, 1, prec)
    return teichmuller(n % p, p, prec) ** j


def _embed(x, p: int, prec: int):
    if isinstance(x, (int, Fraction)):
        return padic(p, x, prec)
    if isinstance(x, CyclotomicNumber):
        if x.is_rational():
            return padic(p, x.to_rational(), prec)
        from .padic import PadicField

        return PadicField.get(p, x.M, prec + 10).embed(x, prec)
    return x


def _family_L(ctx: _FamilyContext, D0: int):
    """L_p(kappa', sigma_D0 xi) with the Euler factors of the imprimitive character."""
    kp = ctx.kappa_p
    p, prec = ctx.p, ctx.prec
    if kp.is_classical and kp.eps[0] == 1 and kp.k >= 1:
        # interpolation property: the value is L(1-t, sigma_D0 psi) with p removed
        val = quadratic_twist_L(kp.k, D0, ctx.data)
        return _embed(val, p, prec)
    eta = kronecker_sigma(D0)
    if ctx.data.psi is not None and not ctx.data.psi.is_trivial:
        eta = eta * ctx.data.psi
    from .characters import teichmuller_character

    eta = eta * teichmuller_character(p) ** kp.j
    val = kubota_leopoldt(kp, eta, prec=prec, method="series")
    for q in ctx.data.bad:
        if q == p:
            continue
        e0 = eta.primitive()
        if e0.modulus % q == 0:
            continue
        val = val * (1 - _embed(_rational(e0(q % e0.modulus)), p, prec) * kp.principal(q, prec) / q)
    return val


def eisenstein_coeff_family(T1: int, T4: int, L: int, kappa: WeightPoint, kappa_p: WeightPoint,
                            data: CharacterData, prec: int = 20, ctx: _FamilyContext | None = None):
    """p-adic coefficient a_{T1,T4,L}(kappa, kappa').

    ``kappa`` is the weight read off 2 T2 (the caller passes kappa[-1] kappa'^-1)
    and ``kappa_p`` the weight of the L-value and local factors.  ``data`` must
    hold the characters at the tame components of the weights (chi omega^-j).
    """
    if kappa_p.is_classical and kappa_p.k == 0 and kappa_p.eps[0] == 1:
        raise PoleError("kappa' = [0] meets the pole of the Kubota-Leopoldt function")
    p = kappa.p
    A, C = L * L * T1, L * L * T4
    if A <= 0 or C <= 0:
        return padic(p, 0, prec)
    ctx = ctx or _FamilyContext(kappa, kappa_p, data, prec)
    bmax = isqrt(4 * A * C - 1)
    sieve(4 * A * C)
    total = padic(p, 0, prec)
    for b in range(-bmax, bmax + 1):
        w = ctx.t2_weight(b)
        if w == 0:
            continue
        N = 4 * A * C - b * b
        D0, f = disc_decomposition(-N)
        Lv = ctx.L(D0)
        if Lv == 0:
            continue
        e = gcd(gcd(A, b), C)
        inner = 1
        for q in set(q for q, _ in factor_int(f)) | set(q for q, _ in factor_int(e)):
            inner = inner * ctx.F(q, vp(e, q), vp(f, q), kron(D0, q))
        total = total + w * Lv * inner
    return total


# ---------------------------------------------------------------------------
# assembly of the pulled-back family at a classical point


def eisenstein_table(Q: int, L: int, data: CharacterData, t: int, s: int, provider=DEFAULT_PROVIDER,
                     indices=None) -> dict:
    """{(T1, T4): coefficient} for 0 <= T1, T4 <= Q (or the given indices)."""
    prepare_tables(t, 4 * L**4 * Q * Q)
    idx = indices if indices is not None else [(a, b) for a in range(Q + 1) for b in range(Q + 1)]
    out = {}
    for a, b in idx:
        if (b, a) in out:
            out[(a, b)] = out[(b, a)]  # the pullback is symmetric in (z, w)
            continue
        out[(a, b)] = Fraction(eisenstein_coeff_classical(a, b, L, data, t, s, provider))
    return out


def _nonsquare_support(Q: int, L: int) -> list:
    """Indices whose positive-definite sum is complete: L^4 T1 T4 not a square."""
    out = []
    for a in range(1, Q + 1):
        for b in range(1, Q + 1):
            n = L**4 * a * b
            r = isqrt(n)
            if r * r != n:
                out.append((a, b))
    return out


@dataclass
class AssembledH:
    """A p-adic element of M_k(Np) (x) M_k(Np) in the coordinates of ``space``.

    The value is scale * p^shift * X with X an integer matrix mod p^prec.
    """

    kind: str
    k: int
    t: int
    s: int
    space: object
    raw: object  # TensorForm of the rational series before projection
    L: int
    X: object
    shift: int
    scale: Fraction
    prec: int
    projector: object
    meta: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.projector.p

    def pair(self, left, right) -> PadicNumber:
        """sum_ij left_i X_ij right_j, left and right integer vectors mod p^prec."""
        n = len(left)
        mod = self.p**self.prec
        acc = 0
        for i in range(n):
            if left[i] % mod == 0:
                continue
            row = sum(int(self.X[i, j]) * right[j] for j in range(n))
            acc += left[i] * row
        return PadicNumber(self.p, self.shift, acc % mod, self.prec + self.shift) * padic(
            self.p, self.scale, self.prec + self.shift)

    def coefficient(self, a: int, b: int) -> PadicNumber:
        from .qseries import to_zp

        mod = self.p**self.prec
        B = self.space.basis
        left = [to_zp(f.coeffs[a], self.p, self.prec) for f in B]
        right = [to_zp(f.coeffs[b], self.p, self.prec) for f in B]
        return self.pair(left, right)

    def qexp2(self, Q1: int, Q2: int):
        from .qseries import QExp2

        return QExp2.from_function(self.coefficient, Q1, Q2, weight=self.k, level=self.space.M)

    def apply(self, A, B=None) -> "AssembledH":
        """(A (x) B) X for integer matrices mod p^prec acting on coordinates."""
        from .qseries import _reduce

        B = A if B is None else B
        mod = self.p**self.prec
        X = _reduce(A * self.X * B.transpose(), mod)
        return AssembledH(self.kind, self.k, self.t, self.s, self.space, self.raw, self.L, X, self.shift,
                          self.scale, self.prec, self.projector, dict(self.meta))

    def same_as(self, other: "AssembledH") -> bool:
        """Equality of the represented p-adic tensors at the common precision."""
        d = min(self.prec + self.shift, other.prec + other.shift)
        n = self.space.dim
        for i in range(n):
            for j in range(n):
                x = PadicNumber(self.p, self.shift, int(self.X[i, j]), self.prec + self.shift) * padic(
                    self.p, self.scale, d)
                y = PadicNumber(self.p, other.shift, int(other.X[i, j]), other.prec + other.shift) * padic(
                    self.p, other.scale, d)
                if (x - y).valuation() < d:
                    return False
        return True


def _to_padic_matrix(h, p: int, prec: int):
    """Integer matrix X mod p^prec and shift v with h = p^v X."""
    import flint
    from .qseries import to_zp

    vals = [vp(Fraction(x), p) for r in h for x in r if x != 0]
    v = min(vals) if vals else 0
    v = min(v, 0)
    c = Fraction(p) ** (-v)
    X = flint.fmpz_mat([[to_zp(Fraction(x) * c, p, prec) for x in r] for r in h])
    return X, v


def level_space(k: int, N: int, p: int):
    """Saturated basis of M_k(Gamma0(N p)) with enough terms for U_p."""
    from .qseries import build_space, sturm_bound

    sb = sturm_bound(k, N * p)
    return build_space(k, N * p, Q=p * (sb + 2)).saturate(p)


def assemble_H(kind: str, k: int, t: int | None = None, *, p: int = 3, N: int = 5, chi=None, k0: int = 2,
               alpha=0, prec: int = 30, L: int | None = None, provider=DEFAULT_PROVIDER, space=None,
               extra: int = 12) -> AssembledH:
    """The ordinary pullback H(k, t) (kind "two-variable") or H*(k) (kind "improved").

    two-variable: the series with L = p^j (default p) is fitted in M_k(Np)^(x2)
    and mapped to (U^-1 e (x) U^-1 e)^(2j) times 2^s / c.  Its coefficients at
    L = 1 are not those of a form of level Np, while L = p already is.
    improved: the untwisted series (t = k - k0 + 1) is fitted on indices with
    T1 T4 not a square, where the positive-definite sum is complete, then
    projected to slope <= alpha and multiplied by (-1)^k0.
    """
    from .qseries import fit_tensor, ordinary_inverse_matrix, slope_project, sturm_bound

    space = space or level_space(k, N, p)
    sb = sturm_bound(k, N * p)
    U = space.hecke_matrix(p)
    if kind == "two-variable":
        if alpha != 0:
            raise DomainError("the two-variable family is built in the ordinary case only")
        if t is None or not 1 <= t <= k - 1:
            raise DomainError("two-variable kind needs 1 <= t <= k - 1")
        s = k - t - 1
        L = L or p
        j = vp(L, p)
        if L != p**j or j < 1:
            raise DomainError("L must be a positive power of p")
        data = twisted_data(p, N, s, chi)
        coeffs = eisenstein_table(sb + 4, L, data, t, s, provider)
        raw = fit_tensor(space, coeffs)
        scale = Fraction(2) ** s / c_coefficient(t + 1, s)
        proj = slope_project(U, p, 0, prec)
        X, v = _to_padic_matrix(raw.coords, p, prec)
        W = ordinary_inverse_matrix(proj, U)
        Wj = W
        for _ in range(2 * j - 1):
            Wj = _mod_mat(Wj * W, p**prec)
        out = AssembledH(kind, k, t, s, space, raw, L, X, v, scale, prec, proj)
        out = out.apply(Wj)
    elif kind == "improved":
        t = k - k0 + 1
        s = k0 - 2
        if t < 1:
            raise DomainError("improved kind needs k >= k0")
        L = 1
        data = untwisted_data(p, N, chi, s0=s)
        Qc = sb + extra
        supp = _nonsquare_support(Qc, 1)
        coeffs = eisenstein_table(Qc, 1, data, t, s, provider, indices=supp)
        raw = fit_tensor(space, coeffs, support=supp)
        scale = Fraction(-1) ** k0 * Fraction(2) ** s / c_coefficient(t + 1, s)
        proj = slope_project(U, p, alpha, prec)
        X, v = _to_padic_matrix(raw.coords, p, prec)
        out = AssembledH(kind, k, t, s, space, raw, L, X, v, scale, prec, proj)
        out = out.apply(proj.matrix)
    else:
        raise DomainError(f"unknown kind {kind!r}")
    out.meta.update({"provider": get_provider(provider).name, "fit": raw.meta.get("fit"),
                     "kernel_dim": raw.kernel_dim, "p": p, "N": N, "alpha": str(alpha)})
    return out


def _mod_mat(A, mod: int):
    from .qseries import _reduce

    return _reduce(A, mod)


def stabilization_step(H: AssembledH, U_rows) -> AssembledH:
    """One more (U^-1 e (x) U^-1 e)^2 (U (x) U)^2 step; a stabilized H is a fixed point."""
    from .qseries import ordinary_inverse_matrix, zp_matrix

    mod = H.p**H.prec
    Um = zp_matrix(U_rows, H.p, H.prec)
    W = ordinary_inverse_matrix(H.projector, U_rows)
    M = _mod_mat(W * W * H.projector.matrix * Um * Um, mod)
    return H.apply(M)
