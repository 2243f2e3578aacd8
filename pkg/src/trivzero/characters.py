"""Dirichlet characters, Gauss sums, Bernoulli numbers and Kubota-Leopoldt L-values."""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, gcd, lcm

import flint

from .padic import (
    CyclotomicNumber,
    DomainError,
    INF,
    PadicExt,
    PadicField,
    PadicNumber,
    PrecisionError,
    WeightPoint,
    padic,
    primitive_root,
    tame_order,
    u_generator,
    vp,
)


class PoleError(ArithmeticError):
    pass


def factor(n: int) -> list:
    if n == 1:
        return []
    return [(int(q), int(e)) for q, e in flint.fmpz(n).factor()]


def prime_divisors(n: int) -> list:
    return [q for q, _ in factor(abs(n))] if n else []


class DirichletCharacter:
    """Character mod ``modulus`` with values zeta_order^exps[a] (None off the unit group)."""

    __slots__ = ("modulus", "order", "exps", "_key")

    def __init__(self, modulus: int, order: int, exps):
        exps = list(exps)
        # reduce to the exact order
        vals = [e for e in exps if e is not None]
        g = order
        for e in vals:
            g = gcd(g, e)
        if g > 1 and order > 1:
            order //= g
            exps = [None if e is None else e // g for e in exps]
        if order == 1 or not any(vals):
            order = 1
            exps = [None if e is None else 0 for e in exps]
        self.modulus = modulus
        self.order = order
        self.exps = tuple(None if e is None else e % order for e in exps)
        self._key = (modulus, order, self.exps)

    # constructors ---------------------------------------------------------
    @classmethod
    def trivial(cls, modulus: int = 1):
        return cls(modulus, 1, [0 if gcd(a, modulus) == 1 else None for a in range(modulus)])

    @classmethod
    def from_function(cls, modulus: int, order: int, fn):
        return cls(modulus, order, [fn(a) if gcd(a, modulus) == 1 else None for a in range(modulus)])

    @classmethod
    def from_generators(cls, modulus: int, order: int, pairs):
        """Character literal: list of (generator, exponent) with values zeta_order^exponent.

        The generators must generate (Z/modulus)^* (checked by closure).
        """
        gens = [(g % modulus, e % order) for g, e in pairs]
        table = {1 % modulus: 0}
        frontier = [1 % modulus]
        while frontier:
            nxt = []
            for a in frontier:
                for g, e in gens:
                    b = a * g % modulus
                    if b not in table:
                        table[b] = (table[a] + e) % order
                        nxt.append(b)
                    elif table[b] != (table[a] + e) % order:
                        raise DomainError("generator values are inconsistent")
            frontier = nxt
        units = [a for a in range(modulus) if gcd(a, modulus) == 1]
        if len(table) != len(units):
            raise DomainError("generators do not span the unit group")
        return cls(modulus, order, [table.get(a) if gcd(a, modulus) == 1 else None for a in range(modulus)])

    # evaluation -----------------------------------------------------------
    def exp(self, a: int):
        return self.exps[a % self.modulus]

    def __call__(self, a: int) -> CyclotomicNumber:
        e = self.exps[a % self.modulus]
        if e is None:
            return CyclotomicNumber.rational(0, self.order)
        return CyclotomicNumber.zeta(self.order, e)

    def real_value(self, a: int) -> int:
        """Value as an integer for characters of order <= 2."""
        if self.order > 2:
            raise DomainError("character is not real")
        e = self.exps[a % self.modulus]
        return 0 if e is None else (1 if e == 0 else -1)

    @property
    def is_trivial(self) -> bool:
        return self.order == 1

    @property
    def parity(self) -> int:
        return 1 if self.exp(-1) == 0 else -1

    @property
    def is_even(self) -> bool:
        return self.exp(-1) == 0

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        M = lcm(self.modulus, other.modulus)
        n = lcm(self.order, other.order)
        a1, a2 = n // self.order, n // other.order
        out = []
        for a in range(M):
            if gcd(a, M) != 1:
                out.append(None)
                continue
            out.append(self.exp(a) * a1 + other.exp(a) * a2)
        return DirichletCharacter(M, n, out)

    def inverse(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, self.order, [None if e is None else -e for e in self.exps])

    def __pow__(self, k: int) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, self.order, [None if e is None else e * k for e in self.exps])

    def extend(self, M: int) -> "DirichletCharacter":
        """The character induced to modulus lcm(modulus, M)."""
        return self * DirichletCharacter.trivial(M)

    def __eq__(self, other):
        return isinstance(other, DirichletCharacter) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    # conductor ------------------------------------------------------------
    @property
    def conductor(self) -> int:
        return _conductor(self)

    def primitive(self) -> "DirichletCharacter":
        return _primitive(self)

    def _primitive_uncached(self) -> "DirichletCharacter":
        c = self.conductor
        if c == self.modulus:
            return self
        out = []
        for a in range(c):
            if gcd(a, c) != 1:
                out.append(None)
                continue
            b = a
            while gcd(b, self.modulus) != 1:
                b += c
            out.append(self.exp(b))
        return DirichletCharacter(c, self.order, out)

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    def restrict_primes(self, primes) -> "DirichletCharacter":
        """Induce to also vanish at the given primes."""
        M = self.modulus
        for q in primes:
            if M % q:
                M *= q
        return self.extend(M)

    def to_literal(self) -> dict:
        return {"modulus": self.modulus, "order": self.order, "generators": _generator_literal(self)}

    @classmethod
    def from_literal(cls, d: dict) -> "DirichletCharacter":
        return cls.from_generators(d["modulus"], d["order"], d["generators"])

    def __repr__(self):
        return f"DirichletCharacter(mod {self.modulus}, order {self.order}, cond {self.conductor})"


@lru_cache(maxsize=None)
def _conductor(chi: DirichletCharacter) -> int:
    M = chi.modulus
    if chi.is_trivial:
        return 1
    c = 1
    for q, e in factor(M):
        Mq = M // q**e
        # smallest q^f such that chi is trivial on units = 1 mod q^f (and 1 mod Mq)
        f = e
        while f > 0:
            mod = q ** (f - 1)
            ok = True
            for a in range(1, q**e, mod):
                if a % q == 0:
                    continue
                # CRT: x = a mod q^e, 1 mod Mq
                x = _crt(a, q**e, 1, Mq)
                if chi.exp(x) != 0:
                    ok = False
                    break
            if not ok:
                break
            f -= 1
        c *= q**f
    return c


@lru_cache(maxsize=None)
def _primitive(chi: DirichletCharacter) -> DirichletCharacter:
    return chi._primitive_uncached()


def _crt(a, m, b, n):
    if n == 1:
        return a % m
    g = m * n
    return (a * n * pow(n, -1, m) + b * m * pow(m, -1, n)) % g


def _generator_literal(chi):
    gens = []
    for q, e in factor(chi.modulus):
        Mq = chi.modulus // q**e
        if q == 2:
            cands = [-1, 5] if e >= 3 else ([-1] if e == 2 else [])
        else:
            g = primitive_root(q)
            if pow(g, q - 1, q * q) == 1:
                g += q
            cands = [g]
        for g in cands:
            x = _crt(g % q**e, q**e, 1, Mq)
            gens.append([x, chi.exp(x)])
    return gens


# ---------------------------------------------------------------------------
# standard characters


@lru_cache(maxsize=None)
def teichmuller_character(p: int) -> DirichletCharacter:
    """omega: omega(g) = zeta_{p-1} for g the smallest primitive root (p odd); mod 4 for p = 2."""
    if p == 2:
        return DirichletCharacter(4, 2, [None, 0, None, 1])
    g = primitive_root(p)
    out = [None] * p
    x = 1
    for i in range(p - 1):
        out[x] = i
        x = x * g % p
    return DirichletCharacter(p, p - 1, out)


def wild_index(x: int, p: int, a: int) -> int:
    """l with <x> = u^l mod p^(a+1) (mod 2^(a+2) for p = 2), l taken mod p^a."""
    u = u_generator(p)
    q = p ** (a + 1) if p != 2 else 2 ** (a + 2)
    w = x % q
    # strip the tame part
    if p == 2:
        if w % 4 == 3:
            w = (-w) % q
    else:
        w = w * pow(_teich_mod(x, p, q), -1, q) % q
    y = 1
    for l in range(p**a):
        if y == w:
            return l
        y = y * u % q
    raise DomainError("discrete log failed")


def _teich_mod(x: int, p: int, q: int) -> int:
    y = x % q
    for _ in range(64):
        z = pow(y, p, q)
        if z == y:
            break
        y = z
    return y


@lru_cache(maxsize=None)
def wild_character(p: int, a: int, e: int) -> DirichletCharacter:
    """eps with eps(u) = zeta_{p^a}^e, as a character mod p^(a+1) (2^(a+2) for p = 2)."""
    if a == 0 or e % p**a == 0:
        return DirichletCharacter.trivial(1)
    q = p ** (a + 1) if p != 2 else 2 ** (a + 2)
    return DirichletCharacter.from_function(q, p**a, lambda x: e * wild_index(x, p, a))


@lru_cache(maxsize=None)
def kronecker_symbol(D: int, n: int) -> int:
    """(D/n) for n > 0."""
    if n <= 0:
        raise DomainError("n must be positive")
    res = 1
    while n % 2 == 0:
        n //= 2
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5):
            res = -res
    if n == 1:
        return res
    return res * int(flint.fmpz(D % n).jacobi(n)) if gcd(D, n) == 1 else 0


def fundamental_discriminant(D: int):
    """(D0, f) with D = D0 f^2 and D0 a fundamental discriminant (D = 0 or 1 mod 4)."""
    if D == 0:
        raise DomainError("D = 0")
    if D % 4 not in (0, 1):
        raise DomainError("not a discriminant")
    sign = 1 if D > 0 else -1
    n = abs(D)
    core = 1
    f = 1
    for q, e in factor(n):
        core *= q ** (e % 2)
        f *= q ** (e // 2)
    D0 = sign * core
    if D0 % 4 != 1:
        D0 *= 4
        f //= 2
    return D0, f


@lru_cache(maxsize=None)
def kronecker_sigma(D: int) -> DirichletCharacter:
    """sigma_D: the primitive quadratic character attached to Q(sqrt D)."""
    if D == 0:
        raise DomainError("D = 0")
    if D % 4 not in (0, 1):
        D *= 4
    D0, _ = fundamental_discriminant(D)
    if D0 == 1:
        return DirichletCharacter.trivial(1)
    M = abs(D0)
    return DirichletCharacter(M, 2, [None if gcd(a, M) != 1 else (0 if kronecker_symbol(D0, a) == 1 else 1) for a in range(M)])


def decompose_character(chi: DirichletCharacter, N1: int, R: int, p: int):
    """chi = chi1 * chi' * eps1 with chi1 mod N1, chi' primitive mod R, eps1 mod a p-power."""
    for x, y in ((N1, R), (N1, p), (R, p)):
        if gcd(x, y) != 1:
            raise DomainError("N1, R, p must be pairwise coprime")
    if any((N1 * R * p) % q for q, _ in factor(chi.modulus)):
        chi = chi.primitive()  # extra primes in the modulus are harmless when the conductor avoids them
    M = chi.modulus
    rest = M
    pp = 1
    while rest % p == 0:
        rest //= p
        pp *= p
    if (N1 * R) % rest and rest % (N1 * R) and gcd(rest, N1 * R) != rest:
        raise DomainError("modulus does not divide N1 R p^infinity")
    for q, _ in factor(rest):
        if (N1 * R) % q:
            raise DomainError("modulus does not divide N1 R p^infinity")
    parts = []
    for m in (N1, R, pp):
        others = M // _part(M, m)
        def fn(a, m=m, others=others):
            x = _crt(a % max(_part(M, m), 1), max(_part(M, m), 1), 1, others) if _part(M, m) > 1 else 1
            return chi.exp(x)
        mm = _part(M, m)
        if mm == 1:
            parts.append(DirichletCharacter.trivial(m if m > 0 else 1).extend(m))
            continue
        parts.append(DirichletCharacter.from_function(mm, chi.order, fn).extend(m))
    chi1, chip, eps1 = parts
    if chip.conductor != R:
        raise DomainError("the R-component is not primitive modulo R")
    chip = chip.primitive() if chip.modulus != R else chip
    return chi1, chip, eps1


def _part(M: int, m: int) -> int:
    """Largest divisor of M supported on the primes of m."""
    out = 1
    for q, e in factor(M):
        if m % q == 0:
            out *= q**e
    return out


# ---------------------------------------------------------------------------
# Gauss sums and Bernoulli numbers


def gauss_sum(chi: DirichletCharacter) -> CyclotomicNumber:
    if not chi.is_primitive:
        raise DomainError("Gauss sums are taken for primitive characters")
    c = chi.modulus
    if c == 1:
        return CyclotomicNumber.rational(1, 1)
    M = lcm(chi.order, c)
    d = {}
    for a in range(1, c):
        e = chi.exp(a)
        if e is None:
            continue
        k = (e * (M // chi.order) + a * (M // c)) % M
        d[k] = d.get(k, 0) + 1
    return CyclotomicNumber.from_exponent_dict(M, d)


@lru_cache(maxsize=None)
def _bern(i: int) -> Fraction:
    b = flint.fmpq.bernoulli(i)
    return Fraction(int(b.p), int(b.q))


def _class_power_sums(chi: DirichletCharacter, t: int) -> dict:
    """exponent e -> [sum_{a<=f, chi(a)=z^e} a^m for m = 0..t]."""
    f = chi.modulus
    out = {}
    for a in range(1, f + 1):
        e = chi.exp(a)
        if e is None:
            continue
        row = out.setdefault(e, [0] * (t + 1))
        x = 1
        for m in range(t + 1):
            row[m] += x
            x *= a
    return out


@lru_cache(maxsize=4096)
def generalized_bernoulli(t: int, chi: DirichletCharacter) -> CyclotomicNumber:
    """B_{t,chi} of the primitive character attached to chi.

    Uses B_{t,chi} = sum_i C(t,i) B_i f^(i-1) sum_a chi(a) a^(t-i).
    """
    chi = chi.primitive()
    f = chi.modulus
    sums = _class_power_sums(chi, t)
    d = {}
    for e, row in sums.items():
        acc = Fraction(0)
        fp = Fraction(1, f)
        for i in range(t + 1):
            bi = _bern(i)
            if bi:
                acc += comb(t, i) * bi * fp * row[t - i]
            fp *= f
        if acc:
            d[e] = acc
    return CyclotomicNumber.from_exponent_dict(chi.order, d)


def bernoulli_by_series(t: int, chi: DirichletCharacter) -> CyclotomicNumber:
    """Oracle: B_{t,chi} from the generating function sum_a chi(a) x e^(ax)/(e^(fx)-1)."""
    chi = chi.primitive()
    f = chi.modulus
    n = t + 2
    # x/(e^{fx}-1) as a power series: invert (e^{fx}-1)/x
    den = [Fraction(f ** (m + 1), _fact(m + 1)) for m in range(n)]
    inv = [Fraction(0)] * n
    inv[0] = 1 / den[0]
    for m in range(1, n):
        s = sum(den[j] * inv[m - j] for j in range(1, m + 1))
        inv[m] = -s / den[0]
    d = {}
    for a in range(1, f + 1):
        e = chi.exp(a)
        if e is None:
            continue
        ex = [Fraction(a**m, _fact(m)) for m in range(n)]
        coef = sum(ex[j] * inv[t - j] for j in range(t + 1))
        d[e] = d.get(e, 0) + coef * _fact(t)
    return CyclotomicNumber.from_exponent_dict(chi.order, d)


@lru_cache(maxsize=None)
def _fact(m: int) -> int:
    out = 1
    for i in range(2, m + 1):
        out *= i
    return out


def dirichlet_L_neg(t: int, chi: DirichletCharacter, imprimitive: bool = False) -> CyclotomicNumber:
    """L(1-t, chi_0) = -B_{t,chi_0}/t for the primitive chi_0.

    With ``imprimitive`` the Euler factors at primes dividing the modulus but
    not the conductor are restored: prod (1 - chi_0(q) q^(t-1)).
    """
    if t < 1:
        raise DomainError("t must be >= 1")
    val = generalized_bernoulli(t, chi) * Fraction(-1, t)
    if imprimitive:
        chi0 = chi.primitive()
        for q in prime_divisors(chi.modulus):
            if chi0.modulus % q:
                val = val * (1 - chi0(q) * Fraction(q) ** (t - 1))
    return val


def euler_removed_L(t: int, chi: DirichletCharacter, p: int) -> CyclotomicNumber:
    """(1 - chi_0(p) p^(t-1)) L(1-t, chi_0)."""
    chi0 = chi.primitive()
    val = dirichlet_L_neg(t, chi0)
    if chi0.modulus % p:
        val = val * (1 - chi0(p) * Fraction(p) ** (t - 1))
    return val


@lru_cache(maxsize=None)
def class_number(D: int) -> int:
    """h(D) for a negative discriminant, by counting reduced forms."""
    if D >= 0 or D % 4 not in (0, 1):
        raise DomainError("negative discriminant expected")
    n = -D
    h = 0
    a = 1
    while 3 * a * a <= n:
        for b in range(-a + 1, a + 1):
            if (b * b + n) % (4 * a):
                continue
            c = (b * b + n) // (4 * a)
            if c < a:
                continue
            if b < 0 and c == a:
                continue
            h += 1
        a += 1
    return h


# ---------------------------------------------------------------------------
# Kubota-Leopoldt


def kl_twist(eta: DirichletCharacter, p: int, t: int, eps=(1, 0)) -> DirichletCharacter:
    """The character eps * omega^(-t) * eta whose L-value L_p interpolates at eps[t]."""
    om = teichmuller_character(p) ** (-t)
    chi = om * eta
    order, e = eps
    if order > 1 and e % order:
        a = vp(order, p)
        chi = chi * wild_character(p, a, e)
    return chi


def kl_classical_value(eta: DirichletCharacter, p: int, t: int, eps=(1, 0)) -> CyclotomicNumber:
    """(1 - (eps omega^-t eta)_0(p) p^(t-1)) L(1-t, eps omega^-t eta)."""
    return euler_removed_L(t, kl_twist(eta, p, t, eps), p)


def _value_conductor(eta, p, eps_orders) -> int:
    M = lcm(eta.order, tame_order(p))
    for o in eps_orders:
        M = lcm(M, o)
    return M


class KLSeries:
    """Newton-form interpolant of kappa -> L_p(kappa, eta) in T = kappa(u) - 1.

    Nodes are eps[t] for every eps with eps(u)^p = 1 (eps(u) = +-1 for p = 2)
    and consecutive t >= t_start.  The integers t = j mod (p-1) are dense in
    Z_p, so one series serves every tame branch.  Values at held-out points
    are certified by the Weierstrass-division bound sum_i v(T - T_i); for
    trivial eta the interpolated function is T * L_p, which is integral.
    """

    def __init__(self, eta: DirichletCharacter, p: int, nodes_per_eps: int = 9,
                 t_start: int = 9, cap: int = 120, extra_orders=()):
        if not eta.is_even:
            raise DomainError("Kubota-Leopoldt needs an even character")
        self.eta, self.p = eta, p
        self.pole = eta.primitive().is_trivial
        eps_order = p
        self.M = _value_conductor(eta, p, (eps_order if p != 2 else 1,) + tuple(extra_orders))
        self.field = PadicField.get(p, self.M, cap)
        self.cap = cap
        K = self.field
        u = u_generator(p)
        nodes = []
        for i in range(nodes_per_eps):
            t = t_start + i
            for e in range(eps_order):
                if p == 2:
                    T = padic(2, (-1) ** e * u**t - 1, cap)
                    T = K.coerce(T)
                else:
                    T = K.zeta(e * (self.M // eps_order)) * padic(p, u, cap) ** t - 1
                val = K.embed(kl_classical_value(eta, p, t, (eps_order, e)), cap)
                if self.pole:
                    val = val * T
                nodes.append((T, val))
        self.nodes = [T for T, _ in nodes]
        coef = [v for _, v in nodes]
        n = len(coef)
        for j in range(1, n):
            for i in range(n - 1, j - 1, -1):
                coef[i] = (coef[i] - coef[i - 1]) / (self.nodes[i] - self.nodes[i - j])
        self.coef = coef

    def _bound(self, T) -> Fraction:
        tot = Fraction(0)
        for Ti in self.nodes:
            d = T - Ti
            try:
                tot += Fraction(d.true_valuation())
            except PrecisionError:
                return INF
        return tot

    def evaluate(self, T):
        K = self.field
        T = K.coerce(T)
        acc = self.coef[-1]
        for i in range(len(self.coef) - 2, -1, -1):
            acc = acc * (T - self.nodes[i]) + self.coef[i]
        bound = self._bound(T)
        if self.pole:
            tv = T.true_valuation()
            acc = acc / T
            bound = bound - tv
        if bound != INF:
            cap = int(bound)
            if acc.v is None:
                acc = PadicExt(K, [0], 0, min(acc.prec, cap))
            else:
                acc = PadicExt(K, list(acc.c), acc.v, min(acc.prec, cap))
        return acc


_KL_CACHE: dict = {}


def kl_series(eta, p, nodes_per_eps=9, cap=120, extra_orders=()):
    key = (eta, p, nodes_per_eps, cap, tuple(extra_orders))
    if key not in _KL_CACHE:
        _KL_CACHE[key] = KLSeries(eta, p, nodes_per_eps=nodes_per_eps, cap=cap, extra_orders=extra_orders)
    return _KL_CACHE[key]


def kubota_leopoldt(kappa: WeightPoint, eta: DirichletCharacter, prec: int = 20, method: str = "auto",
                    field: PadicField = None):
    """L_p(kappa, eta).

    ``method="classical"`` uses the interpolation property at a classical
    point eps[t] with t >= 1 (exact value, embedded); ``"series"`` evaluates the
    interpolating Iwasawa series; ``"auto"`` picks the former when possible.
    """
    p = kappa.p
    if not eta.is_even:
        raise DomainError("Kubota-Leopoldt needs an even character")
    triv = eta.primitive().is_trivial
    if kappa.is_classical and kappa.k == 0 and kappa.eps[0] == 1 and triv:
        raise PoleError("L_p(kappa, 1) has a simple pole at [0]")
    if method == "auto":
        method = "classical" if kappa.is_classical and kappa.k >= 1 else "series"
    if method == "classical":
        if not kappa.is_classical or kappa.k < 1:
            raise DomainError("classical evaluation needs eps[t] with t >= 1")
        val = kl_classical_value(eta, p, kappa.k, kappa.eps)
        if field is None:
            M = lcm(val.M, 1)
            if val.is_rational():
                return padic(p, val.to_rational(), prec)
            field = PadicField.get(p, M, prec + 10)
        return field.embed(val, prec)
    extra = (kappa.eps[0],) if kappa.is_classical and kappa.eps[0] > 1 else ()
    nodes = max(4, (prec + 6) // 2 + 1) if p != 2 else max(4, (prec + 6) // 4 + 1)
    ser = kl_series(eta, p, nodes_per_eps=nodes, cap=max(120, 4 * p * nodes), extra_orders=extra)
    w = kappa.w
    if isinstance(w, PadicNumber):
        T = ser.field.coerce(w) - 1
    elif w.field is ser.field:
        T = w - 1
    elif kappa.is_classical:
        T = WeightPoint.classical(p, kappa.k, kappa.eps, prec=w.prec, field=ser.field).w - 1
    else:
        raise DomainError("weight point lives in a different field")
    if T.is_zero() and ser.pole:
        raise PoleError("L_p(kappa, 1) has a simple pole at [0]")
    return ser.evaluate(T)
