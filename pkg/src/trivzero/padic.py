"""Exact rational, cyclotomic and precision-tracked p-adic arithmetic.

Rationals are ``fractions.Fraction``.  p-adic numbers follow an interval
model: a value is known modulo ``p**prec`` and every operation returns the
pessimistic precision of its result.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd

import flint

INF = float("inf")


class PrecisionError(ArithmeticError):
    pass


class DomainError(ValueError):
    pass


def vp(n, p: int):
    """Valuation of a nonzero integer or Fraction (inf for 0)."""
    if n == 0:
        return INF
    if isinstance(n, Fraction):
        return vp(n.numerator, p) - vp(n.denominator, p)
    n = abs(int(n))
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _split(n: int, p: int):
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v, n


# ---------------------------------------------------------------------------
# Q_p


class PadicNumber:
    """Element of Q_p known to absolute precision ``prec``.

    ``v`` is the valuation (None for a certified zero) and ``unit`` is an
    integer in [0, p**(prec - v)) prime to p.
    """

    __slots__ = ("p", "v", "unit", "prec")

    def __init__(self, p: int, v, unit: int, prec: int):
        self.p = p
        self.prec = prec
        if v is None or v >= prec:
            self.v, self.unit = None, 0
            return
        r = prec - v
        unit %= p**r
        if unit == 0:
            self.v, self.unit = None, 0
            return
        k, unit = _split(unit, p)
        self.v = v + k
        self.unit = unit % p ** (prec - self.v)

    # construction ---------------------------------------------------------
    @classmethod
    def from_rational(cls, p: int, x, prec: int) -> "PadicNumber":
        x = Fraction(x)
        if x == 0:
            return cls(p, None, 0, prec)
        a, b = x.numerator, x.denominator
        va, a = _split(a, p)
        vb, b = _split(b, p)
        v = va - vb
        if v >= prec:
            return cls(p, None, 0, prec)
        r = prec - v
        mod = p**r
        return cls(p, v, a * pow(b, -1, mod) % mod, prec)

    @classmethod
    def zero(cls, p: int, prec: int) -> "PadicNumber":
        return cls(p, None, 0, prec)

    # basic queries --------------------------------------------------------
    def valuation(self):
        return INF if self.v is None else self.v

    def is_zero(self) -> bool:
        return self.v is None

    @property
    def relprec(self) -> int:
        return 0 if self.v is None else self.prec - self.v

    def lift(self) -> Fraction:
        """Rational representative p^v * unit (0 for a certified zero)."""
        if self.v is None:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.p) ** self.v

    def lift_int(self) -> int:
        """Integer representative in [0, p^prec); requires v >= 0."""
        if self.v is None:
            return 0
        if self.v < 0:
            raise DomainError("not integral")
        return self.unit * self.p**self.v

    def residue(self) -> int:
        return self.lift_int() % self.p

    def digits(self) -> list:
        """Little-endian base-p digits of the unit part."""
        out, u = [], self.unit
        for _ in range(self.relprec):
            out.append(u % self.p)
            u //= self.p
        return out

    def to_json(self) -> dict:
        return {"p": self.p, "valuation": self.v, "digits": self.digits(), "precision": self.prec}

    @classmethod
    def from_json(cls, d: dict) -> "PadicNumber":
        u = 0
        for dig in reversed(d["digits"]):
            u = u * d["p"] + dig
        return cls(d["p"], d["valuation"], u, d["precision"])

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, PadicNumber):
            if other.p != self.p:
                raise DomainError("prime mismatch")
            return other
        if isinstance(other, (int, Fraction)):
            return PadicNumber.from_rational(self.p, other, self.prec + _extra(other, self.p))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.p
        prec = min(self.prec, other.prec)
        if self.v is None:
            return PadicNumber(p, other.v, other.unit, prec)
        if other.v is None:
            return PadicNumber(p, self.v, self.unit, prec)
        v = min(self.v, other.v)
        n = self.unit * p ** (self.v - v) + other.unit * p ** (other.v - v)
        return PadicNumber(p, v, n, prec)

    __radd__ = __add__

    def __neg__(self):
        if self.v is None:
            return self
        return PadicNumber(self.p, self.v, -self.unit, self.prec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.p
        if self.v is None and other.v is None:
            return PadicNumber(p, None, 0, self.prec + other.prec)
        if self.v is None:
            return PadicNumber(p, None, 0, self.prec + other.v)
        if other.v is None:
            return PadicNumber(p, None, 0, other.prec + self.v)
        v = self.v + other.v
        prec = min(self.prec + other.v, other.prec + self.v)
        return PadicNumber(p, v, self.unit * other.unit, prec)

    __rmul__ = __mul__

    def inverse(self):
        if self.v is None:
            raise ZeroDivisionError("p-adic zero (to its precision) is not invertible")
        r = self.relprec
        mod = self.p**r
        return PadicNumber(self.p, -self.v, pow(self.unit, -1, mod), r - self.v)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        if n == 0:
            return PadicNumber(self.p, 0, 1, self.relprec if self.v is not None else self.prec)
        if self.v is None:
            return PadicNumber(self.p, None, 0, self.prec * n if self.prec > 0 else self.prec)
        r = self.relprec
        mod = self.p**r
        return PadicNumber(self.p, self.v * n, pow(self.unit, n, mod), self.v * n + r)

    def __eq__(self, other):
        try:
            d = self - other
        except DomainError:
            return False
        if d is NotImplemented:
            return NotImplemented
        return d.is_zero()

    __hash__ = None

    def __repr__(self):
        if self.v is None:
            return f"O({self.p}^{self.prec})"
        return f"{self.unit}*{self.p}^{self.v} + O({self.p}^{self.prec})"


def _extra(x, p):
    # exact constants are carried with enough room not to limit precision
    x = Fraction(x)
    if x == 0:
        return 0
    return max(0, vp(x, p))


def padic(p: int, x, prec: int) -> PadicNumber:
    return PadicNumber.from_rational(p, x, prec)


def agreement(x, y) -> int:
    """Absolute digits on which x and y provably agree: v(x - y) capped by its precision."""
    d = x - y
    return min(d.valuation(), d.prec)


# ---------------------------------------------------------------------------
# weight-space coordinates


def u_generator(p: int) -> int:
    return 5 if p == 2 else 1 + p


def tame_order(p: int) -> int:
    return 2 if p == 2 else p - 1


def teichmuller(a: int, p: int, prec: int) -> PadicNumber:
    if a % p == 0:
        raise DomainError(f"{a} is divisible by {p}")
    if p == 2:
        return padic(2, 1 if a % 4 == 1 else -1, prec)
    mod = p**prec
    x = a % mod
    # x -> x^p converges to the root of unity congruent to a
    for _ in range(prec):
        x = pow(x, p, mod)
    return PadicNumber(p, 0, x, prec)


def teichmuller_int(a: int, p: int, prec: int) -> int:
    return teichmuller(a, p, prec).lift_int()


def principal_part(a, p: int, prec: int) -> PadicNumber:
    """<a> = a / omega(a) for a p-adic unit (int, Fraction or PadicNumber)."""
    if not isinstance(a, PadicNumber):
        a = padic(p, a, prec)
    if a.v != 0:
        raise DomainError("not a unit")
    w = teichmuller(a.unit % p if p != 2 else a.unit % 4, p, a.prec)
    return a / w


def padic_log(x) -> "PadicNumber":
    """Iwasawa-free log_p on 1 + pZ_p (1 + 4Z_2)."""
    if isinstance(x, PadicExt):
        return x.log()
    p = x.p
    y = x - 1
    need = 2 if p == 2 else 1
    if y.valuation() < need:
        raise DomainError("log_p needs |x-1| < 1 (|x-1| <= 1/4 for p=2)")
    N = x.prec
    if y.is_zero():
        return PadicNumber.zero(p, N)
    a = y.v
    # terms y^n/n have valuation >= n*a - v(n); stop when that exceeds N
    total = PadicNumber.zero(p, N)
    yn = y
    n = 1
    while True:
        if n * a - _log_floor(n, p) >= N:
            break
        term = yn / n
        total = total + (term if n % 2 else -term)
        yn = yn * y
        n += 1
    return PadicNumber(p, total.v, total.unit, min(total.prec, N)) if total.v is not None else PadicNumber.zero(p, min(total.prec, N))


def _log_floor(n: int, p: int) -> int:
    k = 0
    while p ** (k + 1) <= n:
        k += 1
    return k


def padic_exp(x: PadicNumber) -> PadicNumber:
    p = x.p
    if x.valuation() <= (1 if p == 2 else Fraction(1, p - 1)):
        raise DomainError("exp_p diverges")
    N = x.prec
    total = padic(p, 1, N)
    term = padic(p, 1, N)
    n = 1
    while True:
        term = term * x / n
        if term.valuation() >= N or term.is_zero():
            if term.is_zero() or n * x.valuation() - n / (p - 1) >= N:
                break
        total = total + term
        n += 1
        if n > 10 * N + 50:
            break
    return total


def log_u(p: int, prec: int) -> PadicNumber:
    return padic_log(padic(p, u_generator(p), prec))


def l_index(z, p: int, prec: int) -> PadicNumber:
    """l_z = log_p(z)/log_p(u); lies in Z_p and satisfies <z> = u^{l_z}."""
    pp = principal_part(z, p, prec + 2)
    return padic_log(pp) / log_u(p, prec + 2)


# ---------------------------------------------------------------------------
# cyclotomic numbers


@lru_cache(maxsize=None)
def _fmpq(x) -> flint.fmpq:
    x = Fraction(x)
    return flint.fmpq(x.numerator, x.denominator)


def cyclotomic_poly(M: int) -> tuple:
    return tuple(int(c) for c in flint.fmpz_poly.cyclotomic(M).coeffs())


@lru_cache(maxsize=None)
def euler_phi(M: int) -> int:
    return int(flint.fmpz(M).euler_phi())


@lru_cache(maxsize=None)
def _power_table(M: int) -> tuple:
    # x^i mod Phi_M for 0 <= i < M, as tuples of ints
    phi = cyclotomic_poly(M)
    d = len(phi) - 1
    rows = []
    cur = [0] * d
    if d:
        cur[0] = 1
    for _ in range(M):
        rows.append(tuple(cur))
        nxt = [0] + cur[:-1]
        top = cur[-1] if d else 0
        if top:
            for j in range(d):
                nxt[j] -= top * phi[j]
        cur = nxt
    return tuple(rows)


class CyclotomicNumber:
    """Element of Q(zeta_M) in the power basis 1, z, ..., z^(phi(M)-1)."""

    __slots__ = ("M", "coeffs")

    def __init__(self, M: int, coeffs):
        self.M = M
        d = euler_phi(M)
        cs = [Fraction(c) for c in coeffs]
        if len(cs) > d:
            cs = _reduce_poly(M, cs)
        cs = cs + [Fraction(0)] * (d - len(cs))
        self.coeffs = tuple(cs)

    @classmethod
    def rational(cls, x, M: int = 1):
        return cls(M, [Fraction(x)])

    @classmethod
    def zeta(cls, M: int, e: int = 1):
        row = _power_table(M)[e % M]
        return cls(M, row)

    @classmethod
    def from_exponent_dict(cls, M: int, d: dict):
        """sum_e c_e zeta_M^e from a dict exponent -> rational."""
        tab = _power_table(M)
        out = [Fraction(0)] * euler_phi(M)
        for e, c in d.items():
            if c:
                row = tab[e % M]
                for i, r in enumerate(row):
                    if r:
                        out[i] += c * r
        return cls(M, out)

    def lift_to(self, M2: int) -> "CyclotomicNumber":
        if M2 == self.M:
            return self
        if M2 % self.M:
            raise DomainError("conductor does not divide target")
        step = M2 // self.M
        return CyclotomicNumber.from_exponent_dict(
            M2, {i * step: c for i, c in enumerate(self.coeffs) if c}
        )

    def _common(self, other):
        if isinstance(other, (int, Fraction)):
            return self, CyclotomicNumber.rational(other, self.M)
        if self.M == other.M:
            return self, other
        from math import lcm
        M = lcm(self.M, other.M)
        return self.lift_to(M), other.lift_to(M)

    def __add__(self, other):
        a, b = self._common(other)
        return CyclotomicNumber(a.M, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicNumber(self.M, [-x for x in self.coeffs])

    def __sub__(self, other):
        return self + (-other if not isinstance(other, (int, Fraction)) else -Fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CyclotomicNumber(self.M, [x * other for x in self.coeffs])
        a, b = self._common(other)
        prod = [Fraction(0)] * (len(a.coeffs) + len(b.coeffs))
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        prod[i + j] += x * y
        return CyclotomicNumber(a.M, _reduce_poly(a.M, prod))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        return self * other.inverse()

    def inverse(self) -> "CyclotomicNumber":
        # solve the multiplication-matrix system over Q
        d = len(self.coeffs)
        cols = []
        for i in range(d):
            cols.append((self * CyclotomicNumber.zeta(self.M, i)).coeffs)
        if d == 1:
            return CyclotomicNumber(self.M, [1 / Fraction(self.coeffs[0])])
        mat = flint.fmpq_mat(d, d, [_fmpq(cols[j][i]) for i in range(d) for j in range(d)])
        rhs = flint.fmpq_mat(d, 1, [1] + [0] * (d - 1))
        sol = mat.solve(rhs)
        return CyclotomicNumber(self.M, [Fraction(int(sol[i, 0].p), int(sol[i, 0].q)) for i in range(d)])

    def conjugate(self) -> "CyclotomicNumber":
        return CyclotomicNumber.from_exponent_dict(
            self.M, {(-i) % self.M: c for i, c in enumerate(self.coeffs) if c}
        )

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def to_rational(self) -> Fraction:
        if not self.is_rational():
            raise DomainError("not rational")
        return self.coeffs[0]

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CyclotomicNumber.rational(other, self.M)
        if not isinstance(other, CyclotomicNumber):
            return NotImplemented
        a, b = self._common(other)
        return a.coeffs == b.coeffs

    __hash__ = None

    def __repr__(self):
        terms = [f"{c}*z{self.M}^{i}" for i, c in enumerate(self.coeffs) if c]
        return " + ".join(terms) if terms else "0"


def _reduce_poly(M: int, cs: list) -> list:
    phi = cyclotomic_poly(M)
    d = len(phi) - 1
    cs = list(cs)
    for i in range(len(cs) - 1, d - 1, -1):
        c = cs[i]
        if c:
            cs[i] = Fraction(0)
            for j in range(d):
                if phi[j]:
                    cs[i - d + j] -= c * phi[j]
    return cs[:d]


# ---------------------------------------------------------------------------
# p-adic extensions Q_p(zeta_M)


def hensel_factor(f: list, gbar: list, p: int, N: int) -> list:
    """Monic factor of f over Z_p (mod p^N) reducing to the monic gbar mod p."""
    fp = flint.nmod_poly([c % p for c in f], p)
    gp = flint.nmod_poly([c % p for c in gbar], p)
    hp, r = divmod(fp, gp)
    if r != 0:
        raise DomainError("gbar does not divide f mod p")
    g = [int(c) for c in gp.coeffs()]
    h = [int(c) for c in hp.coeffs()]
    # linear Hensel lifting, one digit at a time; simple and robust
    P = flint.fmpz_poly
    F, G, H = P(f), P(g), P(h)
    Gp = gp
    Hp = hp
    d, s, t = Gp.xgcd(Hp)
    inv = pow(int(d[0]), -1, p)
    s = s * inv
    t = t * inv
    mod = p
    for _ in range(1, N):
        E = F - G * H
        ec = [int(c) for c in E.coeffs()]
        if any(c % mod for c in ec):
            raise DomainError("Hensel invariant broken")
        e = flint.nmod_poly([(c // mod) % p for c in ec], p)
        # want dG*H + dH*G = e mod p with deg dG < deg G
        dG = (t * e) % Gp
        dH = (e - dG * Hp) // Gp
        G = G + P([int(c) for c in dG.coeffs()]) * mod
        H = H + P([int(c) for c in dH.coeffs()]) * mod
        mod *= p
    out = [int(c) % mod for c in G.coeffs()]
    return out


class PadicField:
    """Q_p(x)/(g) with g the minimal polynomial of a primitive M-th root of unity.

    The power basis of x is an integral basis, so an element is a coefficient
    vector together with a common absolute precision.
    """

    _cache: dict = {}

    def __init__(self, p: int, M: int, cap: int = 80):
        self.p, self.M, self.cap = p, M, cap
        self.poly = _zeta_minpoly(p, M, cap)
        self.degree = len(self.poly) - 1
        self.mod = p**cap

    @classmethod
    def get(cls, p: int, M: int, cap: int = 80) -> "PadicField":
        key = (p, M, cap)
        if key not in cls._cache:
            cls._cache[key] = cls(p, M, cap)
        return cls._cache[key]

    def __repr__(self):
        return f"Q_{self.p}(zeta_{self.M}) [degree {self.degree}]"

    def element(self, coeffs, prec: int, v: int = 0) -> "PadicExt":
        return PadicExt(self, list(coeffs), v, prec)

    def zeta(self, e: int = 1, prec=None) -> "PadicExt":
        prec = self.cap if prec is None else prec
        tab = self._xpow(e % self.M)
        return PadicExt(self, list(tab), 0, prec)

    @lru_cache(maxsize=None)
    def _xpow(self, e: int) -> tuple:
        d = self.degree
        cur = [0] * d
        cur[0] = 1
        x = [0] * d
        if d > 1:
            x[1] = 1
        else:
            x[0] = (-self.poly[0]) % self.mod
        for _ in range(e):
            cur = self._mulpoly(cur, x)
        return tuple(cur)

    def _mulpoly(self, a: list, b: list) -> list:
        d = self.degree
        prod = [0] * (2 * d - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] += x * y
        g = self.poly
        for i in range(len(prod) - 1, d - 1, -1):
            c = prod[i]
            if c:
                prod[i] = 0
                for j in range(d):
                    prod[i - d + j] -= c * g[j]
        m = self.mod
        return [c % m for c in prod[:d]]

    def coerce(self, x, prec=None) -> "PadicExt":
        if isinstance(x, PadicExt):
            if x.field is not self:
                raise DomainError("field mismatch")
            return x
        if isinstance(x, PadicNumber):
            if x.v is None:
                return PadicExt(self, [0] * self.degree, 0, x.prec)
            return PadicExt(self, [x.unit] + [0] * (self.degree - 1), x.v, x.prec)
        if isinstance(x, (int, Fraction)):
            prec = self.cap if prec is None else prec
            return self.coerce(padic(self.p, x, prec))
        if isinstance(x, CyclotomicNumber):
            return self.embed(x, prec)
        raise TypeError(type(x))

    def embed(self, z: CyclotomicNumber, prec=None) -> "PadicExt":
        """Image of a cyclotomic number under the session embedding."""
        prec = self.cap if prec is None else prec
        if self.M % z.M:
            raise DomainError(f"Q(zeta_{z.M}) does not embed in {self}")
        step = self.M // z.M
        acc = PadicExt(self, [0] * self.degree, 0, prec)
        # clear denominators first
        den = 1
        for c in z.coeffs:
            den = den * c.denominator // gcd(den, c.denominator)
        vec = [0] * self.degree
        for i, c in enumerate(z.coeffs):
            if c:
                ci = int(c * den)
                row = self._xpow((i * step) % self.M)
                for j, r in enumerate(row):
                    vec[j] += ci * r
        vd = vp(den, self.p)
        acc = PadicExt(self, vec, 0, prec + vd)
        inv = padic(self.p, Fraction(1, den), prec + vd)
        return acc * inv


@lru_cache(maxsize=None)
def _zeta_minpoly(p: int, M: int, cap: int) -> tuple:
    """Minimal polynomial over Z_p (mod p^cap) of a primitive M-th root of unity.

    For M = m p^a the unramified part comes from the Hensel lift of the factor
    of Phi_m mod p containing the residue of the chosen root; among the factors
    the one whose root x satisfies x^(m/(p-1)) = g (smallest primitive root g)
    when (p-1) | m, else the lexicographically smallest factor.
    """
    a, m = _split(M, p)
    if m == 1:
        unr = [-1, 1]  # x - 1
    else:
        phim = list(cyclotomic_poly(m))
        facs = flint.nmod_poly(phim, p).factor()[1]
        cands = sorted(tuple(int(c) for c in f.coeffs()) for f, _ in facs)
        chosen = cands[0]
        if p > 2 and m % (p - 1) == 0:
            g = _primitive_root(p)
            for cf in cands:
                fp = flint.nmod_poly(list(cf), p)
                xp = flint.nmod_poly([0, 1], p)
                r = pow(xp, m // (p - 1), fp) if fp.degree() > 0 else None
                if r is not None and r == flint.nmod_poly([g], p):
                    chosen = cf
                    break
        unr = hensel_factor(phim, list(chosen), p, cap + 5)
    if a == 0:
        return tuple(c % p**cap for c in unr)
    # compose with Phi_{p^a}: minimal poly of y*z where y root of unr, z root of Phi_{p^a}
    f = len(unr) - 1
    ram = list(cyclotomic_poly(p**a))
    e = len(ram) - 1
    d = f * e
    modc = p ** (cap + 5)
    # multiplication-by-(y z) matrix on basis y^i z^j
    def red(poly, mon):
        return poly

    def mul_y(vec):  # vec indexed [i][j]
        out = [[0] * e for _ in range(f)]
        for i in range(f):
            for j in range(e):
                c = vec[i][j]
                if not c:
                    continue
                if i + 1 < f:
                    out[i + 1][j] += c
                else:
                    for k in range(f):
                        out[k][j] -= c * unr[k]
        return out

    def mul_z(vec):
        out = [[0] * e for _ in range(f)]
        for i in range(f):
            for j in range(e):
                c = vec[i][j]
                if not c:
                    continue
                if j + 1 < e:
                    out[i][j + 1] += c
                else:
                    for k in range(e):
                        out[i][k] -= c * ram[k]
        return out

    cols = []
    for i in range(f):
        for j in range(e):
            v = [[0] * e for _ in range(f)]
            v[i][j] = 1
            w = mul_z(mul_y(v))
            cols.append([w[a1][b1] % modc for a1 in range(f) for b1 in range(e)])
    mat = flint.fmpz_mat(d, d, [cols[c][r] for r in range(d) for c in range(d)])
    cp = mat.charpoly()
    return tuple(int(c) % p**cap for c in cp.coeffs())


@lru_cache(maxsize=None)
def _primitive_root(p: int) -> int:
    if p == 2:
        return 1
    fac = [q for q in flint.fmpz(p - 1).factor()]
    qs = [int(q) for q, _ in fac]
    g = 2
    while True:
        if all(pow(g, (p - 1) // q, p) != 1 for q in qs):
            return g
        g += 1


def primitive_root(p: int) -> int:
    return _primitive_root(p)


class PadicExt:
    """Element p^v * sum c_i x^i of a PadicField, known modulo p^prec O_K."""

    __slots__ = ("field", "c", "v", "prec")

    def __init__(self, field: PadicField, coeffs: list, v: int, prec: int):
        self.field = field
        p = field.p
        r = prec - v
        if r <= 0:
            self.c, self.v, self.prec = (0,) * field.degree, 0, prec
            self.c = tuple([0] * field.degree)
            self.v = None
            return
        mod = p**r
        cs = [int(x) % mod for x in coeffs]
        if all(x == 0 for x in cs):
            self.c, self.v, self.prec = tuple([0] * field.degree), None, prec
            return
        k = min(vp(x, p) for x in cs if x)
        if k:
            cs = [x // p**k for x in cs]
            v += k
        self.c = tuple(x % p ** (prec - v) for x in cs)
        self.v = v
        self.prec = prec

    @property
    def p(self):
        return self.field.p

    def is_zero(self) -> bool:
        return self.v is None

    def valuation(self):
        """Coefficient valuation (the true valuation lies in [v, v+1))."""
        return INF if self.v is None else self.v

    def true_valuation(self):
        """Exact valuation v_p(x) in Q, from the norm."""
        if self.v is None:
            return INF
        d = self.field.degree
        mat = self._mulmat()
        det = int(flint.fmpz_mat(d, d, [x for row in mat for x in row]).det())
        if det % self.p ** max(1, self.prec - self.v) == 0:
            raise PrecisionError("norm not determined at this precision")
        return self.v + Fraction(vp(det, self.p), d)

    def _mulmat(self):
        d = self.field.degree
        rows = [[0] * d for _ in range(d)]
        for j in range(d):
            col = self.field._mulpoly(list(self.c), list(self.field._xpow(j)))
            for i in range(d):
                rows[i][j] = col[i]
        return rows

    def _co(self, other):
        if isinstance(other, PadicExt):
            if other.field is not self.field:
                raise DomainError("field mismatch")
            return other
        prec = self.prec + 10 + (0 if self.v is None else max(0, -self.v))
        if isinstance(other, PadicNumber):
            return self.field.coerce(other)
        if isinstance(other, (int, Fraction, CyclotomicNumber)):
            return self.field.coerce(other, max(prec, self.prec + 5))
        return NotImplemented

    def __add__(self, other):
        other = self._co(other)
        if other is NotImplemented:
            return other
        prec = min(self.prec, other.prec)
        if self.v is None:
            return PadicExt(self.field, list(other.c), other.v or 0, prec) if other.v is not None else PadicExt(self.field, [0], 0, prec)
        if other.v is None:
            return PadicExt(self.field, list(self.c), self.v, prec)
        v = min(self.v, other.v)
        p = self.p
        a, b = p ** (self.v - v), p ** (other.v - v)
        return PadicExt(self.field, [x * a + y * b for x, y in zip(self.c, other.c)], v, prec)

    __radd__ = __add__

    def __neg__(self):
        if self.v is None:
            return self
        return PadicExt(self.field, [-x for x in self.c], self.v, self.prec)

    def __sub__(self, other):
        other = self._co(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._co(other)
        if other is NotImplemented:
            return other
        if self.v is None or other.v is None:
            va = 0 if self.v is None else self.v
            vb = 0 if other.v is None else other.v
            if self.v is None and other.v is None:
                prec = self.prec + other.prec
            elif self.v is None:
                prec = self.prec + vb
            else:
                prec = other.prec + va
            return PadicExt(self.field, [0], 0, prec)
        r = min(self.prec - self.v, other.prec - other.v)
        prod = self.field._mulpoly(list(self.c), list(other.c))
        v = self.v + other.v
        return PadicExt(self.field, prod, v, v + r)

    __rmul__ = __mul__

    def inverse(self) -> "PadicExt":
        if self.v is None:
            raise ZeroDivisionError("zero to working precision")
        d = self.field.degree
        mat = self._mulmat()
        M = flint.fmpq_mat(d, d, [x for row in mat for x in row])
        det = int(flint.fmpz_mat(d, d, [x for row in mat for x in row]).det())
        dv = vp(det, self.p)
        r = self.prec - self.v
        if dv == INF or dv >= r:
            raise PrecisionError("element not invertible at its precision")
        sol = M.solve(flint.fmpq_mat(d, 1, [1] + [0] * (d - 1)))
        vals = [Fraction(int(sol[i, 0].p), int(sol[i, 0].q)) for i in range(d)]
        den = 1
        for x in vals:
            den = den * x.denominator // gcd(den, x.denominator)
        k = vp(den, self.p)
        unit_den = den // self.p**k
        mod = self.p ** (r + 2 * dv + 2)
        inv_ud = pow(unit_den, -1, mod)
        ints = [int(x * den) * inv_ud % mod for x in vals]
        # value = p^{-v} * p^{-k} * ints ; precision r - 2 dv relative
        newv = -self.v - k
        return PadicExt(self.field, ints, newv, -self.v + r - 2 * dv)

    def __truediv__(self, other):
        other = self._co(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._co(other)
        return other * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.coerce(1, self.prec if self.v is None else self.prec - self.v + 1)
        base = self
        first = True
        while n:
            if n & 1:
                result = base if first else result * base
                first = False
            n >>= 1
            if n:
                base = base * base
        if first:
            r = self.prec - (self.v or 0)
            return self.field.coerce(1, max(r, 1))
        return result

    def __eq__(self, other):
        d = self - other
        return d.is_zero()

    __hash__ = None

    def is_rational(self) -> bool:
        return self.v is None or all(x == 0 for x in self.c[1:])

    def to_padic(self) -> PadicNumber:
        """The Q_p-coordinate (requires the other coordinates to vanish)."""
        if self.v is None:
            return PadicNumber.zero(self.p, self.prec)
        if not self.is_rational():
            raise DomainError("element is not in Q_p at this precision")
        return PadicNumber(self.p, self.v, self.c[0], self.prec)

    def log(self) -> "PadicExt":
        """log_p via x -> x^(p^m) until the series converges."""
        p = self.p
        y = self - 1
        m = 0
        x = self
        need = 2 if p == 2 else 1
        # residue must be 1: check coefficientwise congruence
        if y.valuation() < 1 and not _residually_one(self):
            raise DomainError("log_p of a non-principal unit")
        while (x - 1).valuation() < need:
            x = x ** p
            m += 1
            if m > 12:
                raise PrecisionError("log_p: could not reach the convergence disc")
        y = x - 1
        N = x.prec
        if y.is_zero():
            return PadicExt(self.field, [0], 0, N - m)
        a = y.v
        total = PadicExt(self.field, [0], 0, N)
        yn = y
        n = 1
        while n * a - _log_floor(n, p) < N:
            term = yn / n
            total = total + (term if n % 2 else -term)
            yn = yn * y
            n += 1
        return total / p**m

    def __repr__(self):
        if self.v is None:
            return f"O({self.p}^{self.prec})"
        return f"{self.p}^{self.v}*{list(self.c)} + O({self.p}^{self.prec})"


def _residually_one(x: PadicExt) -> bool:
    if x.v is None or x.v != 0:
        return False
    # x is 1 mod the maximal ideal iff x^(p^f - 1) ... test via (x-1)^d in pO
    y = x - 1
    z = y
    for _ in range(x.field.degree - 1):
        z = z * y
    return z.valuation() >= 1


# ---------------------------------------------------------------------------
# embeddings


class PadicEmbedding:
    """Fixed embedding Q(zeta_M) -> Q_p(zeta_M) used for a whole session."""

    def __init__(self, p: int, M: int, cap: int = 80):
        self.p, self.M, self.cap = p, M, cap
        self.field = PadicField.get(p, M, cap)

    def __call__(self, z, prec=None):
        if isinstance(z, (int, Fraction)):
            return self.field.coerce(z, prec)
        return self.field.embed(z, prec)

    def zeta_image(self) -> PadicExt:
        return self.field.zeta(1)

    def order_check(self) -> bool:
        z = self.zeta_image()
        one = self.field.coerce(1)
        if not (z ** self.M - one).is_zero():
            return False
        for q, _ in flint.fmpz(self.M).factor() if self.M > 1 else []:
            if (z ** (self.M // int(q)) - one).is_zero():
                return False
        return True

    def table(self) -> dict:
        return {"p": self.p, "M": self.M, "minpoly_mod_p": [c % self.p for c in self.field.poly]}


# ---------------------------------------------------------------------------
# weight space


class WeightPoint:
    """Continuous character kappa of Z_p^*.

    kappa(z) = omega(z)^j * kappa(<z>), with kappa(<z>) = w^{l_z} and w =
    kappa(u).  Classical points eps[k] carry the tag (k, eps_order, eps_exp)
    meaning eps(u) = zeta_{eps_order}^{eps_exp}; evaluation at such points is
    done exactly on the tag.
    """

    def __init__(self, p: int, j: int, w, k=None, eps=(1, 0)):
        self.p = p
        self.j = j % tame_order(p)
        self.w = w
        self.k = k
        self.eps = eps

    @classmethod
    def classical(cls, p: int, k: int, eps=(1, 0), prec: int = 40, field=None):
        order, e = eps
        u = u_generator(p)
        if order == 1 or e % order == 0:
            w = padic(p, u, prec) ** k
            eps = (1, 0)
        else:
            K = field or PadicField.get(p, order, prec + 10)
            w = K.zeta(e * (K.M // order), prec) * padic(p, u, prec) ** k
        return cls(p, k, w, k=k, eps=eps)

    @property
    def is_classical(self) -> bool:
        return self.k is not None

    def __mul__(self, other: "WeightPoint") -> "WeightPoint":
        if self.is_classical and other.is_classical:
            o1, e1 = self.eps
            o2, e2 = other.eps
            from math import lcm
            o = lcm(o1, o2)
            return WeightPoint.classical_from(self.p, self.k + other.k, (o, e1 * (o // o1) + e2 * (o // o2)), self, other)
        return WeightPoint(self.p, self.j + other.j, self.w * other.w)

    @staticmethod
    def classical_from(p, k, eps, a, b):
        w = a.w * b.w
        o, e = eps
        if e % o == 0:
            eps = (1, 0)
        return WeightPoint(p, k, w, k=k, eps=eps)

    def inverse(self) -> "WeightPoint":
        if self.is_classical:
            o, e = self.eps
            return WeightPoint(self.p, -self.k, 1 / self.w, k=-self.k, eps=(o, (-e) % o if o > 1 else 0))
        return WeightPoint(self.p, -self.j, 1 / self.w)

    def shift(self, n: int) -> "WeightPoint":
        """kappa[n]."""
        return self * WeightPoint.classical(self.p, n, prec=_prec_of(self.w))

    def principal(self, z, prec: int):
        """kappa(<z>) for a p-adic unit z (integer or Fraction)."""
        p = self.p
        if self.is_classical:
            pz = principal_part(z, p, prec + 4)
            val = pz ** self.k
            o, e = self.eps
            if o > 1:
                l = l_index(z, p, prec + 4)
                li = l.lift_int() if l.v is None or l.v >= 0 else None
                if li is None:
                    raise PrecisionError("l_z not integral")
                K = self.w.field
                val = K.zeta((e * li % o) * (K.M // o), prec) * val
            return val
        l = l_index(z, p, prec + 4)
        return _power_series_pow(self.w, l)

    def __call__(self, z, prec: int):
        p = self.p
        if p == 2:
            tame = 1 if (self.j % 2 == 0 or z % 4 == 1) else -1
            tame = padic(2, tame, prec)
        else:
            tame = teichmuller(z % p, p, prec) ** self.j
        return self.principal(z, prec) * tame

    def tag(self) -> str:
        if not self.is_classical:
            return f"kappa(j={self.j})"
        o, e = self.eps
        return f"[{self.k}]" if o == 1 else f"eps({o},{e})[{self.k}]"

    def __repr__(self):
        return f"WeightPoint(p={self.p}, {self.tag()})"


def _prec_of(x) -> int:
    return x.prec


def _power_series_pow(w, l: PadicNumber):
    """w^l for w = 1 mod p (p-adic exponent) via exp(l log w)."""
    lg = w.log() if isinstance(w, PadicExt) else padic_log(w)
    prod = lg * l
    if isinstance(prod, PadicExt):
        return _ext_exp(prod)
    return padic_exp(prod)


def _ext_exp(x: PadicExt) -> PadicExt:
    p = x.p
    N = x.prec
    total = x.field.coerce(1, N)
    term = x.field.coerce(1, N)
    n = 1
    while n < 20 * N + 50:
        term = term * x / n
        if term.valuation() >= N and n * x.valuation() - n / (p - 1) >= N:
            break
        total = total + term
        n += 1
    return total


def log_weight(kappa: WeightPoint, prec: int = 30):
    """Log_p(kappa) = log_p(kappa(u^r)) / log_p(u^r)."""
    p = kappa.p
    if kappa.is_classical and kappa.eps[0] == 1:
        return padic(p, kappa.k, prec)
    w = kappa.w
    r = 1
    while True:
        x = w ** (p**r) if r else w
        try:
            lg = x.log() if isinstance(x, PadicExt) else padic_log(x)
            break
        except (DomainError, PrecisionError):
            r += 1
            if r > 8:
                raise PrecisionError("no convergent power of kappa(u)")
    val = lg / (log_u(p, prec + 4) * p**r)
    if isinstance(val, PadicExt) and val.is_rational():
        return val.to_padic()
    return val


def mellin_eval(coeffs: list, kappa: WeightPoint, trunc_prec: int = None):
    """Evaluate sum a_n T^n at T = kappa(u) - 1.

    The series is known modulo (p^M, T^D); the unknown tail sum_{n>=D} a_n T^n
    with integral a_n contributes at valuation >= D * v(T), which caps the
    returned precision.
    """
    T = kappa.w - 1
    if T.valuation() <= 0:
        raise PrecisionError("kappa(u) - 1 is not in the open unit disc")
    D = len(coeffs)
    tv = T.true_valuation() if isinstance(T, PadicExt) else T.valuation()
    tail = D * tv if tv != INF else INF
    acc = None
    for a in reversed(coeffs):
        acc = a if acc is None else acc * T + a
    if acc is None:
        acc = T * 0
    cap = tail
    if trunc_prec is not None:
        cap = min(cap, trunc_prec)
    if cap != INF:
        cap = int(cap)
        if isinstance(acc, PadicExt):
            acc = PadicExt(acc.field, list(acc.c), acc.v if acc.v is not None else 0, min(acc.prec, cap)) if acc.v is not None else PadicExt(acc.field, [0], 0, min(acc.prec, cap))
        else:
            acc = PadicNumber(acc.p, acc.v, acc.unit, min(acc.prec, cap))
    return acc
