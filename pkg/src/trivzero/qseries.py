"""Truncated q-expansions, Hecke-type operators, small-level form spaces and slope projectors."""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt
from typing import Iterable, Sequence

import flint

from .characters import DirichletCharacter, dirichlet_L_neg, factor, kronecker_symbol
from .padic import CyclotomicNumber, DomainError, PrecisionError, hensel_factor, vp


class TruncationError(IndexError):
    """Raised when a coefficient beyond the truncation bound is requested."""


class BasisDeficit(ArithmeticError):
    pass


def _is_rational(x) -> bool:
    return isinstance(x, (int, Fraction))


# ---------------------------------------------------------------------------
# one-variable series
# ---------------------------------------------------------------------------
class QExp1:
    """sum_{n <= Q} a(n) q^n with optional (weight, level, character) metadata."""

    __slots__ = ("coeffs", "weight", "level", "character")

    def __init__(self, coeffs: Sequence, weight=None, level=None, character=None):
        self.coeffs = tuple(coeffs)
        self.weight = weight
        self.level = level
        self.character = character

    @property
    def Q(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, n: int):
        if n < 0:
            return 0
        if n > self.Q:
            raise TruncationError(f"coefficient {n} requested, series known to q^{self.Q}")
        return self.coeffs[n]

    def _meta(self, other, mul=False):
        if isinstance(other, QExp1):
            w = None
            if mul and self.weight is not None and other.weight is not None:
                w = self.weight + other.weight
            elif not mul:
                if self.weight is not None and other.weight is not None and self.weight != other.weight:
                    raise DomainError("adding series of different weights")
                w = self.weight if self.weight is not None else other.weight
            lv = None
            if self.level and other.level:
                lv = self.level * other.level // gcd(self.level, other.level)
            return dict(weight=w, level=lv)
        return dict(weight=self.weight, level=self.level, character=self.character)

    def truncate(self, Q: int) -> "QExp1":
        if Q > self.Q:
            raise TruncationError(f"cannot extend a series known to q^{self.Q} to q^{Q}")
        return QExp1(self.coeffs[: Q + 1], self.weight, self.level, self.character)

    def __add__(self, other):
        if not isinstance(other, QExp1):
            return QExp1((self.coeffs[0] + other,) + self.coeffs[1:], self.weight, self.level, self.character)
        Q = min(self.Q, other.Q)
        return QExp1([self.coeffs[i] + other.coeffs[i] for i in range(Q + 1)], **self._meta(other))

    __radd__ = __add__

    def __neg__(self):
        return QExp1([-c for c in self.coeffs], self.weight, self.level, self.character)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, QExp1):
            return QExp1([c * other for c in self.coeffs], self.weight, self.level, self.character)
        Q = min(self.Q, other.Q)
        a, b = self.coeffs[: Q + 1], other.coeffs[: Q + 1]
        if all(_is_rational(x) for x in a) and all(_is_rational(x) for x in b):
            prod = flint.fmpq_poly([_fq(x) for x in a]) * flint.fmpq_poly([_fq(x) for x in b])
            cs = [_unfq(c) for c in prod.coeffs()[: Q + 1]]
            cs += [0] * (Q + 1 - len(cs))
        else:
            cs = []
            for n in range(Q + 1):
                acc = 0
                for i in range(n + 1):
                    acc = acc + a[i] * b[n - i]
                cs.append(acc)
        return QExp1(cs, **self._meta(other, mul=True))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise DomainError("negative powers of q-series are not supported")
        out = QExp1([1] + [0] * self.Q, 0, 1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, QExp1):
            return NotImplemented
        Q = min(self.Q, other.Q)
        return all(self.coeffs[i] == other.coeffs[i] for i in range(Q + 1))

    def __repr__(self):
        head = " + ".join(f"{c}q^{i}" for i, c in enumerate(self.coeffs[:6]) if c != 0)
        return f"QExp1({head} + O(q^{self.Q + 1}))"

    def to_json(self) -> dict:
        return {"Q": self.Q, "weight": self.weight, "level": self.level,
                "coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, d: dict) -> "QExp1":
        return cls([Fraction(c) for c in d["coeffs"]], d.get("weight"), d.get("level"))


def _fq(x):
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    return flint.fmpq(x)


def _unfq(c):
    n, d = int(c.p), int(c.q)
    return n if d == 1 else Fraction(n, d)


# ---------------------------------------------------------------------------
# two-variable series
# ---------------------------------------------------------------------------
class QExp2:
    """sum a(n1, n2) q1^n1 q2^n2 for n1 <= Q1, n2 <= Q2."""

    __slots__ = ("rows", "weight", "level")

    def __init__(self, rows, weight=None, level=None):
        self.rows = tuple(tuple(r) for r in rows)
        if len({len(r) for r in self.rows}) > 1:
            raise DomainError("ragged coefficient table")
        self.weight = weight
        self.level = level

    @classmethod
    def from_function(cls, fn, Q1: int, Q2: int, **meta) -> "QExp2":
        return cls([[fn(i, j) for j in range(Q2 + 1)] for i in range(Q1 + 1)], **meta)

    @property
    def Q1(self) -> int:
        return len(self.rows) - 1

    @property
    def Q2(self) -> int:
        return len(self.rows[0]) - 1

    def __getitem__(self, idx):
        n1, n2 = idx
        if n1 > self.Q1 or n2 > self.Q2:
            raise TruncationError(f"coefficient {idx} outside truncation ({self.Q1}, {self.Q2})")
        if n1 < 0 or n2 < 0:
            return 0
        return self.rows[n1][n2]

    def map(self, fn) -> "QExp2":
        return QExp2([[fn(c) for c in r] for r in self.rows], self.weight, self.level)

    def __add__(self, other: "QExp2") -> "QExp2":
        Q1, Q2 = min(self.Q1, other.Q1), min(self.Q2, other.Q2)
        return QExp2([[self.rows[i][j] + other.rows[i][j] for j in range(Q2 + 1)] for i in range(Q1 + 1)],
                     self.weight, self.level)

    def __sub__(self, other: "QExp2") -> "QExp2":
        Q1, Q2 = min(self.Q1, other.Q1), min(self.Q2, other.Q2)
        return QExp2([[self.rows[i][j] - other.rows[i][j] for j in range(Q2 + 1)] for i in range(Q1 + 1)],
                     self.weight, self.level)

    def __mul__(self, c) -> "QExp2":
        return self.map(lambda x: x * c)

    __rmul__ = __mul__

    def U(self, m1: int, m2: int) -> "QExp2":
        """U_{m1} in the first variable tensor U_{m2} in the second."""
        Q1, Q2 = self.Q1 // m1, self.Q2 // m2
        return QExp2([[self.rows[m1 * i][m2 * j] for j in range(Q2 + 1)] for i in range(Q1 + 1)],
                     self.weight, self.level)

    def V(self, m1: int, m2: int) -> "QExp2":
        Q1, Q2 = self.Q1 * m1, self.Q2 * m2
        return QExp2([[self.rows[i // m1][j // m2] if i % m1 == 0 and j % m2 == 0 else 0
                       for j in range(Q2 + 1)] for i in range(Q1 + 1)], self.weight, self.level)

    def truncate(self, Q1: int, Q2: int) -> "QExp2":
        if Q1 > self.Q1 or Q2 > self.Q2:
            raise TruncationError("cannot extend a truncated table")
        return QExp2([r[: Q2 + 1] for r in self.rows[: Q1 + 1]], self.weight, self.level)

    def __eq__(self, other):
        if not isinstance(other, QExp2):
            return NotImplemented
        return self.rows == other.rows

    def to_json(self) -> dict:
        return {"Q1": self.Q1, "Q2": self.Q2, "weight": self.weight, "level": self.level,
                "rows": [[_ser(c) for c in r] for r in self.rows]}

    @classmethod
    def from_json(cls, d: dict) -> "QExp2":
        return cls([[_deser(c) for c in r] for r in d["rows"]], d.get("weight"), d.get("level"))


def _ser(c):
    if hasattr(c, "to_json"):
        return c.to_json()
    return str(c)


def _deser(c):
    if isinstance(c, dict):
        from .padic import PadicNumber
        return PadicNumber.from_json(c)
    return Fraction(c)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------
def hecke_U(m: int, f: QExp1, need: int | None = None) -> QExp1:
    Q = f.Q // m
    if need is not None and Q < need:
        raise PrecisionError(f"U_{m} leaves q^{Q}, need q^{need}")
    return QExp1([f.coeffs[m * n] for n in range(Q + 1)], f.weight, f.level, f.character)


def hecke_V(m: int, f: QExp1) -> QExp1:
    cs = [0] * (m * f.Q + 1)
    for n, c in enumerate(f.coeffs):
        cs[m * n] = c
    lv = None if f.level is None else f.level * m
    return QExp1(cs, f.weight, lv, f.character)


def hecke_T(q: int, f: QExp1, k: int | None = None, level: int | None = None,
            character: DirichletCharacter | None = None) -> QExp1:
    """T_q for q prime to the level; U_q otherwise."""
    k = f.weight if k is None else k
    level = f.level if level is None else level
    if level is not None and level % q == 0:
        return hecke_U(q, f)
    if k is None:
        raise DomainError("weight needed for T_q")
    chi_q = 1 if character is None else _char_value(character, q)
    Q = f.Q // q
    cs = []
    for n in range(Q + 1):
        c = f.coeffs[q * n]
        if n % q == 0:
            c = c + chi_q * q ** (k - 1) * f.coeffs[n // q]
        cs.append(c)
    return QExp1(cs, f.weight, f.level, f.character)


def _char_value(chi: DirichletCharacter, n: int):
    if chi.order <= 2:
        return chi.real_value(n)
    return chi(n)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------
@lru_cache(maxsize=None)
def _euler_product(Q: int) -> tuple:
    """prod (1 - q^n) to q^Q via the pentagonal number theorem."""
    cs = [0] * (Q + 1)
    k = 0
    while True:
        done = True
        for m in ((k * (3 * k - 1)) // 2, (k * (3 * k + 1)) // 2) if k else (0,):
            if m <= Q:
                cs[m] = -1 if k % 2 else 1
                done = False
        if done and k:
            break
        k += 1
    return tuple(cs)


@lru_cache(maxsize=None)
def _partitions(Q: int) -> tuple:
    """prod (1 - q^n)^(-1) to q^Q."""
    p = [1] + [0] * Q
    for n in range(1, Q + 1):
        s, k = 0, 1
        while True:
            g1 = k * (3 * k - 1) // 2
            if g1 > n:
                break
            sign = 1 if k % 2 else -1
            s += sign * p[n - g1]
            g2 = k * (3 * k + 1) // 2
            if g2 <= n:
                s += sign * p[n - g2]
            k += 1
        p[n] = s
    return tuple(p)


def _ipow(cs: Sequence[int], e: int, Q: int) -> list:
    poly = flint.fmpz_poly(list(cs[: Q + 1])) ** e
    out = [int(c) for c in poly.coeffs()[: Q + 1]]
    return out + [0] * (Q + 1 - len(out))


def eta_order_at_cusps(spec: Sequence, level: int) -> dict:
    """Order of vanishing of prod eta(dz)^r_d at the cusps 1/c, c | level (Ligozat)."""
    out = {}
    for c in _divisors(level):
        s = Fraction(0)
        for d, r in spec:
            s += Fraction(gcd(c, d) ** 2 * r, d)
        out[c] = s * Fraction(level, 24 * gcd(c, level // c) * c)
    return out


def eta_quotient(spec: Sequence, level: int | None = None, weight=None, Q: int = 20) -> QExp1:
    spec = [(int(d), int(r)) for d, r in spec if r]
    if not spec:
        return QExp1([1] + [0] * Q, 0, 1)
    shift24 = sum(d * r for d, r in spec)
    if shift24 % 24:
        raise DomainError("eta quotient has a fractional q-power")
    level = level or _lcm_all(d for d, _ in spec)
    orders = eta_order_at_cusps(spec, level)
    bad = {c: o for c, o in orders.items() if o < 0}
    if bad:
        raise DomainError(f"eta quotient has a pole at cusps {sorted(bad)}")
    shift = shift24 // 24
    if shift > Q:
        return QExp1([0] * (Q + 1), Fraction(sum(r for _, r in spec), 2), level)
    R = Q - shift
    acc = [1] + [0] * R
    for d, r in spec:
        base = _partitions(R // d) if r < 0 else _euler_product(R // d)
        sub = [0] * (R + 1)
        for i, c in enumerate(base):
            if d * i <= R:
                sub[d * i] = c
        acc = _imul(acc, _ipow(sub, abs(r), R), R)
    cs = [0] * shift + acc
    w = Fraction(sum(r for _, r in spec), 2)
    return QExp1(cs, int(w) if w.denominator == 1 else w, level)


def _imul(a, b, Q):
    prod = flint.fmpz_poly(a) * flint.fmpz_poly(b)
    out = [int(c) for c in prod.coeffs()[: Q + 1]]
    return out + [0] * (Q + 1 - len(out))


def _lcm_all(xs: Iterable[int]) -> int:
    out = 1
    for x in xs:
        out = out * x // gcd(out, x)
    return out


def _divisors(n: int) -> list:
    ds = [1]
    for q, e in factor(n):
        ds = [d * q**i for d in ds for i in range(e + 1)]
    return sorted(ds)


def eisenstein_gl2(k: int, chi: DirichletCharacter, psi: DirichletCharacter, Q: int,
                   quasi: bool = False) -> QExp1:
    """delta(chi) L(1-k, psi)/2 + sum_n sum_{d|n} psi(d) chi(n/d) d^(k-1) q^n.

    For k = 2 with both characters trivial the series is only quasi-modular;
    pass ``quasi=True`` to obtain it anyway (used for E_2(z) - d E_2(dz)).
    """
    if k < 1:
        raise DomainError("weight must be positive")
    if chi.parity * psi.parity != (-1) ** k:
        raise DomainError("parity of chi*psi does not match the weight")
    if k == 2 and chi.is_trivial and psi.is_trivial and not quasi:
        raise DomainError("E_2 is not modular; use quasi=True and combine")
    if k == 1 and chi.is_trivial and psi.is_trivial:
        raise DomainError("no weight-1 Eisenstein series with trivial characters")
    real = chi.order <= 2 and psi.order <= 2
    val = (lambda c, n: c.real_value(n)) if real else (lambda c, n: c(n))
    cs = []
    if chi.primitive().is_trivial:
        c0 = dirichlet_L_neg(k, psi.primitive())
        c0 = c0.to_rational() if real else c0
        if k == 1 and psi.primitive().is_trivial:
            c0 = 0
        cs.append(c0 / 2)
    else:
        cs.append(0)
    for n in range(1, Q + 1):
        s = 0
        for d in _divisors(n):
            s = s + val(psi, d) * val(chi, n // d) * d ** (k - 1)
        cs.append(s)
    if real:
        cs = [Fraction(c) if isinstance(c, Fraction) else c for c in cs]
    lvl = chi.modulus * psi.modulus
    return QExp1(cs, k, lvl)


def sturm_bound(k: int, M: int) -> int:
    return (k * index_gamma0(M)) // 12


def index_gamma0(M: int) -> int:
    out = M
    for q, _ in factor(M):
        out = out * (q + 1) // q
    return out


def gamma0_invariants(M: int) -> dict:
    mu = index_gamma0(M)
    fs = factor(M)
    nu2 = 0 if M % 4 == 0 else _prod(1 + kronecker_symbol(-4, q) for q, _ in fs)
    nu3 = 0 if M % 9 == 0 else _prod(1 + kronecker_symbol(-3, q) for q, _ in fs)
    cusps = sum(_euler_phi(gcd(d, M // d)) for d in _divisors(M))
    g = 1 + Fraction(mu, 12) - Fraction(nu2, 4) - Fraction(nu3, 3) - Fraction(cusps, 2)
    return {"index": mu, "nu2": nu2, "nu3": nu3, "cusps": cusps, "genus": int(g)}


def _prod(xs):
    out = 1
    for x in xs:
        out *= x
    return out


def _euler_phi(n: int) -> int:
    out = n
    for q, _ in factor(n):
        out = out // q * (q - 1)
    return out


def dim_modular_forms(k: int, M: int, cusp: bool = False) -> int:
    """Dimension of M_k(Gamma0(M)) (or S_k) for even k >= 0."""
    if k % 2:
        return 0
    inv = gamma0_invariants(M)
    g, c = inv["genus"], inv["cusps"]
    if k == 0:
        return 0 if cusp else 1
    if k == 2:
        return g if cusp else g + c - 1
    d = (k - 1) * (g - 1) + (k // 4) * inv["nu2"] + (k // 3) * inv["nu3"] + (k // 2) * c
    return d - c if cusp else d


# ---------------------------------------------------------------------------
# form spaces
# ---------------------------------------------------------------------------
class ModFormSpace:
    """Basis of M_k(Gamma0(M)) as q-expansions, certified to the Sturm bound."""

    def __init__(self, k: int, M: int, basis: list, Q: int, character=None, cusp=False):
        self.k, self.M, self.Q = k, M, Q
        self.character = character
        self.cusp = cusp
        self.basis = [b.truncate(Q) for b in basis]
        self.dim = len(basis)
        self._pivots = None
        self._solver = None

    def matrix(self, Q: int | None = None) -> flint.fmpq_mat:
        Q = self.Q if Q is None else Q
        rows = [[_fq(b.coeffs[n]) for n in range(Q + 1)] for b in self.basis]
        return flint.fmpq_mat(rows) if rows else flint.fmpq_mat(0, Q + 1)

    def pivots(self) -> list:
        """Coefficient indices (within the Sturm range) on which the basis is invertible."""
        if self._pivots is None:
            B = self.matrix(min(self.Q, sturm_bound(self.k, self.M) + 1))
            R, rank = B.rref()
            piv = []
            r = 0
            for j in range(B.ncols()):
                if r < rank and R[r, j] != 0:
                    piv.append(j)
                    r += 1
            if rank != self.dim:
                raise BasisDeficit(f"basis has rank {rank} < {self.dim} on the Sturm range")
            self._pivots = piv
        return self._pivots

    def _inverse(self):
        if self._solver is None:
            piv = self.pivots()
            sub = flint.fmpq_mat([[_fq(b.coeffs[j]) for j in piv] for b in self.basis])
            self._solver = sub.inv()
        return self._solver

    def coordinates(self, f: QExp1, check: bool = True) -> list:
        """Coordinates of f in the basis; verified against every available coefficient."""
        piv = self.pivots()
        v = flint.fmpq_mat(1, len(piv), [_fq(f[j]) for j in piv])
        x = v * self._inverse()
        coords = [_unfq(x[0, i]) for i in range(self.dim)]
        if check:
            Qc = min(f.Q, self.Q)
            for n in range(Qc + 1):
                s = sum((c * b.coeffs[n] for c, b in zip(coords, self.basis)), Fraction(0))
                if s != f.coeffs[n]:
                    raise BasisDeficit(f"series is not in the span (mismatch at q^{n})")
        return coords

    def combine(self, coords: Sequence) -> QExp1:
        cs = [sum((c * b.coeffs[n] for c, b in zip(coords, self.basis)), Fraction(0)) for n in range(self.Q + 1)]
        return QExp1([_norm(c) for c in cs], self.k, self.M)

    def operator_matrix(self, op) -> list:
        """Matrix (rows = images of basis vectors in coordinates) of a linear operator."""
        rows = []
        need = max(self.pivots())
        for b in self.basis:
            img = op(b)
            if img.Q < need:
                raise PrecisionError(f"operator image known to q^{img.Q}, need q^{need}")
            rows.append(self.coordinates(img))
        # column convention: M[i][j] = coordinate i of op(b_j)
        return [[rows[j][i] for j in range(self.dim)] for i in range(self.dim)]

    def hecke_matrix(self, q: int) -> list:
        if self.M % q == 0:
            return self.operator_matrix(lambda f: hecke_U(q, f))
        return self.operator_matrix(lambda f: hecke_T(q, f, self.k, self.M, self.character))

    def saturate(self, p: int) -> "ModFormSpace":
        """Change basis so the q-expansion lattice is p-saturated in the span."""
        basis = p_saturate(self.basis, p, min(self.Q, self.Q))
        sp = ModFormSpace(self.k, self.M, basis, self.Q, self.character, self.cusp)
        sp.pivots()
        return sp

    def __repr__(self):
        return f"ModFormSpace(k={self.k}, M={self.M}, dim={self.dim}, Q={self.Q})"


def _norm(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    return c


def p_saturate(basis: Sequence[QExp1], p: int, Q: int) -> list:
    """p-saturate the span of integral-izable rational q-expansions.

    After the call every row is p-integral and the rows stay independent mod p
    on coefficients 0..Q.
    """
    rows = []
    for b in basis:
        den = 1
        for c in b.coeffs[: Q + 1]:
            if isinstance(c, Fraction):
                den = den * c.denominator // gcd(den, c.denominator)
        r = [int(c * den) for c in b.coeffs[: Q + 1]]
        g = 0
        for c in r:
            g = gcd(g, c)
        rows.append([c // g for c in r] if g else r)
    n = len(rows)
    for _ in range(100000):
        A = flint.nmod_mat([[c % p for c in r] for r in rows], p)
        N, nul = A.transpose().nullspace()
        if nul == 0:
            break
        vec = [int(N[i, 0]) for i in range(n)]
        i0 = next(i for i in range(n) if vec[i])
        new = [sum(vec[i] * rows[i][j] for i in range(n)) for j in range(Q + 1)]
        if any(c % p for c in new):
            raise ArithmeticError("saturation step produced a non-divisible vector")
        rows[i0] = [c // p for c in new]
    else:
        raise ArithmeticError("p-saturation did not terminate")
    out = []
    for r, b in zip(rows, basis):
        out.append(QExp1(r, b.weight, b.level, b.character))
    return out


def _eisenstein_generators(k: int, M: int, Q: int) -> list:
    gens = []
    if k == 2:
        e2 = eisenstein_gl2(2, DirichletCharacter.trivial(), DirichletCharacter.trivial(), Q, quasi=True)
        for d in _divisors(M):
            if d > 1:
                f = e2 - hecke_V(d, e2).truncate(Q) * d
                gens.append(QExp1(f.coeffs, 2, M))
        return gens
    # pairs of primitive quadratic or trivial characters with chi*psi trivial
    for c in _divisors(M):
        if c * c > M or (M % (c * c)):
            continue
        for chi in _real_primitive_characters(c):
            if chi.parity != (-1) ** k:
                continue
            e = eisenstein_gl2(k, chi, chi, Q * 1)
            for d in _divisors(M // (c * c)):
                gens.append(QExp1(hecke_V(d, e).truncate(Q).coeffs, k, M))
    return gens


def _real_primitive_characters(c: int) -> list:
    from .characters import kronecker_sigma
    if c == 1:
        return [DirichletCharacter.trivial()]
    out = []
    for D in (c, -c):
        if D % 4 in (0, 1):
            chi = kronecker_sigma(D)
            if chi.conductor == c:
                out.append(chi)
    return out


def _eta_generators(k: int, M: int, Q: int, limit: int = 400) -> list:
    """Holomorphic eta quotients of level M, weight k, trivial character."""
    ds = _divisors(M)
    out = []
    bound = 2 * k + 4
    # enumerate exponent vectors with sum 2k, bounded entries
    def rec(i, remaining, acc):
        if len(out) >= limit:
            return
        if i == len(ds) - 1:
            vec = acc + [remaining]
            if abs(remaining) <= bound:
                _try(vec)
            return
        for r in range(-bound, bound + 1):
            rec(i + 1, remaining - r, acc + [r])

    def _try(vec):
        spec = list(zip(ds, vec))
        if sum(d * r for d, r in spec) % 24 or sum((M // d) * r for d, r in spec) % 24:
            return
        prod = 1
        for d, r in spec:
            prod *= d ** (abs(r) % 2)
        if isqrt(prod) ** 2 != prod:
            return
        orders = eta_order_at_cusps(spec, M)
        if any(o < 0 for o in orders.values()):
            return
        out.append(eta_quotient(spec, M, k, Q))

    if len(ds) <= 4:
        rec(0, 2 * k, [])
    return out


_SPACE_CACHE: dict = {}


def build_space(k: int, M: int, character: DirichletCharacter | None = None, Q: int | None = None,
                cusp: bool = False) -> ModFormSpace:
    """Certified basis of M_k(Gamma0(M)); S_k when cusp=True."""
    if cusp:
        return cusp_space(k, M, Q)
    if character is not None and not character.primitive().is_trivial:
        raise NotImplementedError("only trivial nebentypus spaces are built")
    sb = sturm_bound(k, M)
    Q = max(Q or 0, sb + 1)
    key = (k, M, Q, cusp)
    if key in _SPACE_CACHE:
        return _SPACE_CACHE[key]
    target = dim_modular_forms(k, M)
    gens = _eisenstein_generators(k, M, Q)
    if target == 0:
        sp = ModFormSpace(k, M, [], Q, character, cusp)
        _SPACE_CACHE[key] = sp
        return sp
    chosen = _select(gens, sb, Q)
    if len(chosen) < target:
        cands = _eta_generators(k, M, Q) if k <= 8 else []
        cands += _product_generators(k, M, Q)
        chosen = _select(chosen + cands, sb, Q, target)
    if len(chosen) != target:
        raise BasisDeficit(f"M_{k}(Gamma0({M})): found rank {len(chosen)}, expected {target}")
    sp = ModFormSpace(k, M, chosen, Q, character, cusp)
    sp.pivots()
    _SPACE_CACHE[key] = sp
    return sp


def _product_generators(k: int, M: int, Q: int) -> list:
    out = []
    for a in (2, 4, 6):
        b = k - a
        if b < 2 or b < a:
            continue
        if dim_modular_forms(a, M) == 0 or dim_modular_forms(b, M) == 0:
            continue
        A = build_space(a, M, Q=Q)
        B = build_space(b, M, Q=Q)
        for f in A.basis:
            for g in B.basis:
                out.append(QExp1((f * g).coeffs, k, M))
    return out


def _select(gens: list, sb: int, Q: int, target: int | None = None) -> list:
    chosen, rows = [], []
    rank = 0
    for g in gens:
        row = [_fq(g.coeffs[n]) for n in range(sb + 1)]
        trial = flint.fmpq_mat(rows + [row])
        r = trial.rank()
        if r > rank:
            rows.append(row)
            chosen.append(g)
            rank = r
            if target is not None and rank == target:
                break
    return chosen


def cusp_space(k: int, M: int, Q: int | None = None) -> ModFormSpace:
    """S_k(Gamma0(M)) as the image of T_q - (1 + q^(k-1)) on M_k, q the least prime not dividing M.

    Every Eisenstein series with trivial characters has T_q-eigenvalue 1 + q^(k-1),
    which exceeds the Deligne bound, so the operator kills exactly the Eisenstein part
    and is invertible on cusp forms.
    """
    full = build_space(k, M, Q=Q)
    q = next(r for r in (2, 3, 5, 7, 11, 13) if M % r)
    T = flint.fmpq_mat([[_fq(x) for x in r] for r in full.hecke_matrix(q)])
    n = full.dim
    eye = flint.fmpq_mat(n, n, [1 if i == j else 0 for i in range(n) for j in range(n)])
    P = T - (1 + q ** (k - 1)) * eye
    cols = []
    R, rank = P.transpose().rref()
    for i in range(rank):
        cols.append([_unfq(R[i, j]) for j in range(n)])
    basis = [full.combine(c) for c in cols]
    target = dim_modular_forms(k, M, cusp=True)
    if len(basis) != target:
        raise BasisDeficit(f"S_{k}(Gamma0({M})): kernel rank {len(basis)}, expected {target}")
    return ModFormSpace(k, M, basis, full.Q, None, True)


# ---------------------------------------------------------------------------
# p-adic matrices and slope projectors
# ---------------------------------------------------------------------------
def to_zp(x, p: int, M: int) -> int:
    """Image of a p-integral rational in Z/p^M."""
    x = Fraction(x)
    if x.denominator % p == 0:
        raise DomainError(f"{x} is not {p}-integral")
    mod = p**M
    return x.numerator * pow(x.denominator, -1, mod) % mod


def zp_matrix(rows, p: int, M: int) -> flint.fmpz_mat:
    return flint.fmpz_mat([[to_zp(x, p, M) for x in r] for r in rows])


def _reduce(A: flint.fmpz_mat, mod: int) -> flint.fmpz_mat:
    return flint.fmpz_mat([[int(A[i, j]) % mod for j in range(A.ncols())] for i in range(A.nrows())])


def matpoly_mod(coeffs: Sequence[int], U: flint.fmpz_mat, mod: int) -> flint.fmpz_mat:
    """sum c_i U^i mod ``mod`` by Horner."""
    n = U.nrows()
    eye = flint.fmpz_mat(n, n, [1 if i == j else 0 for i in range(n) for j in range(n)])
    acc = flint.fmpz_mat(n, n)
    for c in reversed(list(coeffs)):
        acc = _reduce(acc * U + eye * int(c), mod)
    return acc


def root_valuations(poly: Sequence, p: int) -> list:
    """Multiset of root valuations read off the Newton polygon (poly low degree first)."""
    pts = [(i, vp(Fraction(c), p)) for i, c in enumerate(poly) if c != 0]
    n = len(poly) - 1
    out = []
    # zero roots
    lo = pts[0][0]
    out += [Fraction(10**9)] * lo
    hull = [pts[0]]
    for pt in pts[1:]:
        hull.append(pt)
        while len(hull) >= 3:
            (x1, y1), (x2, y2), (x3, y3) = hull[-3:]
            if (y2 - y1) * (x3 - x1) >= (y3 - y1) * (x2 - x1):
                hull.pop(-2)
            else:
                break
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slope = Fraction(y1 - y2, x2 - x1)
        out += [slope] * (x2 - x1)
    assert len(out) == n
    return out


class SlopeProjector:
    """Idempotent e = E(U) onto the slope <= alpha part, entries in Z/p^prec."""

    def __init__(self, p, prec, alpha, matrix, rank, small_factor, large_factor):
        self.p, self.prec, self.alpha = p, prec, alpha
        self.matrix = matrix
        self.rank = rank
        self.small_factor = small_factor
        self.large_factor = large_factor

    @property
    def mod(self) -> int:
        return self.p**self.prec

    def trace(self) -> int:
        t = sum(int(self.matrix[i, i]) for i in range(self.matrix.nrows())) % self.mod
        return t if t <= self.mod // 2 else t - self.mod

    def apply(self, coords: Sequence) -> list:
        v = [to_zp(c, self.p, self.prec) for c in coords]
        n = len(v)
        return [sum(int(self.matrix[i, j]) * v[j] for j in range(n)) % self.mod for i in range(n)]

    def tensor(self, other: "SlopeProjector") -> flint.fmpz_mat:
        A, B = self.matrix, other.matrix
        n, m = A.nrows(), B.nrows()
        mod = min(self.mod, other.mod)
        rows = []
        for i in range(n):
            for k in range(m):
                rows.append([int(A[i, j]) * int(B[k, l]) % mod for j in range(n) for l in range(m)])
        return flint.fmpz_mat(rows)


def slope_project(U_rows, p: int, alpha=0, prec: int = 20) -> SlopeProjector:
    """Projector onto generalized U-eigenspaces of slope <= alpha.

    The characteristic polynomial is split over Z_p as A*B (A: roots of
    valuation <= alpha) by Hensel lifting the residual factorization of
    chi(p^a y), where a is an integer separating the two slope ranges.
    """
    alpha = Fraction(alpha)
    n = len(U_rows)
    Uq = flint.fmpq_mat([[_fq(x) for x in r] for r in U_rows])
    cp = Uq.charpoly()
    chi = [Fraction(int(c.p), int(c.q)) for c in cp.coeffs()]
    vals = root_valuations(chi, p)
    small = [v for v in vals if v <= alpha]
    large = [v for v in vals if v > alpha]
    a = max([0] + [-(-v.numerator // v.denominator) for v in small])
    if large and min(large) <= a:
        raise PrecisionError(f"no integral rescaling separates slopes <= {alpha} from {min(large)}")
    if a != 0:
        raise NotImplementedError("slope splitting is implemented for rescaling exponent 0 only")
    work = prec + 2
    mod = p**work
    f = [to_zp(c, p, work) for c in chi]
    d = len(large)
    if d == 0:
        E = [1]
        Apol, Bpol = f, [1]
    elif d == n:
        E = [0]
        Apol, Bpol = [1], f
    else:
        Bpol = hensel_factor(f, [0] * d + [1], p, work)
        Fp = flint.fmpz_mod_poly_ctx(mod)
        Apol_p = Fp(f) // Fp(Bpol)
        Apol = [int(c) for c in Apol_p.coeffs()]
        # u = B^{-1} mod A, Newton lifted from mod p
        Ap = flint.nmod_poly([c % p for c in Apol], p)
        Bp = flint.nmod_poly([c % p for c in Bpol], p)
        g, s, _ = Bp.xgcd(Ap)
        s = s * pow(int(g[0]), -1, p)
        u = Fp([int(c) for c in s.coeffs()])
        A_, B_ = Fp(Apol), Fp(Bpol)
        for _ in range(work.bit_length() + 1):
            u = (u * (2 - u * B_)) % A_
        Epol = (u * B_) % Fp(f)
        E = [int(c) for c in Epol.coeffs()]
    Um = zp_matrix(U_rows, p, work)
    e = matpoly_mod(E, Um, mod)
    outmod = p**prec
    e = _reduce(e, outmod)
    proj = SlopeProjector(p, prec, alpha, e, n - d, Apol, Bpol)
    if proj.trace() != n - d:
        raise PrecisionError(f"projector trace {proj.trace()} differs from slope count {n - d}")
    return proj


# ---------------------------------------------------------------------------
# elements of M (x) M
# ---------------------------------------------------------------------------
class FitError(ArithmeticError):
    """Two-variable coefficients are not in the span of the tensor basis."""


class TensorForm:
    """sum_{i,j} h[i][j] b_i(z) b_j(w) for a basis b of one ModFormSpace."""

    def __init__(self, space: ModFormSpace, coords, kernel_dim: int = 0, meta: dict | None = None):
        self.space = space
        self.coords = [list(r) for r in coords]
        self.kernel_dim = kernel_dim
        self.meta = dict(meta or {})

    @property
    def dim(self) -> int:
        return self.space.dim

    def coefficient(self, a: int, b: int):
        B = self.space.basis
        n = self.dim
        return sum((self.coords[i][j] * B[i].coeffs[a] * B[j].coeffs[b]
                    for i in range(n) for j in range(n)), Fraction(0))

    def qexp2(self, Q1: int, Q2: int) -> QExp2:
        return QExp2.from_function(lambda a, b: _norm(self.coefficient(a, b)), Q1, Q2,
                                   weight=self.space.k, level=self.space.M)

    def transform(self, A, B=None) -> "TensorForm":
        """(A (x) B) applied to coordinates: h -> A h B^T (column convention)."""
        B = A if B is None else B
        Am = flint.fmpq_mat([[_fq(x) for x in r] for r in A])
        Bm = flint.fmpq_mat([[_fq(x) for x in r] for r in B])
        H = flint.fmpq_mat([[_fq(x) for x in r] for r in self.coords])
        out = Am * H * Bm.transpose()
        return TensorForm(self.space, [[_unfq(out[i, j]) for j in range(self.dim)] for i in range(self.dim)],
                          self.kernel_dim, self.meta)

    def scale(self, c) -> "TensorForm":
        return TensorForm(self.space, [[c * x for x in r] for r in self.coords], self.kernel_dim, self.meta)

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.coords for x in r)


def fit_tensor(space: ModFormSpace, coeffs: dict, support=None, check: bool = True) -> TensorForm:
    """Coordinates in M (x) M of a table {(a, b): coefficient}.

    Without ``support`` the table must contain the pivot indices; the fit is
    solved on them and every other entry is verified.  With ``support`` (a set
    of indices) a symmetric solution is fitted on those entries only, free
    variables set to zero; ``kernel_dim`` records how many were free.
    """
    n = space.dim
    B = space.basis
    if support is None:
        piv = space.pivots()
        try:
            Cpp = flint.fmpq_mat([[_fq(coeffs[(i, j)]) for j in piv] for i in piv])
        except KeyError as exc:
            raise FitError(f"missing pivot coefficient {exc}") from None
        Pi = space._inverse()
        H = Pi.transpose() * Cpp * Pi
        h = [[_unfq(H[i, j]) for j in range(n)] for i in range(n)]
        tf = TensorForm(space, h, 0, {"fit": "pivot"})
        if check:
            _verify_fit(tf, coeffs, coeffs.keys())
        return tf
    idx = sorted(support)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]

    def entry(i, j, a, b):
        v = B[i].coeffs[a] * B[j].coeffs[b]
        if i != j:
            v += B[j].coeffs[a] * B[i].coeffs[b]
        return _fq(v)

    m = len(pairs)
    aug = flint.fmpq_mat([[entry(i, j, a, b) for (i, j) in pairs] + [_fq(coeffs[(a, b)])] for (a, b) in idx])
    R, rank = aug.rref()
    x = [Fraction(0)] * m
    for r in range(rank):
        c = next(j for j in range(m + 1) if R[r, j] != 0)
        if c == m:
            raise FitError("coefficient table is inconsistent on the requested support")
        x[c] = _unfq(R[r, m])
    h = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), v in zip(pairs, x):
        h[i][j] = h[j][i] = Fraction(v)
    tf = TensorForm(space, h, m - rank, {"fit": "support", "support": len(idx)})
    if check:
        _verify_fit(tf, coeffs, idx)
    return tf


def _verify_fit(tf: TensorForm, coeffs: dict, keys) -> None:
    for (a, b) in keys:
        if tf.coefficient(a, b) != coeffs[(a, b)]:
            raise FitError(f"coefficient ({a}, {b}) is not reproduced by the tensor fit")


def ordinary_inverse_matrix(proj: SlopeProjector, U_rows) -> flint.fmpz_mat:
    """U^{-1} e mod p^prec: the inverse of U on the projected part, zero elsewhere.

    If A(x) = a0 + x S(x) is the factor of the characteristic polynomial for
    the projected slopes, then -S(U)/a0 inverts U on ker A(U).
    """
    p, prec = proj.p, proj.prec
    mod = p**prec
    A = [c % mod for c in proj.small_factor]
    a0 = A[0]
    if a0 % p == 0:
        raise DomainError("U is not invertible on the projected part")
    inv = pow(a0, -1, mod)
    S = [(-c * inv) % mod for c in A[1:]]
    Um = zp_matrix(U_rows, p, prec)
    return _reduce(matpoly_mod(S, Um, mod) * proj.matrix, mod)
