"""p-adic L-functions of the symmetric square at classical points, and the checks built on them.

Values are computed as

    L_p(k, t) = N0 / (N^2 R^2 N1) * (l_F (x) l_F)((U^-1_{N^2/N1^2} o 1) (x) T_{N^2R^2/N}) H(k, t)

with H the ordinary pullback of level N p from ``siegel.assemble_H``.  On
level-Np forms the trace T_{M} for M = N (R = 1) is the sum over the
translations z -> (z + j)/q^e, i.e. M U_M, so l_F picks up M a_M(F).
Archimedean constants are carried as formal symbols and must cancel in every
asserted p-adic identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, gcd

import flint

from .characters import DirichletCharacter, gauss_sum, teichmuller_character
from .hida import Derivative, EigenMember, FamilySlice, lambda_log_derivative, tate_period_oracle, u_level_inverse
from .padic import CyclotomicNumber, DomainError, PadicNumber, PrecisionError, agreement, padic, vp
from .siegel import AssembledH, assemble_H


class SymbolMismatch(TypeError):
    """An identity was asserted between quantities with different archimedean symbols."""


# ---------------------------------------------------------------------------
# formal constants


@dataclass(frozen=True)
class Symbolic:
    """value * prod symbol^exponent, value exact (rational or cyclotomic)."""

    value: object
    symbols: tuple = ()  # sorted (name, exponent) pairs with nonzero exponent

    @staticmethod
    def make(value, **symbols) -> "Symbolic":
        return Symbolic(_cyc(value), tuple(sorted((k, v) for k, v in symbols.items() if v)))

    def _sym(self) -> dict:
        return dict(self.symbols)

    def __mul__(self, other):
        if not isinstance(other, Symbolic):
            other = Symbolic.make(other)
        s = self._sym()
        for k, v in other.symbols:
            s[k] = s.get(k, 0) + v
        return Symbolic(self.value * other.value, tuple(sorted((k, v) for k, v in s.items() if v)))

    __rmul__ = __mul__

    def inverse(self) -> "Symbolic":
        return Symbolic(self.value.inverse(), tuple((k, -v) for k, v in self.symbols))

    def __truediv__(self, other):
        if not isinstance(other, Symbolic):
            other = Symbolic.make(other)
        return self * other.inverse()

    @property
    def is_embeddable(self) -> bool:
        return not self.symbols

    def embed(self, p: int, prec: int) -> PadicNumber:
        if not self.is_embeddable:
            raise SymbolMismatch(f"archimedean symbols {dict(self.symbols)} do not cancel")
        v = self.value
        if v.is_rational():
            return padic(p, v.to_rational(), prec)
        from .padic import PadicField

        return PadicField.get(p, v.M, prec + 10).embed(v, prec)

    def __repr__(self):
        sym = " ".join(f"{k}^{v}" for k, v in self.symbols)
        return f"({self.value}) {sym}".strip()


def _cyc(x):
    if isinstance(x, CyclotomicNumber):
        return x
    return CyclotomicNumber.rational(Fraction(x), 1)


# ---------------------------------------------------------------------------
# local factors


def euler_factor_Dq(q: int, a_q, phi_q, k: int, steinberg: bool = False) -> list:
    """Coefficients of D_q(X) = (1 - a^2 X)(1 - a b X)(1 - b^2 X), a + b = a_q, a b = phi(q) q^(k-1).

    With ``steinberg`` (q divides the level, b = 0) only 1 - a_q^2 X survives;
    a_q = 0 gives D_q = 1.
    """
    a_q = Fraction(a_q)
    if steinberg:
        return [Fraction(1), -a_q * a_q] if a_q else [Fraction(1)]
    P = Fraction(phi_q) * Fraction(q) ** (k - 1)  # a b
    s2 = a_q * a_q - 2 * P  # a^2 + b^2
    e1 = s2 + P
    return [Fraction(1), -e1, P * e1, -P**3]


def eval_poly(cs, X):
    acc = 0
    for c in reversed(cs):
        acc = acc * X + c
    return acc


# ---------------------------------------------------------------------------
# interpolation constants


@dataclass
class LevelData:
    p: int = 3
    N: int = 5
    N0: int = 1
    N1: int = 1
    R: int = 1
    chi: DirichletCharacter | None = None  # the tame character chi_1 chi'
    phi: DirichletCharacter | None = None  # nebentypus of F

    def validate(self) -> None:
        p, N = self.p, self.N
        if N % self.N1:
            raise DomainError("N1 must divide N")
        if gcd(self.R, N * p) != 1:
            raise DomainError("R must be prime to N p")
        if N % p == 0:
            raise DomainError("N is the tame level, prime to p")
        if self.chi is not None and not self.chi.is_even:
            raise DomainError("chi must be even")

    def describe(self) -> dict:
        lit = lambda c: None if c is None else c.to_literal()  # noqa: E731
        return {"p": self.p, "N": self.N, "N0": self.N0, "N1": self.N1, "R": self.R,
                "chi": lit(self.chi), "phi": lit(self.phi)}


@dataclass
class InterpolationConstants:
    C: Symbolic
    E1: PadicNumber
    E2: PadicNumber
    S: PadicNumber
    n0: int
    meta: dict = field(default_factory=dict)


def _char_at_p(chi: DirichletCharacter | None, p: int):
    """(chi)_0(p) as an exact number: value of the primitive character."""
    if chi is None or chi.is_trivial:
        return Fraction(1)
    c0 = chi.primitive()
    if c0.modulus % p == 0:
        return Fraction(0)
    v = c0(p % c0.modulus)
    return v.to_rational() if v.is_rational() else v


def interpolation_constants(k: int, t: int, lam: PadicNumber, data: LevelData, p_primitive: bool,
                            eps_n: int = 1) -> InterpolationConstants:
    """C, E1, E2 and S at a point of type (k; t, eps), eps trivial (n = 1) unless eps_n is given."""
    p = data.p
    prec = lam.prec
    s = k - t - 1
    if s < 0:
        raise DomainError("need t <= k - 1")
    om = teichmuller_character(p) ** (-s)
    xi = om if data.chi is None else data.chi * om  # chi eps omega^-s, eps trivial
    trivial_at_p = xi.primitive().modulus % p != 0
    n = eps_n
    n0 = 0 if trivial_at_p else n
    xi0 = xi.primitive()
    G = gauss_sum(xi0.inverse())
    xi_pn = Fraction(1) if n == n0 else _char_at_p(xi, p)  # xi_0(p^(n - n0)) = 1 when n = n0
    N, N1, R = data.N, data.N1, data.R
    val = Fraction(factorial(s)) * Fraction(N1 * R * p**n0) ** s / Fraction(2) ** s
    symbols = {"i": 1 - k}
    if k % 2 == 0:
        val = val / Fraction(N) ** (k // 2)
    else:
        val = val / Fraction(N) ** ((k - 1) // 2)
        symbols["sqrtN"] = -1
    C = Symbolic.make(_cyc(val) * G * _cyc(xi_pn), **symbols)
    lam2 = lam * lam
    xp = _char_at_p(xi, p)
    E1 = (lam2 ** (-n0) if n0 else padic(p, 1, prec)) * (1 - _emb(xp, p, prec) * padic(p, Fraction(p) ** s, prec) / lam2)
    phi = data.phi
    if p_primitive:
        E2 = padic(p, 1, prec)
    else:
        chiinv = xi.inverse()
        a = _char_at_p(chiinv if phi is None else chiinv * phi, p)
        b = _char_at_p(chiinv if phi is None else chiinv * phi * phi, p)
        E2 = (1 - _emb(a, p, prec) * padic(p, Fraction(p) ** (k - 2 - s), prec)) * (
            1 - _emb(b, p, prec) * padic(p, Fraction(p) ** (2 * k - 3 - s), prec) / lam2)
    sign = 1 if k % 2 == 0 else -1
    if p_primitive:
        S = padic(p, sign, prec)
    else:
        phip = _emb(_char_at_p(phi, p), p, prec)
        S = sign * (1 - phip * padic(p, Fraction(p) ** (k - 1), prec) / lam2) * (
            1 - phip * padic(p, Fraction(p) ** (k - 2), prec) / lam2)
    return InterpolationConstants(C, E1, E2, S, n0, {"k": k, "t": t, "s": s})


def _emb(x, p, prec):
    if isinstance(x, CyclotomicNumber):
        return Symbolic.make(x).embed(p, prec)
    return padic(p, Fraction(x), prec)


# ---------------------------------------------------------------------------
# the functional plumbing


@dataclass
class LRecord:
    kind: str
    k: int
    t: int | None
    value: PadicNumber
    prec: int
    provenance: dict


def _level_scalar(member: EigenMember, data: LevelData) -> PadicNumber:
    """N0/(N^2 R^2 N1) * U^-1_{N^2/N1^2} * T_{N^2R^2/N} on the F-line."""
    if data.R != 1:
        raise NotImplementedError("the trace T_{N^2R^2/N} is implemented for R = 1")
    p, prec = member.lam.p, member.lam.prec
    N = data.N
    aq = {}
    for q in _prime_factors(N):
        aq[q] = _rat_of(member.a(q))
    inv = u_level_inverse(aq, N, data.N1)
    # T_{N}: N * U_N on level N p forms
    aN = Fraction(1)
    for q in _prime_factors(N):
        aN *= aq[q] ** vp(N, q)
    c = Fraction(data.N0, N * N * data.R**2 * data.N1) * inv * N * aN
    return padic(p, c, prec)


def _rat_of(x: PadicNumber) -> Fraction:
    """Small rational representative (eigenvalues at bad primes are integers)."""
    v = x.lift_int() if x.valuation() >= 0 else None
    if v is None:
        raise DomainError("non-integral eigenvalue")
    mod = x.p**x.prec
    return Fraction(v if v <= mod // 2 else v - mod)


def _prime_factors(n: int) -> list:
    out, q = [], 2
    while n > 1:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    return out


def left_inverses(H: AssembledH, N: int) -> list:
    """First-variable coordinates of H under two left inverses of M(Np) -> M(N^2 p).

    The first-variable forms are written in the basis {e_l(z)} u {e_l(N z)} of
    a longer copy of the space by solving on q-expansions; section A keeps the
    e_l(z) part, section B adds the e_l(N z) part back onto e_l(z).  Both are
    left inverses of the inclusion and differ off its image.
    """
    from .qseries import build_space, sturm_bound

    sp = H.space
    n = sp.dim
    sb = sturm_bound(sp.k, sp.M)
    Q = N * (sb + 2)
    E = build_space(sp.k, sp.M, Q=Q)
    C = flint.fmpq_mat([[_fq(x) for x in E.coordinates(b)] for b in sp.basis])  # b_i = sum_l C_il e_l
    ebasis = [[Fraction(e.coeffs[m]) for m in range(Q + 1)] for e in E.basis]
    vbasis = [[Fraction(e.coeffs[m // N]) if m % N == 0 else Fraction(0) for m in range(Q + 1)] for e in E.basis]
    # e_l(N z) already of level Np (old forms) are skipped
    rows = list(ebasis)
    extra = []
    rank = n
    for l, v in enumerate(vbasis):
        r = flint.fmpq_mat([[_fq(x) for x in row] for row in rows + [v]]).rank()
        if r > rank:
            rows.append(v)
            extra.append(l)
            rank = r
    big = flint.fmpq_mat([[_fq(x) for x in r] for r in rows])
    h = flint.fmpq_mat([[_fq(x) for x in r] for r in H.raw.coords])
    # first-variable form j is sum_i h_ij b_i = sum_l (C^T h)_lj e_l
    F = (C.transpose() * h).transpose() * flint.fmpq_mat([[_fq(x) for x in r] for r in ebasis])
    X = (big * big.transpose()).solve(big * F.transpose()).transpose()
    if X * big != F:
        raise DomainError("pullback is not in the span of the two-level basis")
    Cinv = C.inv()
    outs = []
    for with_v in (False, True):
        Y = [[X[j, l] for l in range(n)] for j in range(n)]
        if with_v:
            for c, l in enumerate(extra):
                for j in range(n):
                    Y[j][l] = Y[j][l] + X[j, n + c]
        Z = flint.fmpq_mat(Y) * Cinv  # back to the b_i coordinates, row j = first-variable form j
        outs.append([[_unfq(Z[j, i]) for j in range(n)] for i in range(n)])
    return outs


_agree = agreement


def _fq(x):
    x = Fraction(x)
    return flint.fmpq(x.numerator, x.denominator)


def _unfq(c):
    return Fraction(int(c.p), int(c.q))


def _pairing(H: AssembledH, member: EigenMember) -> PadicNumber:
    return H.pair(member.functional, member.functional)


def two_variable_Lp(slice_: FamilySlice, k: int, t: int, data: LevelData | None = None, prec: int | None = None,
                    H: AssembledH | None = None, provider=None) -> LRecord:
    """L_p at the classical point ([k], [t]) of an ordinary slice (level route member at weight k)."""
    data = data or LevelData(p=slice_.p, N=slice_.N)
    data.validate()
    member = slice_.members[k]
    pkg = slice_.packages.get(k)
    if pkg is None:
        raise DomainError(f"weight {k} has no level-{data.N * data.p} package in the slice")
    prec = prec or member.lam.prec
    kw = {} if provider is None else {"provider": provider}
    H = H or assemble_H("two-variable", k, t, p=data.p, N=data.N, chi=data.chi, prec=prec, space=pkg.space, **kw)
    val = _level_scalar(member, data) * _pairing(H, member)
    return LRecord("two-variable", k, t, val, prec, _provenance(H, data))


def improved_Lp(slice_: FamilySlice, k: int, data: LevelData | None = None, prec: int | None = None,
                alpha=0, H: AssembledH | None = None, provider=None) -> LRecord:
    data = data or LevelData(p=slice_.p, N=slice_.N)
    data.validate()
    member = slice_.members[k]
    pkg = slice_.packages.get(k)
    if pkg is None:
        raise DomainError(f"weight {k} has no level-{data.N * data.p} package in the slice")
    prec = prec or member.lam.prec
    kw = {} if provider is None else {"provider": provider}
    H = H or assemble_H("improved", k, p=data.p, N=data.N, chi=data.chi, k0=slice_.k0, alpha=alpha, prec=prec,
                        space=pkg.space, **kw)
    val = _level_scalar(member, data) * _pairing(H, member)
    return LRecord("improved", k, None, val, prec, _provenance(H, data))


def _provenance(H: AssembledH, data: LevelData) -> dict:
    d = dict(H.meta)
    d.update({"level": data.describe(), "k": H.k, "t": H.t, "s": H.s, "L": H.L, "prec": H.prec,
              "u_convention": "principal-unit", "trace": "T_N = N U_N on level N p"})
    return d


def left_inverse_check(slice_: FamilySlice, k: int, t: int, data: LevelData | None = None) -> dict:
    """L_p computed through two different left inverses 1_{N^2/N}; equal when exact."""
    from .siegel import AssembledH as _AH, _to_padic_matrix
    from .qseries import ordinary_inverse_matrix, _reduce

    data = data or LevelData(p=slice_.p, N=slice_.N)
    member = slice_.members[k]
    pkg = slice_.packages[k]
    H = assemble_H("two-variable", k, t, p=data.p, N=data.N, chi=data.chi, prec=member.lam.prec, space=pkg.space)
    vals = []
    for h in left_inverses(H, data.N):
        X, v = _to_padic_matrix(h, H.p, H.prec)
        W = ordinary_inverse_matrix(H.projector, pkg.U)
        mod = H.p**H.prec
        Wj = _reduce(W * W, mod)
        Hh = _AH(H.kind, H.k, H.t, H.s, H.space, H.raw, H.L, X, v, H.scale, H.prec, H.projector).apply(Wj)
        vals.append(_level_scalar(member, data) * _pairing(Hh, member))
    diff = vals[0] - vals[1]
    return {"values": vals, "equal": diff.is_zero(), "residual": agreement(vals[0], vals[1])}


# ---------------------------------------------------------------------------
# checks


@dataclass
class FactorizationRow:
    k: int
    lhs: PadicNumber
    rhs: PadicNumber
    factor: PadicNumber
    residual: int  # valuation of lhs - rhs
    ok: bool


def factorization_check(slice_: FamilySlice, weights, data: LevelData | None = None, need: int = 5) -> list:
    """L_p(k, [k - k0 + 1]) against (1 - chi(p) lambda^-2 p^(k0-2)) L*_p(k) at each weight."""
    data = data or LevelData(p=slice_.p, N=slice_.N)
    p, k0 = slice_.p, slice_.k0
    rows = []
    for k in weights:
        lam = slice_.lam(k)
        prec = lam.prec
        lhs = two_variable_Lp(slice_, k, k - k0 + 1, data).value
        star = improved_Lp(slice_, k, data).value
        cp = _emb(_char_at_p(data.chi, p), p, prec)
        fac = 1 - cp * padic(p, Fraction(p) ** (k0 - 2), prec) / (lam * lam)
        rhs = fac * star
        res = agreement(lhs, rhs)
        if lhs.is_zero() and rhs.is_zero():
            ok = True
        else:
            ok = res >= min(lhs.valuation(), rhs.valuation()) + need or res >= prec - 1
        rows.append(FactorizationRow(k, lhs, rhs, fac, res, ok))
    return rows


@dataclass
class LInvariantReport:
    L_family: PadicNumber  # -2 d log lambda / dk
    L_certified: int
    L_tate: PadicNumber | None
    tate_agreement: int | None
    derivative: PadicNumber  # d/ds of L_p(k0, [k0 - s]) at s = 0 (chain rule difference)
    rhs: PadicNumber  # L * L*_p(k0)
    derivative_agreement: int
    derivative_certified: int
    star_value: PadicNumber
    nonzero: bool
    meta: dict = field(default_factory=dict)


def l_invariant_report(slice_: FamilySlice, k0: int, data: LevelData | None = None, lam_weights=None,
                       chain_weight: int | None = None, curve=None) -> LInvariantReport:
    """Greenberg-Stevens package at a Steinberg point.

    The L-invariant is -2 d log lambda/dk from the slice (largest step in
    ``lam_weights``).  The derivative of s -> L_p(k0, [k0 - s]) at s = 0 is
    obtained from the vanishing of L_p on t = 1 and the values on the line
    t = k - k0 + 1: it equals -(L_p(k1, k1 - k0 + 1) - L_p(k0, 1)) / (k1 - k0)
    up to O(p^v(k1 - k0)) relative error.  The normalizing constants
    C_{k0,[1]} and C_{k0} coincide and cancel.
    """
    data = data or LevelData(p=slice_.p, N=slice_.N)
    p = slice_.p
    lam0 = slice_.lam(k0)
    prec = lam0.prec
    phip = _emb(_char_at_p(data.phi, p), p, prec)
    if (lam0 * lam0 - phip * padic(p, Fraction(p) ** (k0 - 2), prec)).valuation() < prec:
        raise DomainError("not a Steinberg point: E1 does not vanish, no trivial zero")
    lam_weights = sorted(lam_weights or [k for k in slice_.members if k != k0])
    k_far = lam_weights[-1]
    d = lambda_log_derivative(slice_, k0, k_far)
    Lfam = d.value * (-2)
    Lcert = d.certified
    L_tate, agree = None, None
    if curve is not None:
        tr = tate_period_oracle(curve, p, prec)
        L_tate = tr.value
        agree = _agree(Lfam, L_tate)
    if chain_weight is None:
        cands = [k for k in slice_.packages if k != k0 and vp(k - k0, p) >= 1]
        if not cands:
            raise DomainError("no level-route weight at a step divisible by p for the chain-rule difference")
        chain_weight = min(cands)
    k1 = chain_weight
    g1 = two_variable_Lp(slice_, k1, k1 - k0 + 1, data).value
    g0 = two_variable_Lp(slice_, k0, 1, data).value
    deriv = (g1 - g0) * padic(p, Fraction(-1, k1 - k0), prec)
    star = improved_Lp(slice_, k0, data).value
    # constants: C_{k0,[1]} for the derivative side and C_{k0} = C_{k0,[1]} for L*
    C1 = interpolation_constants(k0, 1, lam0, data, True).C
    Cstar = interpolation_constants(k0, k0 - k0 + 1, lam0, data, True).C
    ratio = (Cstar / C1).embed(p, prec)  # raises if the symbols do not cancel
    rhs = Lfam * star * ratio
    agreement = _agree(deriv, rhs)
    m = vp(k1 - k0, p)
    if Lfam.is_zero() or star.is_zero():
        raise PrecisionError("L-invariant or L* vanishes at working precision; the comparison is void")
    cert = min(rhs.valuation() + min(m, Lcert - Lfam.valuation()), prec)
    return LInvariantReport(Lfam, Lcert, L_tate, agree, deriv, rhs, agreement, cert, star,
                            not Lfam.is_zero(), {"k_far": k_far, "chain_weight": k1, "m": m})
