"""Ordinary eigen-data at fixed classical weights and finite slices of a Hida family.

Everything is done with integer matrices modulo p^prec in a p-saturated
basis.  An ordinary eigenvalue is isolated by Hensel lifting a simple root of
the characteristic polynomial mod p; the spectral projector onto its line is
Q(U)/Q(lambda) with Q = charpoly / (x - lambda).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import flint

from .padic import DomainError, PadicNumber, PrecisionError, hensel_factor, padic, padic_log, vp
from .qseries import (
    ModFormSpace,
    QExp1,
    build_space,
    cusp_space,
    matpoly_mod,
    slope_project,
    sturm_bound,
    to_zp,
    zp_matrix,
)


class EigenCollision(ArithmeticError):
    """The requested eigenvalue is not simple modulo p."""


class FamilyMatchError(ArithmeticError):
    pass


class RegularityError(DomainError):
    pass


def _charpoly_zp(rows, p: int, prec: int) -> list:
    M = flint.fmpq_mat([[flint.fmpq(Fraction(x).numerator, Fraction(x).denominator) for x in r] for r in rows])
    return [to_zp(Fraction(int(c.p), int(c.q)), p, prec) for c in M.charpoly().coeffs()]


def _residual_roots(f: list, p: int) -> dict:
    """{root mod p: multiplicity} of f mod p."""
    fp = flint.nmod_poly([c % p for c in f], p)
    out = {}
    for g, e in fp.factor()[1]:
        if g.degree() == 1:
            out[int(-g[0]) % p] = out.get(int(-g[0]) % p, 0) + e
    return out


@dataclass
class EigenMember:
    """One eigenline with Z_p-rational eigenvalue ``lam`` of the operator ``op``."""

    lam: PadicNumber
    residue: int
    functional: list  # l(G) = sum functional_i G_i, with l(F) = 1
    vector: list  # coordinates of F with a_1(F) = 1, as PadicNumbers
    qexp: list  # first coefficients of F as PadicNumbers
    kind: str = "cusp"
    p_primitive: bool = False
    stabilized_from: PadicNumber | None = None  # a_p at tame level when p-stabilized

    def a(self, n: int) -> PadicNumber:
        return self.qexp[n]


@dataclass
class EigenPackage:
    space: ModFormSpace
    p: int
    prec: int
    U: list
    projector: object
    members: list = field(default_factory=list)
    clusters: dict = field(default_factory=dict)  # residue -> multiplicity of ordinary roots

    def member(self, residue: int) -> EigenMember:
        for m in self.members:
            if m.residue == residue % self.p:
                return m
        if self.clusters.get(residue % self.p, 0) > 1:
            raise EigenCollision(f"ordinary eigenvalue ~ {residue} mod {self.p} has multiplicity "
                                 f"{self.clusters[residue % self.p]}; raise precision or weight")
        raise DomainError(f"no ordinary eigenvalue congruent to {residue} mod {self.p}")

    @property
    def ordinary_rank(self) -> int:
        return self.projector.rank


def _eigenline(space: ModFormSpace, rows, f: list, root_res: int, p: int, prec: int, nq: int):
    """Hensel lift of a simple residual root, with its projector data."""
    mod = p**prec
    g = hensel_factor(f, [(-root_res) % p, 1], p, prec)
    lam = (-g[0]) % mod
    n = len(f) - 1
    q = [0] * n
    acc = 0
    for i in range(n, 0, -1):
        acc = (acc * lam + f[i]) % mod
        q[i - 1] = acc
    Qlam = sum(c * pow(lam, i, mod) for i, c in enumerate(q)) % mod
    if Qlam % p == 0:
        raise EigenCollision("eigenvalue is not separated from the rest of the spectrum mod p")
    P = matpoly_mod(q, zp_matrix(rows, p, prec), mod)
    inv = pow(Qlam, -1, mod)
    B = space.basis
    a1 = [to_zp(b.coeffs[1], p, prec) for b in B]
    dim = space.dim
    # a column of the projector spans the eigenline
    col = max(range(dim), key=lambda j: -min((vp(int(P[i, j]), p) if int(P[i, j]) % mod else prec)
                                              for i in range(dim)))
    v = [padic(p, int(P[i, col]) * inv % mod, prec) for i in range(dim)]
    lead = sum((v[i] * a1[i] for i in range(dim)), padic(p, 0, prec))
    if lead.is_zero():
        raise DomainError("eigenform has vanishing first coefficient at working precision")
    v = [x / lead for x in v]
    coeffs = []
    for m in range(nq + 1):
        c = padic(p, 0, prec)
        for i in range(dim):
            c = c + v[i] * to_zp(B[i].coeffs[m], p, prec)
        coeffs.append(c)
    functional = [sum(a1[i] * int(P[i, j]) for i in range(dim)) * inv % mod for j in range(dim)]
    return padic(p, lam, prec), functional, v, coeffs


def eigen_package(space: ModFormSpace, p: int, prec: int = 30, nq: int = 13) -> EigenPackage:
    """Ordinary eigen-data of U_p on ``space`` (level divisible by p)."""
    if space.M % p:
        raise DomainError("eigen_package works at level divisible by p")
    rows = space.hecke_matrix(p)
    proj = slope_project(rows, p, 0, prec)
    f = _charpoly_zp(rows, p, prec)
    roots = {r: e for r, e in _residual_roots(f, p).items() if r != 0}
    pkg = EigenPackage(space, p, prec, rows, proj, [], roots)
    nq = min(nq, space.Q)
    ncusp = _cusp_test_prime(space.M)
    for r, e in sorted(roots.items()):
        if e != 1:
            continue
        lam, l, v, cs = _eigenline(space, rows, f, r, p, prec, nq)
        kind = _kind(cs, space.k, ncusp)
        primitive = space.k == 2 and kind == "cusp" and (lam * lam - 1).valuation() >= prec
        pkg.members.append(EigenMember(lam, r, l, v, cs, kind, primitive))
    return pkg


def _cusp_test_prime(M: int) -> int:
    q = 2
    while M % q == 0:
        q += 1
    return q


def _kind(cs, k: int, q: int) -> str:
    """Eisenstein eigenforms have a_q = 1 + q^(k-1) (trivial characters); cusp forms cannot."""
    if q < len(cs) and (cs[q] - (1 + q ** (k - 1))).is_zero():
        return "eisenstein"
    return "cusp"


def petersson_functional(member: EigenMember, G, space: ModFormSpace | None = None) -> PadicNumber:
    """l_F(G): the F-coefficient of G in the eigen-decomposition (G a QExp1 or coordinates)."""
    p = member.lam.p
    prec = member.lam.prec
    if isinstance(G, QExp1):
        if space is None:
            raise DomainError("a space is needed to read coordinates of a q-expansion")
        G = space.coordinates(G)
    acc = padic(p, 0, prec)
    for li, gi in zip(member.functional, G):
        if isinstance(gi, PadicNumber):
            acc = acc + gi * li
        else:
            acc = acc + padic(p, Fraction(gi), prec) * li
    return acc


# ---------------------------------------------------------------------------
# p-stabilization from tame level


def unit_root(ap: PadicNumber, p: int, k: int, prec: int, phi_p: int = 1) -> PadicNumber:
    """Unit root of x^2 - a_p x + phi(p) p^(k-1)."""
    mod = p**prec
    a = ap.lift_int() % mod if ap.valuation() >= 0 else None
    if a is None or a % p == 0:
        raise DomainError("a_p is not a unit: no ordinary stabilization")
    f = [phi_p * pow(p, k - 1, mod) % mod, (-a) % mod, 1]
    g = hensel_factor(f, [(-a) % p, 1], p, prec)
    return padic(p, (-g[0]) % mod, prec)


def stabilized_member(k: int, N: int, p: int, residue: int, prec: int = 30, nq: int = 13) -> EigenMember:
    """Ordinary member at weight k from the T_p-eigenform on S_k(Gamma0(N)), p-stabilized."""
    sb = sturm_bound(k, N)
    sp = cusp_space(k, N, Q=max(p, nq) * (sb + 2)).saturate(p)
    if sp.dim == 0:
        raise DomainError(f"S_{k}(Gamma0({N})) is zero")
    rows = sp.hecke_matrix(p)
    f = _charpoly_zp(rows, p, prec)
    roots = _residual_roots(f, p)
    if roots.get(residue % p, 0) != 1:
        raise EigenCollision(f"T_{p} root {residue} mod {p} has multiplicity {roots.get(residue % p, 0)}")
    ap, l, v, cs = _eigenline(sp, rows, f, residue % p, p, prec, min(nq, sp.Q))
    lam = unit_root(ap, p, k, prec)
    # q-expansion of the stabilization f(z) - (p^(k-1)/lam) f(pz)
    beta = padic(p, Fraction(p) ** (k - 1), prec) / lam
    stab = [cs[n] - (beta * cs[n // p] if n % p == 0 else 0) for n in range(len(cs))]
    return EigenMember(lam, residue % p, l, v, stab, "cusp", False, stabilized_from=ap)


# ---------------------------------------------------------------------------
# family slices


@dataclass
class FamilySlice:
    N: int
    p: int
    k0: int
    members: dict  # weight -> EigenMember
    packages: dict  # weight -> EigenPackage (level N p route only)
    certificates: dict  # weight -> {q: True}
    flags: dict = field(default_factory=dict)

    def lam(self, k: int) -> PadicNumber:
        return self.members[k].lam


def _primes_upto(n: int) -> list:
    return [q for q in range(2, n + 1) if all(q % d for d in range(2, int(q**0.5) + 1))]


def family_slice(N: int, p: int, k0: int, weights, residue: int | None = None, prec: int = 30,
                 route: str = "auto", nq: int = 13, level_upto: int = 8) -> FamilySlice:
    """Ordinary members through the cusp form of weight k0 and level N p, matched mod p.

    route "level" computes every member on M_k(Gamma0(N p)); "tame" uses the
    p-stabilization of the level-N eigenform for k != k0 (cheap at large k);
    "auto" takes the level route for k <= level_upto.
    """
    step = 2 if p == 2 else p - 1
    weights = sorted(set([k0] + list(weights)))
    for k in weights:
        if (k - k0) % step:
            raise FamilyMatchError(f"weight {k} is not congruent to {k0} mod {step}")
    base_pkg = eigen_package(level_space_np(k0, N, p), p, prec, nq)
    cusp = [m for m in base_pkg.members if m.kind == "cusp"]
    if residue is None:
        if len(cusp) != 1:
            raise FamilyMatchError("several ordinary cusp members at the base weight; pass residue")
        base = cusp[0]
    else:
        base = base_pkg.member(residue)
    members = {k0: base}
    packages = {k0: base_pkg}
    certs = {k0: {}}
    qs = [q for q in _primes_upto(nq) if (N * p) % q]
    for k in weights:
        if k == k0:
            continue
        use_level = route == "level" or (route == "auto" and k <= level_upto)
        if use_level:
            pkg = eigen_package(level_space_np(k, N, p), p, prec, nq)
            m = pkg.member(base.residue)
            packages[k] = pkg
        else:
            m = stabilized_member(k, N, p, base.residue, prec, nq)
        cert = {}
        for q in qs:
            d = m.a(q) - base.a(q)
            if d.valuation() < 1:
                raise FamilyMatchError(f"a_{q} at weight {k} is not congruent to weight {k0}")
            cert[q] = True
        members[k] = m
        certs[k] = cert
    return FamilySlice(N, p, k0, members, packages, certs, {"notCM": True})


def level_space_np(k: int, N: int, p: int) -> ModFormSpace:
    sb = sturm_bound(k, N * p)
    return build_space(k, N * p, Q=p * (sb + 2)).saturate(p)


def log_unit(x: PadicNumber) -> PadicNumber:
    """Iwasawa logarithm of a p-adic unit (kills the roots of unity)."""
    p = x.p
    e = 2 if p == 2 else p - 1
    y = x**e
    return padic_log(y) / e


@dataclass
class Derivative:
    value: PadicNumber
    certified: int  # absolute precision of value as an approximation of the derivative
    k0: int
    k1: int
    quotient: PadicNumber | None = None  # the difference quotient before truncation


def lambda_log_derivative(slice_: FamilySlice, k0: int, k1: int) -> Derivative:
    """(log lambda(k1) - log lambda(k0)) / (k1 - k0), certified to v_p(k1 - k0) digits.

    The truncation error of a difference over a step of valuation m has
    valuation >= m when log lambda is analytic on the weight disc.
    """
    if k1 == k0:
        raise DomainError("degenerate difference: k1 == k0")
    p = slice_.p
    l0, l1 = slice_.lam(k0), slice_.lam(k1)
    diff = (log_unit(l1) - log_unit(l0)) / padic(p, k1 - k0, l0.prec)
    m = vp(k1 - k0, p)
    if m < 1:
        raise PrecisionError("the weight step must be divisible by p")
    cert = min(m, diff.prec)
    return Derivative(_truncate(diff, cert), cert, k0, k1, diff)


def _truncate(x: PadicNumber, prec: int) -> PadicNumber:
    if x.is_zero() or x.v >= prec:
        return PadicNumber(x.p, None, 0, prec)
    return PadicNumber(x.p, x.v, x.unit, prec)


# ---------------------------------------------------------------------------
# Tate parameter


@dataclass
class TateReport:
    value: PadicNumber  # log_p(q) / ord_p(q)
    q: PadicNumber
    j: Fraction
    split: bool
    residual: int  # valuation of j(q) - j, checked self-consistency


def _weierstrass_invariants(a):
    a1, a2, a3, a4, a6 = a
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    c4 = b2 * b2 - 24 * b4
    c6 = -b2**3 + 36 * b2 * b4 - 216 * b6
    disc = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    return c4, c6, disc


def _j_series(M: int):
    """Coefficients of 1/j(q) = q * g(q), g to O(q^M)."""
    def mul(a, b):
        c = [0] * M
        for i, x in enumerate(a):
            if x:
                for k, y in enumerate(b[: M - i]):
                    c[i + k] += x * y
        return c

    sig3 = [0] + [sum(d**3 for d in range(1, n + 1) if n % d == 0) for n in range(1, M)]
    E4 = [1] + [240 * sig3[n] for n in range(1, M)]
    E43 = mul(mul(E4, E4), E4)
    D = [1] + [0] * (M - 1)
    for n in range(1, M):
        for _ in range(24):
            D = [D[i] - (D[i - n] if i >= n else 0) for i in range(M)]
    inv = [1] + [0] * (M - 1)
    for n in range(1, M):
        inv[n] = -sum(E43[i] * inv[n - i] for i in range(1, n + 1))
    return mul(D, inv)


def tate_period_oracle(ainvs, p: int, prec: int = 20, require_split: bool = False) -> TateReport:
    """log_p(q_E) / ord_p(q_E), q_E found by inverting j(q) = 1/q + 744 + ... p-adically."""
    c4, c6, disc = _weierstrass_invariants(list(ainvs))
    if disc == 0:
        raise DomainError("singular curve")
    j = Fraction(c4**3, disc)
    vj = vp(j, p)
    if vj >= 0 or vp(c4, p) != 0:
        raise DomainError("no multiplicative reduction at p for this model")
    if p == 2:
        raise NotImplementedError("split test at p = 2")
    split = int(flint.fmpz((-c6) % p).jacobi(p)) == 1
    if require_split and not split:
        raise DomainError("nonsplit multiplicative reduction")
    # q has valuation -vj; each term of the series gains that much
    M = prec // (-vj) + 3
    g = _j_series(M)
    P = prec + 2 * (-vj) + 5
    w = padic(p, 1 / j, P)
    gp = [padic(p, c, P) for c in g]
    q = w
    for _ in range(M + 2):
        gv = gp[0]
        qq = q
        for c in gp[1:]:
            gv = gv + c * qq
            qq = qq * q
        q = w / gv
    # consistency: 1/j(q) recomputed
    gv = gp[0]
    qq = q
    for c in gp[1:]:
        gv = gv + c * qq
        qq = qq * q
    residual = (q * gv - w).valuation()
    ordq = q.valuation()
    u = q / padic(p, Fraction(p) ** ordq, P)
    val = log_unit(u) / ordq
    return TateReport(_truncate(val, min(val.prec, prec)), q, j, split, residual)


# ---------------------------------------------------------------------------
# the U_{N^2/N1^2} scalar


def u_level_inverse(a_q: dict, N: int, N1: int = 1):
    """prod_q a_q^-ord_q(N^2/N1^2) for q | N/N1 (a_q the U_q-eigenvalues of F)."""
    if N % N1:
        raise DomainError("N1 must divide N")
    out = Fraction(1)
    m = (N * N) // (N1 * N1)
    q = 2
    while m > 1:
        if m % q == 0:
            e = 0
            while m % q == 0:
                m //= q
                e += 1
            aq = a_q.get(q)
            if aq is None:
                raise DomainError(f"missing U_{q}-eigenvalue")
            if aq == 0:
                raise RegularityError(f"a_{q} = 0: enlarge N1 to contain {q}")
            out = out / Fraction(aq) ** e
        q += 1
    return out
