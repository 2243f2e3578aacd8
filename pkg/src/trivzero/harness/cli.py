"""Command-line entry point.

Every command reads one SessionConfig, writes a JSON artifact plus a
provenance manifest under ``--out`` and exits nonzero with a structured error
record on failure.  Artifacts contain no timestamps so reruns are
byte-identical.
"""
from __future__ import annotations

import json
import sys
import traceback
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import click

from .cache import Cache, canonical, digest
from .config import SessionConfig

PACKAGE_VERSION = "0.1.0"


def _ser(x):
    from ..padic import CyclotomicNumber, PadicExt, PadicNumber

    if isinstance(x, PadicNumber):
        return x.to_json()
    if isinstance(x, PadicExt):
        return {"p": x.p, "M": x.field.M, "valuation": x.v, "coeffs": list(x.c), "precision": x.prec}
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float) and x == float("inf"):
        return "inf"
    if isinstance(x, CyclotomicNumber):
        return {"M": x.M, "coeffs": [str(c) for c in x.coeffs]}
    if isinstance(x, dict):
        return {str(k): _ser(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_ser(v) for v in x]
    return x


def _write(out: Path, name: str, payload: dict, cfg: SessionConfig, extra_prov: dict | None = None) -> Path:
    import flint

    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.json"
    text = json.dumps(_ser(payload), sort_keys=True, indent=1) + "\n"
    path.write_text(text)
    prov = {
        "artifact": path.name,
        "sha256": digest(_ser(payload)),
        "config": cfg.to_json(),
        "package": PACKAGE_VERSION,
        "python-flint": flint.__version__,
        "conventions": {
            "u": "u = 1 + p (p odd), 5 (p = 2); kappa read at principal units <z> = z / omega(z)",
            "embedding": "cyclotomic fields embedded via Hensel lift of the minimal polynomial root",
            "provider": cfg.provider,
            "truncation": cfg.truncation,
            "precision": cfg.precision,
        },
    }
    prov.update(extra_prov or {})
    (out / f"{name}.provenance.json").write_text(json.dumps(_ser(prov), sort_keys=True, indent=1) + "\n")
    return path


class Ctx:
    def __init__(self, cfg: SessionConfig, cache: Cache, out: Path):
        self.cfg, self.cache, self.out = cfg, cache, out


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--cache", "cache_dir", type=click.Path(file_okay=False), default=None)
@click.option("--precision", type=int, default=None)
@click.option("--truncation", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--provider", type=click.Choice(["closed-form", "kaufhold"]), default=None)
@click.pass_context
def main(ctx, config_path, cache_dir, precision, truncation, out_dir, provider):
    """p-adic symmetric-square L-functions at a trivial zero."""
    try:
        cfg = SessionConfig.load(config_path)
        upd = {k: v for k, v in (("precision", precision), ("truncation", truncation), ("provider", provider),
                                 ("cache_dir", cache_dir), ("out", out_dir)) if v is not None}
        cfg = replace(cfg, **upd).validate()
    except Exception as exc:  # config errors are reported like any other
        _fail("config", exc)
    ctx.obj = Ctx(cfg, Cache(cfg.cache_dir), Path(cfg.out))


def _fail(command: str, exc: Exception):
    rec = {"command": command, "error": type(exc).__name__, "message": str(exc),
           "trace": traceback.format_exception_only(type(exc), exc)[-1].strip()}
    click.echo(json.dumps(rec, sort_keys=True), err=True)
    sys.exit(2)


def _run(command: str):
    def deco(fn):
        def wrapper(*a, **kw):
            try:
                return fn(*a, **kw)
            except SystemExit:
                raise
            except Exception as exc:
                _fail(command, exc)
        wrapper.__name__ = fn.__name__
        wrapper.__doc__ = fn.__doc__
        return wrapper
    return deco


def _level(cfg: SessionConfig):
    from ..lfun import LevelData

    return LevelData(p=cfg.p, N=cfg.N, N0=cfg.N0, N1=cfg.N1, R=cfg.R, chi=cfg.character())


def _slice(c: Ctx, weights=None):
    from ..hida import family_slice

    cfg = c.cfg
    return family_slice(cfg.N, cfg.p, cfg.k0, weights if weights is not None else cfg.weights, prec=cfg.precision,
                        level_upto=cfg.level_upto)


@main.command("kl-eval")
@click.pass_obj
@_run("kl-eval")
def kl_eval(c: Ctx):
    """Kubota-Leopoldt value at a classical point, with the Bernoulli check."""
    from ..characters import DirichletCharacter, kl_classical_value, kubota_leopoldt, teichmuller_character
    from ..padic import WeightPoint, agreement

    kl = {"p": 5, "eta": {"teichmuller_power": 2}, "k": 1, "eps": [1, 0]}
    kl.update(c.cfg.kl)
    p = kl["p"]
    e = kl["eta"]
    eta = teichmuller_character(p) ** e["teichmuller_power"] if "teichmuller_power" in e else \
        DirichletCharacter.from_literal(e)
    eps = tuple(kl["eps"])
    key = {"cmd": "kl-eval", "kl": kl, "prec": c.cfg.precision}

    def compute():
        kappa = WeightPoint.classical(p, kl["k"], eps, prec=c.cfg.precision + 10)
        series = kubota_leopoldt(kappa, eta, prec=c.cfg.precision, method="series")
        exact = kubota_leopoldt(kappa, eta, prec=c.cfg.precision, method="classical",
                                field=getattr(series, "field", None))
        return {"value": _ser(series), "bernoulli": _ser(kl_classical_value(eta, p, kl["k"], eps)),
                "agreement": _ser(agreement(series, exact))}

    rec = c.cache.get_or_compute(key, compute)
    path = _write(c.out, "kl-eval", rec, c.cfg)
    click.echo(str(path))


@main.command("eis-coeffs")
@click.option("--k", "k", type=int, required=True)
@click.option("--t", "t", type=int, required=True)
@click.option("--L", "L", type=int, default=1)
@click.option("--kind", type=click.Choice(["twisted", "untwisted"]), default="twisted")
@click.pass_obj
@_run("eis-coeffs")
def eis_coeffs(c: Ctx, k, t, L, kind):
    """Classical pullback coefficients (T1, T4) <= truncation."""
    from ..siegel import eisenstein_table, twisted_data, untwisted_data

    cfg = c.cfg
    s = k - t - 1
    data = twisted_data(cfg.p, cfg.N, s, cfg.character()) if kind == "twisted" else \
        untwisted_data(cfg.p, cfg.N, cfg.character(), s0=cfg.k0 - 2)
    Q = cfg.truncation
    key = {"cmd": "eis-coeffs", "k": k, "t": t, "L": L, "kind": kind, "Q": Q, "data": data.describe(),
           "provider": cfg.provider}

    def compute():
        tab = eisenstein_table(Q, L, data, t, s, cfg.provider)
        return {"rows": [[str(tab[(a, b)]) for b in range(Q + 1)] for a in range(Q + 1)],
                "meta": {"k": k, "t": t, "s": s, "L": L, "characters": data.describe(), "provider": cfg.provider}}

    rec = c.cache.get_or_compute(key, compute)
    click.echo(str(_write(c.out, f"eis-coeffs-k{k}-t{t}-L{L}-{kind}", rec, c.cfg)))


def _slice_record(S) -> dict:
    return {"N": S.N, "p": S.p, "k0": S.k0,
            "members": {str(k): {"lambda": m.lam, "residue": m.residue, "kind": m.kind,
                                 "a": {str(q): m.a(q) for q in (2, 7, 11, 13) if q < len(m.qexp)}}
                        for k, m in sorted(S.members.items())},
            "certificates": {str(k): {str(q): v for q, v in cert.items()} for k, cert in S.certificates.items()},
            "flags": S.flags}


@main.command("family-build")
@click.pass_obj
@_run("family-build")
def family_build(c: Ctx):
    """Family slice through the weight-k0 ordinary cusp form."""
    S = _slice(c)
    click.echo(str(_write(c.out, "family", _slice_record(S), c.cfg)))


@main.command("lp-grid")
@click.option("--t", "ts", type=int, multiple=True, help="t values; default 1 and k - k0 + 1")
@click.pass_obj
@_run("lp-grid")
def lp_grid(c: Ctx, ts):
    """Two-variable values at classical points of the slice."""
    from ..lfun import two_variable_Lp

    cfg = c.cfg
    S = _slice(c)
    grid = []
    for k in sorted(cfg.weights):
        for t in (ts or sorted({1, k - cfg.k0 + 1})):
            if not 1 <= t <= k - 1:
                continue
            key = {"cmd": "lp", "k": k, "t": t, "level": _level(cfg).describe(), "prec": cfg.precision,
                   "provider": cfg.provider}
            rec = c.cache.get_or_compute(key, lambda: _ser({
                "k": k, "t": t, **_lrec(two_variable_Lp(S, k, t, _level(cfg), provider=cfg.provider))}))
            grid.append(rec)
    click.echo(str(_write(c.out, "lp-grid", {"grid": grid}, cfg)))


def _lrec(r) -> dict:
    return {"value": r.value, "precision": r.prec, "provenance": r.provenance}


@main.command("lp-improved")
@click.pass_obj
@_run("lp-improved")
def lp_improved(c: Ctx):
    """One-variable improved values at the weights of the slice."""
    from ..lfun import improved_Lp

    cfg = c.cfg
    S = _slice(c)
    out = []
    for k in sorted(cfg.weights):
        key = {"cmd": "lp*", "k": k, "level": _level(cfg).describe(), "prec": cfg.precision, "provider": cfg.provider}
        out.append(c.cache.get_or_compute(key, lambda: _ser(
            {"k": k, **_lrec(improved_Lp(S, k, _level(cfg), provider=cfg.provider))})))
    click.echo(str(_write(c.out, "lp-improved", {"values": out}, cfg)))


@main.command("verify-factorization")
@click.pass_obj
@_run("verify-factorization")
def verify_factorization(c: Ctx):
    """L_p(k, [k - k0 + 1]) against (1 - lambda^-2 p^(k0-2)) L*_p(k)."""
    from ..lfun import factorization_check

    S = _slice(c)
    rows = factorization_check(S, sorted(c.cfg.weights), _level(c.cfg))
    payload = {"rows": [{"k": r.k, "lhs": r.lhs, "rhs": r.rhs, "factor": r.factor,
                         "residual_valuation": r.residual, "pass": r.ok}
                        for r in rows]}
    click.echo(str(_write(c.out, "factorization", payload, c.cfg)))
    for r in rows:
        click.echo(f"k={r.k:3d} residual v={r.residual} {'PASS' if r.ok else 'FAIL'}")
    if not all(r.ok for r in rows):
        sys.exit(1)


@main.command("l-invariant")
@click.pass_obj
@_run("l-invariant")
def l_invariant(c: Ctx):
    """Family L-invariant, chain-rule derivative and the Tate-period oracle."""
    from ..lfun import l_invariant_report

    cfg = c.cfg
    S = _slice(c, sorted(set(cfg.weights) | set(cfg.lambda_weights)))
    R = l_invariant_report(S, cfg.k0, _level(cfg), lam_weights=cfg.lambda_weights, chain_weight=cfg.chain_weight,
                           curve=cfg.curve)
    payload = {"L_family": R.L_family, "L_certified_digits": R.L_certified, "L_tate": R.L_tate,
               "tate_agreement_digits": R.tate_agreement, "derivative": R.derivative, "L_times_Lstar": R.rhs,
               "derivative_agreement_digits": R.derivative_agreement,
               "derivative_certified_digits": R.derivative_certified, "Lstar": R.star_value,
               "L_nonzero": R.nonzero, "meta": R.meta}
    click.echo(str(_write(c.out, "l-invariant", payload, cfg)))
    click.echo(f"L (family)  = {R.L_family}")
    click.echo(f"L (Tate)    = {R.L_tate}")
    click.echo(f"d/ds L_p    = {R.derivative}")
    click.echo(f"L * L*_p    = {R.rhs}")


@main.command("self-test")
@click.pass_obj
@_run("self-test")
def self_test(c: Ctx):
    """Fast invariant batteries of every module."""
    results = run_self_test(c)
    click.echo(str(_write(c.out, "self-test", {"checks": results}, c.cfg)))
    for name, ok in results.items():
        click.echo(f"{'PASS' if ok else 'FAIL'} {name}")
    if not all(results.values()):
        sys.exit(1)


def run_self_test(c: Ctx) -> dict:
    from ..characters import kubota_leopoldt, teichmuller_character
    from ..hida import eigen_package, level_space_np
    from ..padic import WeightPoint, agreement, padic
    from ..qseries import zp_matrix, _reduce
    from ..siegel import HalfIntegralMatrix, b_congruence_check

    out = {}
    p = 5
    eta = teichmuller_character(p) ** 2
    kap = WeightPoint.classical(p, 1, prec=30)
    v = kubota_leopoldt(kap, eta, prec=15, method="series")
    w = kubota_leopoldt(kap, eta, prec=15, method="classical", field=getattr(v, "field", None))
    out["kubota-leopoldt vs Bernoulli"] = agreement(v, w) >= 13
    I = HalfIntegralMatrix(9, 5, 9)
    out["congruence battery sample"] = b_congruence_check(4, 2, I, 3, 2)[0]
    pkg = eigen_package(level_space_np(2, 5, 3), 3, 20)
    e = pkg.projector.matrix
    mod = 3**20
    U = zp_matrix(pkg.U, 3, 20)
    out["projector idempotent"] = _reduce(e * e, mod) == e
    out["projector commutes with U"] = _reduce(e * U - U * e, mod) == _reduce(e * 0, mod)
    out["ordinary rank"] = pkg.ordinary_rank == 3
    rec = {"x": padic(3, Fraction(7, 5), 20).to_json()}
    cache = Cache(c.cfg.cache_dir)
    out["cache roundtrip"] = cache.load(_selftest_key()) in (None, rec) and _roundtrip_ok(cache, rec)
    return out


def _selftest_key():
    return {"cmd": "self-test-roundtrip"}


def _roundtrip_ok(cache: Cache, rec) -> bool:
    cache.store(_selftest_key(), rec)
    return canonical(cache.load(_selftest_key())) == canonical(rec)


if __name__ == "__main__":
    main()
