import json

import pytest
from click.testing import CliRunner

from trivzero.harness.cache import Cache, CacheCorruption, canonical, digest
from trivzero.harness.cli import main
from trivzero.harness.config import SessionConfig
from trivzero.padic import DomainError


def test_config_defaults_validate():
    cfg = SessionConfig().validate()
    assert cfg.p == 3 and cfg.k0 == 2
    back = SessionConfig.from_json(cfg.to_json())
    assert back == cfg


@pytest.mark.parametrize("bad", [{"N": 15}, {"N1": 2}, {"R": 3}, {"weights": [2, 5]}, {"bogus": 1}, {"schema": 9}])
def test_config_rejects(bad):
    d = SessionConfig().to_json()
    d.update(bad)
    with pytest.raises(DomainError):
        SessionConfig.from_json(d)


def test_shipped_config_loads():
    from pathlib import Path

    cfg = SessionConfig.load(Path(__file__).parent.parent / "configs" / "curve15a.json")
    assert cfg.curve == [1, 1, 1, -10, -10] and cfg.lambda_weights == [20, 56]


def test_cache_hit_skips_recomputation(tmp_path):
    cache = Cache(tmp_path)
    calls = []

    def work():
        calls.append(1)
        return {"v": [1, 2, "3/4"]}

    a = cache.get_or_compute({"k": 1}, work)
    b = cache.get_or_compute({"k": 1}, work)
    assert a == b and len(calls) == 1 and cache.hits == 1


def test_cache_detects_tampering(tmp_path):
    cache = Cache(tmp_path)
    cache.store({"k": 2}, {"v": 10})
    path = cache._path(digest({"k": 2}))
    path.write_bytes(path.read_bytes().replace(b'"v":10', b'"v":11'))
    with pytest.raises(CacheCorruption):
        cache.load({"k": 2})
    path.write_bytes(b"{not json")
    with pytest.raises(CacheCorruption):
        cache.load({"k": 2})


def test_canonical_is_order_independent():
    assert canonical({"a": 1, "b": 2}) == canonical({"b": 2, "a": 1})


def test_cli_self_test(tmp_path):
    r = CliRunner().invoke(main, ["--out", str(tmp_path / "o"), "--cache", str(tmp_path / "c"), "self-test"])
    assert r.exit_code == 0, r.output
    assert "FAIL" not in r.output
    rec = json.loads((tmp_path / "o" / "self-test.json").read_text())
    assert all(rec["checks"].values())
    prov = json.loads((tmp_path / "o" / "self-test.provenance.json").read_text())
    assert "sha256" in prov and prov["config"]["p"] == 3


def test_cli_kl_eval(tmp_path):
    cfg = SessionConfig().to_json()
    cfg["kl"] = {"p": 5, "eta": {"teichmuller_power": 2}, "k": 1, "eps": [1, 0]}
    path = tmp_path / "kl.json"
    path.write_text(json.dumps(cfg))
    r = CliRunner().invoke(main, ["--config", str(path), "--out", str(tmp_path / "o"), "kl-eval"])
    assert r.exit_code == 0, r.output
    rec = json.loads((tmp_path / "o" / "kl-eval.json").read_text())
    assert rec["agreement"] == "inf" or rec["agreement"] >= 13


def test_cli_structured_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema": 1, "N": 15}))
    r = CliRunner().invoke(main, ["--config", str(path), "self-test"])
    assert r.exit_code == 2
    err = json.loads(r.stderr.strip().splitlines()[-1])
    assert err["command"] == "config" and err["error"] == "DomainError"
