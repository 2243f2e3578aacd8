"""Content-addressed JSON cache with checksums."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path


class CacheCorruption(IOError):
    pass


def canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode()


def digest(obj) -> str:
    return hashlib.sha256(canonical(obj)).hexdigest()


class Cache:
    """key -> JSON record; files are written atomically and checksummed."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def store(self, keyobj, record) -> str:
        key = digest(keyobj)
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        body = {"key": keyobj, "record": record, "sha256": digest(record)}
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_bytes(canonical(body))
        os.replace(tmp, path)
        return key

    def load(self, keyobj):
        path = self._path(digest(keyobj))
        if not path.exists():
            self.misses += 1
            return None
        try:
            body = json.loads(path.read_bytes())
        except ValueError as exc:
            raise CacheCorruption(f"{path}: unreadable ({exc})") from None
        if body.get("sha256") != digest(body.get("record")):
            raise CacheCorruption(f"{path}: checksum mismatch")
        self.hits += 1
        return body["record"]

    def get_or_compute(self, keyobj, fn):
        rec = self.load(keyobj)
        if rec is None:
            rec = fn()
            self.store(keyobj, rec)
        return rec


def roundtrip(cache: Cache, keyobj, record):
    cache.store(keyobj, record)
    return cache.load(keyobj)
