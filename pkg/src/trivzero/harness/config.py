"""Session configuration, read from one JSON file."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from math import gcd
from pathlib import Path

from ..characters import DirichletCharacter
from ..padic import DomainError

SCHEMA_VERSION = 1


@dataclass
class SessionConfig:
    p: int = 3
    N: int = 5
    N0: int = 1
    N1: int = 1
    R: int = 1
    N_ss: int = 1
    chi: dict | None = None  # character literal (modulus, order, generators)
    k0: int = 2
    weights: list = field(default_factory=lambda: [2, 8])
    lambda_weights: list = field(default_factory=lambda: [20, 56])
    level_upto: int = 8  # weights computed on the full level; larger ones use the tame route
    chain_weight: int | None = None
    precision: int = 25
    truncation: int = 30
    provider: str = "closed-form"
    curve: list | None = None
    cache_dir: str = ".trivzero-cache"
    out: str = "artifacts"
    kl: dict = field(default_factory=dict)  # kl-eval inputs: {"p", "eta", "k", "eps"}

    def character(self) -> DirichletCharacter | None:
        return None if self.chi is None else DirichletCharacter.from_literal(self.chi)

    def validate(self) -> "SessionConfig":
        p, N = self.p, self.N
        if self.N1 % self.N_ss or N % self.N1:
            raise DomainError("need N_ss | N1 | N")
        if gcd(self.R, N * p) != 1:
            raise DomainError("R must be coprime with N p")
        if gcd(N, p) != 1:
            raise DomainError("the tame level N must be prime to p")
        chi = self.character()
        if chi is not None and not chi.is_even:
            raise DomainError("chi must be even")
        step = 2 if p == 2 else p - 1
        for k in self.weights:
            if (k - self.k0) % step:
                raise DomainError(f"weight {k} is not congruent to k0 = {self.k0} mod {step}")
        return self

    def to_json(self) -> dict:
        d = asdict(self)
        d["schema"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SessionConfig":
        d = dict(d)
        ver = d.pop("schema", SCHEMA_VERSION)
        if ver != SCHEMA_VERSION:
            raise DomainError(f"config schema {ver} is not supported")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d).validate()

    @classmethod
    def load(cls, path: str | Path | None) -> "SessionConfig":
        if path is None:
            return cls().validate()
        with open(path) as fh:
            return cls.from_json(json.load(fh))
