"""Experiment configuration: dataclasses, YAML round-trip, memory factory.

A configuration fully determines an experiment, including every random
stream, so equal configs reproduce byte-identical metrics. The canonical
JSON serialization is hashed and stamped into every output file header.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, asdict

import yaml

from .catch import CatchConfig
from .laplace import padded_tau_grid
from .memory import ExpDecaySet, FifoBuffer, SithMemory, WorkingMemory, derive_decay_rates
from .qnet import TrainConfig

__all__ = [
    "MemoryConfig",
    "ExperimentConfig",
    "build_memory",
    "slice_tau_centers",
    "load_config",
    "dump_config",
    "config_hash",
]

MEMORY_KINDS = ("sith", "buffer", "expdecay")
SCHEMA_VERSION = 1


@dataclass
class MemoryConfig:
    kind: str = "sith"
    n_slices: int = 5
    tau0: float = 1.0 / 30.0
    c: float = 0.1
    k: int = 4
    slice_stride: int = 8
    alpha: float = 1.0
    clamp_negative: bool = False

    def validate(self) -> None:
        if self.kind not in MEMORY_KINDS:
            raise ValueError(f"memory kind must be one of {MEMORY_KINDS}, got {self.kind!r}")
        if self.n_slices < 1:
            raise ValueError(f"n_slices must be >= 1, got {self.n_slices}")
        if self.kind != "buffer":
            if self.tau0 <= 0 or self.c <= 0 or self.k < 1 or self.slice_stride < 1:
                raise ValueError("tau0, c, k and slice_stride must be positive")
            if self.alpha <= 0:
                raise ValueError(f"alpha must be positive, got {self.alpha}")


def slice_tau_centers(mem: MemoryConfig):
    """tau* centers of the slice ladder: tau0 * (1+c)^(stride*j)."""
    return [mem.tau0 * (1.0 + mem.c) ** (mem.slice_stride * j) for j in range(mem.n_slices)]


def build_memory(mem: MemoryConfig, n_features: int) -> WorkingMemory:
    mem.validate()
    if mem.kind == "buffer":
        return FifoBuffer(mem.n_slices, n_features)
    if mem.kind == "expdecay":
        rates = derive_decay_rates(slice_tau_centers(mem))
        return ExpDecaySet(rates, n_features)
    grid = padded_tau_grid(
        mem.tau0, mem.c, mem.k,
        [mem.slice_stride * j for j in range(mem.n_slices)],
    )
    return SithMemory(
        grid, n_features, alpha=mem.alpha, clamp_negative=mem.clamp_negative
    )


@dataclass
class ExperimentConfig:
    label: str = "experiment"
    seed: int = 1
    runs: int = 5
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    env: CatchConfig = field(default_factory=CatchConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> None:
        if not self.label:
            raise ValueError("label must be non-empty")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        self.memory.validate()
        self.env.validate()
        self.train.validate()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        parts = {}
        for name, sub_cls in (("memory", MemoryConfig), ("env", CatchConfig), ("train", TrainConfig)):
            sub = data.pop(name, {}) or {}
            known = {f.name for f in fields(sub_cls)}
            unknown = set(sub) - known
            if unknown:
                raise ValueError(f"unknown {name} config keys: {sorted(unknown)}")
            parts[name] = sub_cls(**sub)
        known = {f.name for f in fields(cls)} - {"memory", "env", "train"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data, **parts)
        cfg.validate()
        return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return ExperimentConfig.from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical YAML snapshot (stable key order)."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True, default_flow_style=False)


def config_hash(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
