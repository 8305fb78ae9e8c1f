"""Declarative TOML configuration for geometry, policies, episodes, arenas."""

from __future__ import annotations

import dataclasses
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .geometry import RobotGeometry
from .gridmap import ArenaSpec, Obstacle, default_arena_spec
from .metrics import ObstacleSector
from .policies import ControllerMapping, PolicyConfig
from .runner import EpisodeConfig

ENV_CONFIG = "FLIPPERBENCH_CONFIG"


@dataclass
class BenchConfig:
    geometry: RobotGeometry = field(default_factory=RobotGeometry)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    mapping: ControllerMapping = field(default_factory=ControllerMapping)
    arena: ArenaSpec = field(default_factory=default_arena_spec)
    arena_id: str = "default"

    def sectors(self) -> list:
        return [
            ObstacleSector(i + 1, s0, s1)
            for i, (s0, s1) in enumerate(self.arena.sectors)
        ]


def _build(cls, data: dict, what: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    converted = {}
    for k, v in data.items():
        converted[k] = tuple(v) if isinstance(v, list) else v
    try:
        return cls(**converted)
    except TypeError as e:
        raise ConfigError(f"bad {what} section: {e}") from e


def _arena_from(data: dict) -> ArenaSpec:
    obstacles = tuple(
        _build(Obstacle, ob, "obstacle") for ob in data.pop("obstacle", [])
    )
    sectors = tuple(tuple(s) for s in data.pop("sectors", []))
    if not obstacles and not sectors:
        return default_arena_spec(**data)
    return _build(ArenaSpec, {"obstacles": obstacles, "sectors": sectors, **data}, "arena")


def load_config(path=None) -> BenchConfig:
    """Load a TOML config; falls back to FLIPPERBENCH_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        return BenchConfig()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    with open(p, "rb") as f:
        data = tomllib.load(f)
    cfg = BenchConfig(
        geometry=_build(RobotGeometry, data.get("geometry", {}), "geometry"),
        policy=_policy_from(data.get("policy", {})),
        episode=_build(EpisodeConfig, data.get("episode", {}), "episode"),
        mapping=_build(ControllerMapping, data.get("mapping", {}), "mapping"),
        arena=_arena_from(dict(data.get("arena", {}))),
        arena_id=data.get("arena_id", "default"),
    )
    return cfg


def _policy_from(data: dict) -> PolicyConfig:
    data = dict(data)
    table = data.pop("mode_table", None)
    if table is not None:
        data["mode_table"] = {k: tuple(v) for k, v in table.items()}
    return _build(PolicyConfig, data, "policy")


def default_config_path() -> Path:
    return Path(__file__).parent / "data" / "default.toml"
