"""Service configuration: defaults, JSON config file, environment, flags.

Precedence, lowest to highest: built-in defaults, config file, environment
variables (BREACHDRILL_*), command-line flags. API keys are only ever read
from the environment; the config file names the variable, not the secret.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping, Optional

from .backends import (
    HttpCompletionBackend,
    HttpEmbeddingBackend,
    MockCompletionBackend,
    MockEmbeddingBackend,
)
from .engine import GameConfig


class ConfigError(Exception):
    pass


@dataclass
class BackendConfig:
    kind: str = "mock"  # mock | http
    endpoint: str = ""
    model: str = ""
    api_key_env: str = ""
    timeout: float = 30.0


@dataclass
class ServiceConfig:
    decks_dir: Optional[str] = None  # None -> bundled decks
    index_path: Optional[str] = None  # None -> empty index
    telemetry_dir: str = "telemetry"
    host: str = "127.0.0.1"
    port: int = 8000
    topology: str = "Centralized"
    embedding_dim: int = 1536
    completion: BackendConfig = field(default_factory=BackendConfig)
    embedding: BackendConfig = field(default_factory=BackendConfig)
    game: GameConfig = field(default_factory=GameConfig)


_ENV_PREFIX = "BREACHDRILL_"

_TOP_LEVEL_KEYS = {
    "decks_dir": str,
    "index_path": str,
    "telemetry_dir": str,
    "host": str,
    "port": int,
    "topology": str,
    "embedding_dim": int,
}

_GAME_KEYS = {f.name for f in fields(GameConfig)}
_BACKEND_KEYS = {f.name for f in fields(BackendConfig)}


def _apply_mapping(config: ServiceConfig, data: dict, source: str) -> None:
    for key, value in data.items():
        if key in _TOP_LEVEL_KEYS:
            setattr(config, key, _TOP_LEVEL_KEYS[key](value))
        elif key == "game":
            merged = {**config.game.to_dict(), **value}
            unknown = set(merged) - _GAME_KEYS
            if unknown:
                raise ConfigError(f"{source}: unknown game option(s) {sorted(unknown)}")
            config.game = GameConfig(**merged)
        elif key in ("completion", "embedding"):
            target: BackendConfig = getattr(config, key)
            unknown = set(value) - _BACKEND_KEYS
            if unknown:
                raise ConfigError(f"{source}: unknown {key} option(s) {sorted(unknown)}")
            for bkey, bval in value.items():
                setattr(target, bkey, type(getattr(target, bkey))(bval))
        else:
            raise ConfigError(f"{source}: unknown option {key!r}")


def _env_overrides(env: Mapping[str, str]) -> dict:
    data: dict = {}
    for key in _TOP_LEVEL_KEYS:
        value = env.get(_ENV_PREFIX + key.upper())
        if value is not None:
            data[key] = value
    for section in ("completion", "embedding"):
        section_data = {}
        for bkey in _BACKEND_KEYS:
            value = env.get(f"{_ENV_PREFIX}{section.upper()}_{bkey.upper()}")
            if value is not None:
                section_data[bkey] = value
        if section_data:
            data[section] = section_data
    game_data = {}
    for gkey in _GAME_KEYS:
        value = env.get(f"{_ENV_PREFIX}GAME_{gkey.upper()}")
        if value is not None:
            game_data[gkey] = int(value)
    if game_data:
        data["game"] = game_data
    return data


def load_config(
    config_file: Optional[str | Path] = None,
    env: Optional[Mapping[str, str]] = None,
    overrides: Optional[dict] = None,
) -> ServiceConfig:
    """Resolve the effective configuration (flags > env > file > defaults)."""
    config = ServiceConfig()
    if config_file is not None:
        path = Path(config_file)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        _apply_mapping(config, data, str(path))
    _apply_mapping(config, _env_overrides(env if env is not None else os.environ), "environment")
    if overrides:
        _apply_mapping(config, {k: v for k, v in overrides.items() if v is not None}, "flags")
    return config


def make_completion_backend(spec: BackendConfig):
    if spec.kind == "mock":
        return MockCompletionBackend()
    if spec.kind == "http":
        if not spec.endpoint:
            raise ConfigError("http completion backend needs an endpoint")
        return HttpCompletionBackend(
            endpoint=spec.endpoint,
            model=spec.model,
            api_key=os.environ.get(spec.api_key_env, "") if spec.api_key_env else "",
            timeout=spec.timeout,
        )
    raise ConfigError(f"unknown completion backend kind {spec.kind!r}")


def make_embedding_backend(spec: BackendConfig, dim: int):
    if spec.kind == "mock":
        return MockEmbeddingBackend(dim=dim)
    if spec.kind == "http":
        if not spec.endpoint:
            raise ConfigError("http embedding backend needs an endpoint")
        return HttpEmbeddingBackend(
            endpoint=spec.endpoint,
            model=spec.model,
            api_key=os.environ.get(spec.api_key_env, "") if spec.api_key_env else "",
            timeout=spec.timeout,
            dim=dim,
        )
    raise ConfigError(f"unknown embedding backend kind {spec.kind!r}")
