"""Deployment settings: TOML file, overridden by VL_* environment variables."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, fields
from typing import Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .embedder import EmbedderConfig
from .errors import FileUnreadable
from .recommender import WalkParams

DEFAULT_ENDPOINT = "http://127.0.0.1:8100"


@dataclass
class Settings:
    dimension: int = 512
    provider: str = "mock"  # "mock" | "remote"
    embed_endpoint: str | None = None
    embed_timeout_ms: int = 10_000
    mock_seed: int = 0
    pool_size: int = 16
    context_alpha: float = 0.7
    demote_weight: float = -1.1
    expansion_weight: float = 0.4
    walk_defaults: str = "L=3,C=3,k=20"
    templates_path: str | None = None
    bind: str = "127.0.0.1:8100"
    cors_origin: str | None = None
    console_dir: str | None = None

    def embedder_config(self) -> EmbedderConfig:
        return EmbedderConfig(
            provider=self.provider,
            endpoint=self.embed_endpoint,
            timeout_s=self.embed_timeout_ms / 1000.0,
            dimension=self.dimension,
            mock_seed=self.mock_seed,
            pool_size=self.pool_size,
        )

    def walk_params(self) -> WalkParams:
        return parse_walk_defaults(self.walk_defaults)

    def bind_address(self) -> tuple[str, int]:
        host, _, port = self.bind.rpartition(":")
        return host or "127.0.0.1", int(port)


def parse_walk_defaults(text: str) -> WalkParams:
    """Parse "L=3,C=3,k=20" into default walk parameters."""
    values = {"L": 3, "C": 3, "k": 20}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in values:
            raise ValueError(f"unknown walk default {key!r} in {text!r}")
        values[key] = int(value)
    return WalkParams(layers=values["L"], children=values["C"], neighbours=values["k"])


_ENV_MAP = {
    "VL_EMBED_DIM": ("dimension", int),
    "VL_EMBED_PROVIDER": ("provider", str),
    "VL_EMBED_ENDPOINT": ("embed_endpoint", str),
    "VL_EMBED_TIMEOUT_MS": ("embed_timeout_ms", int),
    "VL_MOCK_SEED": ("mock_seed", int),
    "VL_EMBED_POOL_SIZE": ("pool_size", int),
    "VL_CONTEXT_ALPHA": ("context_alpha", float),
    "VL_DEMOTE_WEIGHT": ("demote_weight", float),
    "VL_EXPANSION_WEIGHT": ("expansion_weight", float),
    "VL_WALK_DEFAULTS": ("walk_defaults", str),
    "VL_TEMPLATES": ("templates_path", str),
    "VL_BIND": ("bind", str),
    "VL_CORS_ORIGIN": ("cors_origin", str),
    "VL_CONSOLE_DIR": ("console_dir", str),
}


def load_settings(
    config_path: str | None = None, env: Mapping[str, str] | None = None
) -> Settings:
    env = os.environ if env is None else env
    settings = Settings()
    if config_path is not None:
        try:
            with open(config_path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise FileUnreadable(f"cannot read config {config_path!r}: {exc}") from exc
        known = {f.name: f for f in fields(Settings)}
        for key, value in raw.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r} in {config_path!r}")
            setattr(settings, key, value)
    for var, (attr, cast) in _ENV_MAP.items():
        if var in env and env[var] != "":
            setattr(settings, attr, cast(env[var]))
    return settings
