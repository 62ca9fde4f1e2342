"""
Runtime configuration read from the environment (and a local ``.env`` file).
"""

from __future__ import annotations

import os
from typing import Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError


ENV_PREFIX = "KMSLAB_"
LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    tol: float = Field(default=1e-12, gt=0, allow_inf_nan=False)
    residual_tol: float = Field(default=1e-9, gt=0, allow_inf_nan=False)
    depth: int = Field(default=50, ge=1)
    max_iter: int = Field(default=100_000, ge=1)
    arpack_threshold: int = Field(default=500, ge=1)
    m_max: int = Field(default=8, ge=1)
    l_max: int = Field(default=8, ge=1)
    recurrence_terms: int = Field(default=400, ge=1)
    recurrence_bound: float = Field(default=100.0, gt=0, allow_inf_nan=False)
    log_level: str = "WARNING"

    @field_validator("log_level", mode="before")
    @classmethod
    def _known_level(cls, value: object) -> str:
        level = str(value).strip().upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"unknown log level {value!r}; expected one of {', '.join(LOG_LEVELS)}")
        return level

    def with_overrides(self, **changes: object) -> "Settings":
        clean = {key: value for key, value in changes.items() if value is not None}
        return _validated({**self.model_dump(), **clean})


def _validated(values: Dict[str, object]) -> Settings:
    try:
        return Settings.model_validate(values)
    except ValidationError as exc:
        problems = []
        for error in exc.errors():
            name = str(error["loc"][0]) if error["loc"] else "settings"
            problems.append(f"{ENV_PREFIX}{name.upper()}: {error['msg']} (got {error.get('input')!r})")
        raise ConfigError("invalid configuration: " + "; ".join(problems)) from exc


def load_settings(env_file: Optional[str] = None) -> Settings:
    """Merge ``.env`` into the process environment and build ``Settings``."""
    load_dotenv(env_file)
    raw: Dict[str, object] = {}
    for name in Settings.model_fields:
        value = os.getenv(f"{ENV_PREFIX}{name.upper()}")
        if value is not None and value.strip() != "":
            raw[name] = value.strip()
    return _validated(raw)


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def reset_settings() -> None:
    """Forget cached settings (tests change the environment)."""
    global _settings
    _settings = None
