"""Configuration classes and constants for the mission planner and CLI."""

import os
from dataclasses import dataclass
from typing import Optional

from dotenv import find_dotenv, load_dotenv


DEFAULT_MAX_HORIZON = 64
DEFAULT_TIMEOUT_MS = 60000


def _env_int(name: str) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got '{raw}'")


@dataclass
class PlannerConfig:
    """Search limits for a planning run."""
    max_horizon: int = DEFAULT_MAX_HORIZON
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    seed: int = 0  # tie-break shuffling; 0 keeps canonical order

    @classmethod
    def from_env(cls, **overrides):
        """Create configuration from environment variables with overrides.

        Reads ORTACPLUS_MAX_HORIZON, ORTACPLUS_TIMEOUT_MS and ORTACPLUS_SEED.
        Keyword overrides whose value is None are ignored.
        """
        load_dotenv(find_dotenv(usecwd=True))

        values = {
            "max_horizon": _env_int("ORTACPLUS_MAX_HORIZON"),
            "timeout_ms": _env_int("ORTACPLUS_TIMEOUT_MS"),
            "seed": _env_int("ORTACPLUS_SEED"),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        config = cls(**{k: v for k, v in values.items() if v is not None})
        config.validate()
        return config

    def validate(self) -> None:
        """Validate configuration."""
        if self.max_horizon <= 0:
            raise ValueError("max_horizon must be positive")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")


@dataclass
class CliSettings:
    """Presentation settings for the command line."""
    color: bool = True

    @classmethod
    def from_env(cls):
        load_dotenv(find_dotenv(usecwd=True))
        return cls(color=not os.getenv("ORTACPLUS_NO_COLOR"))
