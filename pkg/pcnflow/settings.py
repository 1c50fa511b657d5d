"""
Settings - Runtime knobs read from the environment.
Supports .env files via python-dotenv.
"""

import os
from typing import Optional
from pathlib import Path
from dotenv import load_dotenv


DEFAULT_LOG_LEVEL = "WARNING"
DEFAULT_STEP_BUDGET = 100_000_000
DEFAULT_EVENT_BUDGET = 10_000_000
DEFAULT_MAX_WORKERS = 4

_TRUTHY = {"1", "true", "yes", "on"}


class SettingsError(ValueError):
    """Raised when an environment variable holds an unusable value."""
    pass


class Settings:
    """Retrieves pcnflow runtime settings from environment variables."""

    def __init__(self, env_file: Optional[str] = None):
        """
        Load an optional .env file into the process environment.

        Args:
            env_file: Path to .env file. If None, uses default .env in project root.
        """
        if env_file:
            env_path = Path(env_file)
        else:
            env_path = Path(__file__).parent.parent / ".env"

        if env_path.exists():
            load_dotenv(env_path)

    @staticmethod
    def get(key: str, default: Optional[str] = None) -> Optional[str]:
        """
        Retrieve a raw setting from environment variables.

        Args:
            key: The environment variable name
            default: Default value if not found

        Returns:
            The setting value or default
        """
        return os.getenv(key, default)

    @staticmethod
    def _get_int(key: str, default: int) -> int:
        raw = Settings.get(key)
        if raw is None or raw.strip() == "":
            return default
        try:
            value = int(raw)
        except ValueError:
            raise SettingsError(f"{key} must be an integer, got {raw!r}")
        if value <= 0:
            raise SettingsError(f"{key} must be positive, got {value}")
        return value

    @staticmethod
    def log_level() -> str:
        """Default log level, overridden by --log-level."""
        return Settings.get("PCNFLOW_LOG_LEVEL") or DEFAULT_LOG_LEVEL

    @staticmethod
    def step_budget() -> int:
        """Maximum number of locked-push/relabel operations per concurrent solve."""
        return Settings._get_int("PCNFLOW_STEP_BUDGET", DEFAULT_STEP_BUDGET)

    @staticmethod
    def event_budget() -> int:
        """Maximum number of delivered messages per simulation."""
        return Settings._get_int("PCNFLOW_EVENT_BUDGET", DEFAULT_EVENT_BUDGET)

    @staticmethod
    def max_workers() -> int:
        """Worker processes for parallel sweeps."""
        return Settings._get_int("PCNFLOW_MAX_WORKERS", DEFAULT_MAX_WORKERS)

    @staticmethod
    def check_invariants() -> bool:
        return (Settings.get("PCNFLOW_CHECK_INVARIANTS") or "").strip().lower() in _TRUTHY
