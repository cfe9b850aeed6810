"""
Configuration management for the panelspec CLI
"""

import os
import json
from pathlib import Path
from typing import Dict, Any, Optional

from ..logger import get_logger
from ..core.errors import ConfigError

logger = get_logger("panelspec.cli.config")

# Default config path
CONFIG_DIR = Path(os.environ.get("PANELSPEC_HOME", Path.home() / ".panelspec"))
CONFIG_FILE = CONFIG_DIR / "config.json"
ENV_PREFIX = "PANELSPEC_"

# Settings read through get_env_var, as stored in the config file
CONFIG_KEYS = (
    "boot_reps", "boot_law", "level", "seed", "transform", "spline_order", "interaction_order",
    "penalty_c", "max_failure_share", "workers", "log_level", "log_dir",
    "psid_url", "psid_path", "psid_sha256",
)


def ensure_config_dir():
    """Ensure the config directory exists"""
    CONFIG_DIR.mkdir(parents=True, exist_ok=True)


def load_config() -> Dict[str, Any]:
    """Load user-level defaults from the config file"""
    if not CONFIG_FILE.exists():
        return {}

    try:
        with open(CONFIG_FILE, "r", encoding="utf-8") as f:
            return json.load(f)
    except Exception as e:
        logger.warning(f"Error loading config {CONFIG_FILE}: {e}")
        return {}


def save_config(config: Dict[str, Any]):
    """Save user-level defaults to the config file"""
    ensure_config_dir()

    try:
        with open(CONFIG_FILE, "w", encoding="utf-8") as f:
            json.dump(config, f, indent=2, sort_keys=True)
    except Exception as e:
        logger.error(f"Error saving config: {e}")


def get_config_value(key: str, default: Any = None) -> Any:
    """
    Get a configuration value, checking environment variables first,
    then the config file, then the default
    """
    env_key = f"{ENV_PREFIX}{key.upper()}"
    if env_key in os.environ:
        return os.environ[env_key]

    config = load_config()
    if key in config:
        return config[key]

    return default


def set_config_value(key: str, value: Any):
    """Set a configuration value in the config file"""
    if key not in CONFIG_KEYS:
        raise ConfigError(f"Unknown setting '{key}'; expected one of {', '.join(CONFIG_KEYS)}")
    config = load_config()
    config[key] = value
    save_config(config)


def get_all_config() -> Dict[str, Any]:
    """Get all configuration values, merging environment variables and config file"""
    config = load_config()

    for key, value in os.environ.items():
        if key.startswith(ENV_PREFIX):
            config[key[len(ENV_PREFIX):].lower()] = value

    return config


def load_run_file(path: Optional[str]) -> Dict[str, Any]:
    """
    Load a JSON run configuration file

    Args:
        path: Path to the JSON file, or None for no file

    Returns:
        Parsed mapping (empty when no path is given)
    """
    if not path:
        return {}

    file_path = Path(path)
    if not file_path.exists():
        raise ConfigError(f"Config file not found: {path}")

    try:
        with open(file_path, "r", encoding="utf-8") as f:
            values = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e

    if not isinstance(values, dict):
        raise ConfigError(f"Config file {path} must contain a JSON object")
    return values


def merge_overrides(file_values: Dict[str, Any], flags: Dict[str, Any]) -> Dict[str, Any]:
    """Overlay CLI flag values on file values; flags win, unset flags are ignored"""
    merged = dict(file_values)
    for key, value in flags.items():
        if value is None:
            continue
        if isinstance(value, (tuple, list)) and len(value) == 0:
            continue
        merged[key] = list(value) if isinstance(value, tuple) else value
    return merged
