import os
import logging
from typing import Any, Type

from dotenv import load_dotenv

# Pick up PANELSPEC_* settings from a local .env when present
load_dotenv()

ENV_PREFIX = "PANELSPEC_"


def get_env_var(key: str, *, default: Any = None, var_type: Type = str) -> Any:
    """Get environment variable with type conversion and validation.

    Args:
        key: Environment variable key
        default: Default value if not found
        var_type: Type to convert to (str, int, float, bool)

    Returns:
        Converted and validated value
    """
    value = os.environ.get(key)

    # If not found in environment, try the user config file
    if value is None:
        try:
            # Import here to avoid circular imports
            from .cli.config import get_config_value
            if key.startswith(ENV_PREFIX):
                config_key = key[len(ENV_PREFIX):].lower()
            else:
                config_key = key.lower()

            config_value = get_config_value(config_key)
            if config_value is not None:
                value = config_value
        except (ImportError, ModuleNotFoundError):
            pass

    if value is None:
        return default

    try:
        if var_type == bool:
            return str(value).lower() in ('true', '1', 'yes', 'on')
        return var_type(value)
    except (ValueError, TypeError):
        logging.warning(f"Invalid value for {key}, using default: {default}")
        return default


# Inference defaults
DEFAULT_BOOT_REPS = get_env_var("PANELSPEC_BOOT_REPS", default=399, var_type=int)
DEFAULT_BOOT_LAW = get_env_var("PANELSPEC_BOOT_LAW", default="rademacher")
DEFAULT_NOMINAL_LEVEL = get_env_var("PANELSPEC_LEVEL", default=0.05, var_type=float)
DEFAULT_SEED = get_env_var("PANELSPEC_SEED", default=20190601, var_type=int)

# Series construction
DEFAULT_TRANSFORM = get_env_var("PANELSPEC_TRANSFORM", default="within")
DEFAULT_SPLINE_ORDER = get_env_var("PANELSPEC_SPLINE_ORDER", default=3, var_type=int)
DEFAULT_INTERACTION_ORDER = get_env_var(
    "PANELSPEC_INTERACTION_ORDER", default=2, var_type=int)

# Data-driven selection
DEFAULT_PENALTY_C = get_env_var("PANELSPEC_PENALTY_C", default=5.0, var_type=float)

# Numerical tolerances
RANK_TOLERANCE = 1e-8          # relative singular-value / residual-norm floor
OMEGA_TOLERANCE = 1e-10        # smallest/largest eigenvalue floor for Omega
ZERO_COLUMN_TOLERANCE = 1e-10  # transformed column norm relative to level norm
DEGENERATE_RESIDUAL_TOLERANCE = 1e-10

# Replicate failure handling
MAX_FAILURE_SHARE = get_env_var("PANELSPEC_MAX_FAILURE_SHARE", default=0.01, var_type=float)
BOOTSTRAP_CHUNK_SIZE = 64

# Parallelism (0 means resolve from the machine, see utils.system)
DEFAULT_WORKERS = get_env_var("PANELSPEC_WORKERS", default=0, var_type=int)

# Logging Configuration
LOG_LEVEL = get_env_var("PANELSPEC_LOG_LEVEL", default="INFO")
LOG_FILE_DIR = get_env_var("PANELSPEC_LOG_DIR", default="")

# Empirical fixture
PSID_URL = get_env_var(
    "PANELSPEC_PSID_URL",
    default=(
        "http://bcs.wiley.com/he-bcs/Books?action=resource&bcsId=4338"
        "&itemId=1118672321&resourceId=13452"
    ),
)
PSID_SHA256 = get_env_var("PANELSPEC_PSID_SHA256", default="")
PSID_PATH = get_env_var("PANELSPEC_PSID_PATH", default="")
