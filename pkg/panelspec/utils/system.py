"""
System utilities for panelspec
"""

import os
import platform
from typing import Any, Dict, Optional

import psutil

from ..config import DEFAULT_WORKERS
from ..logger import get_logger

# Get logger
logger = get_logger("panelspec.utils.system")


def get_worker_count(requested: Optional[int] = None) -> int:
    """
    Resolve a thread count for replicate loops

    Args:
        requested: Explicit count; None or 0 falls back to PANELSPEC_WORKERS,
            then to the number of physical cores

    Returns:
        Worker count, at least 1
    """
    if requested is None or requested <= 0:
        requested = DEFAULT_WORKERS
    if requested is None or requested <= 0:
        requested = psutil.cpu_count(logical=False) or psutil.cpu_count() or os.cpu_count() or 1
    return max(int(requested), 1)


def get_system_memory() -> Dict[str, int]:
    """Total and available system memory in MB"""
    vm = psutil.virtual_memory()
    return {
        "total_mb": vm.total // (1024 * 1024),
        "available_mb": vm.available // (1024 * 1024),
    }


def get_system_resources() -> Dict[str, Any]:
    """Get system resource information"""
    memory = get_system_memory()
    return {
        "platform": platform.platform(),
        "python": platform.python_version(),
        "cpu_cores": psutil.cpu_count(logical=False),
        "cpu_threads": psutil.cpu_count(logical=True),
        "ram_total_mb": memory["total_mb"],
        "ram_available_mb": memory["available_mb"],
        "default_workers": get_worker_count(),
    }
