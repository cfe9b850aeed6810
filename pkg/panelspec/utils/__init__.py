"""
Utility functions for panelspec
"""

from .networking import download_file, sha256_file
from .system import get_system_resources, get_worker_count

__all__ = [
    # Networking utilities
    'download_file',
    'sha256_file',

    # System utilities
    'get_system_resources',
    'get_worker_count',
]
