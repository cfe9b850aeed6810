"""
CLI configuration helpers for panelspec
"""

from .config import load_config, save_config, get_config_value, load_run_file, merge_overrides

__all__ = [
    'load_config',
    'save_config',
    'get_config_value',
    'load_run_file',
    'merge_overrides',
]
