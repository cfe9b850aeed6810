"""
Logging utilities for panelspec
"""

import logging
import os
import sys
from colorama import Fore, Style

# Cache for loggers to avoid creating multiple instances
_loggers = {}

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class ColoredFormatter(logging.Formatter):
    FORMATS = {
        logging.DEBUG: f'{Fore.CYAN}{LOG_FORMAT}{Style.RESET_ALL}',
        logging.INFO: f'{Fore.GREEN}{LOG_FORMAT}{Style.RESET_ALL}',
        logging.WARNING: f'{Fore.YELLOW}{LOG_FORMAT}{Style.RESET_ALL}',
        logging.ERROR: f'{Fore.RED}{LOG_FORMAT}{Style.RESET_ALL}',
        logging.CRITICAL: f'{Fore.RED}{Style.BRIGHT}{LOG_FORMAT}{Style.RESET_ALL}'
    }

    def format(self, record):
        log_format = self.FORMATS.get(record.levelno, LOG_FORMAT)
        formatter = logging.Formatter(log_format)
        return formatter.format(record)


def _resolve_level() -> int:
    name = os.environ.get("PANELSPEC_LOG_LEVEL", "INFO").upper()
    return getattr(logging, name, logging.INFO)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger with the given name

    Args:
        name: Logger name, typically using dot notation (e.g., "panelspec.core.basis")

    Returns:
        Configured logger instance
    """
    if name in _loggers:
        return _loggers[name]

    logger = logging.getLogger(name)

    # Only the package logger owns a handler; module loggers propagate to it.
    # Records go to stderr so JSON reports on stdout stay parseable.
    package_logger = logging.getLogger(name.split(".")[0])
    if not package_logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(ColoredFormatter())
        package_logger.addHandler(handler)
        package_logger.setLevel(_resolve_level())

    _loggers[name] = logger

    return logger


def set_log_level(level: str) -> None:
    """Change the level of the package logger (module loggers inherit it)"""
    logging.getLogger("panelspec").setLevel(getattr(logging, level.upper(), logging.INFO))
