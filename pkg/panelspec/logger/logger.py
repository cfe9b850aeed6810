"""
Run tracking for panelspec: status, stage timings and replicate failures
"""

import logging
import os
import time
from contextlib import contextmanager
from threading import Lock
from typing import Dict, Iterator, List, Tuple
from . import get_logger, LOG_FORMAT

_run_status = "idle"
_stage_timings: Dict[str, float] = {}
_failures: List[Tuple[str, int, str]] = []
_lock = Lock()

# Create main logger
logger = get_logger("panelspec")


def set_run_status(status: str) -> None:
    """
    Update the run status

    Args:
        status: New status (e.g., "idle", "running", "completed", "error")
    """
    global _run_status
    _run_status = status.lower()
    logger.debug(f"Run status changed to: {status}")


def get_run_status() -> str:
    return _run_status


def log_stage(name: str, seconds: float) -> None:
    """
    Record how long a pipeline stage took

    Args:
        name: Stage name (e.g., "load", "design", "bootstrap")
        seconds: Wall-clock duration in seconds
    """
    with _lock:
        _stage_timings[name] = _stage_timings.get(name, 0.0) + seconds
    logger.debug(f"Stage {name} finished in {seconds:.3f} seconds")


@contextmanager
def timed_stage(name: str) -> Iterator[None]:
    """Context manager that logs the duration of the enclosed block as a stage"""
    start = time.perf_counter()
    try:
        yield
    finally:
        log_stage(name, time.perf_counter() - start)


def get_stage_timings() -> Dict[str, float]:
    with _lock:
        return dict(_stage_timings)


def log_replicate_failure(kind: str, index: int, reason: str) -> None:
    """
    Record a failed bootstrap or Monte Carlo replicate

    Args:
        kind: "bootstrap" or "monte_carlo"
        index: Replicate index
        reason: Short description of the failure
    """
    with _lock:
        _failures.append((kind, index, reason))
    logger.warning(f"{kind} replicate {index} failed: {reason}")


def get_failure_count(kind: str = None) -> int:
    with _lock:
        if kind is None:
            return len(_failures)
        return sum(1 for k, _, _ in _failures if k == kind)


def reset_run_tracking() -> None:
    """Clear status, timings and failures (used between CLI runs and in tests)"""
    global _run_status
    with _lock:
        _stage_timings.clear()
        _failures.clear()
    _run_status = "idle"


def configure_file_logging(log_dir: str = "logs") -> None:
    """
    Configure file-based logging in addition to console logging

    Args:
        log_dir: Directory to store log files
    """
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    file_handler = logging.FileHandler(os.path.join(log_dir, "panelspec.log"))
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))

    logger.addHandler(file_handler)

    logger.info(f"File logging configured in directory: {log_dir}")
