"""
Networking utilities for panelspec
"""

import hashlib
import os
from typing import Optional

import requests

from ..core.errors import ChecksumMismatch, PanelSpecError
from ..logger import get_logger

logger = get_logger("panelspec.utils.networking")

CHUNK_SIZE = 1 << 16


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(CHUNK_SIZE), b""):
            digest.update(block)
    return digest.hexdigest()


def download_file(url: str, dest: str, expected_sha256: Optional[str] = None, timeout: float = 60.0) -> str:
    """
    Stream a URL to disk and verify its digest

    Args:
        url: Source URL
        dest: Destination path (parent directories are created)
        expected_sha256: Hex digest to enforce; when empty the digest is only logged
        timeout: Request timeout in seconds

    Returns:
        The SHA-256 digest of the downloaded file
    """
    parent = os.path.dirname(os.path.abspath(dest))
    os.makedirs(parent, exist_ok=True)
    partial = dest + ".part"

    try:
        with requests.get(url, stream=True, timeout=timeout) as response:
            response.raise_for_status()
            with open(partial, "wb") as fh:
                for block in response.iter_content(chunk_size=CHUNK_SIZE):
                    fh.write(block)
    except requests.RequestException as e:
        if os.path.exists(partial):
            os.remove(partial)
        raise PanelSpecError(f"Download of {url} failed: {e}") from e

    digest = sha256_file(partial)
    if expected_sha256 and digest.lower() != expected_sha256.lower():
        os.remove(partial)
        raise ChecksumMismatch(f"{url}: expected sha256 {expected_sha256}, got {digest}")

    os.replace(partial, dest)
    logger.info(f"Downloaded {url} to {dest} (sha256 {digest})")
    return digest
