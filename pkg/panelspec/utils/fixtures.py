"""
Wage panel fixture: download and normalization to long format

The extract covers 595 individuals observed over 7 consecutive years and
ships without explicit identifiers, so rows are assumed individual-major.
"""

import io
import os
import zipfile
from typing import Optional

import pandas as pd

from .networking import download_file, sha256_file
from ..config import PSID_SHA256, PSID_URL
from ..core.errors import MissingColumn, PanelSpecError
from ..logger import get_logger

logger = get_logger("panelspec.utils.fixtures")

PSID_PERIODS = 7
PSID_COLUMNS = ("LWAGE", "WKS", "EXP", "OCC", "IND", "SOUTH", "SMSA", "MS", "UNION")


def fetch_psid(dest: str, url: str = PSID_URL, sha256: Optional[str] = None) -> str:
    """
    Download the wage panel and record its digest next to it

    Returns:
        Path of the downloaded file
    """
    expected = sha256 if sha256 is not None else PSID_SHA256
    digest = download_file(url, dest, expected_sha256=expected or None)
    with open(dest + ".sha256", "w", encoding="utf-8") as fh:
        fh.write(f"{digest}  {os.path.basename(dest)}\n")
    if not expected:
        logger.warning(
            "No pinned checksum configured; set PANELSPEC_PSID_SHA256 to the digest above "
            "to verify future downloads"
        )
    return dest


def verify_psid(path: str) -> Optional[bool]:
    """Compare a fixture against its recorded .sha256 file; None when there is no record"""
    record = path + ".sha256"
    if not os.path.exists(record):
        return None
    with open(record, encoding="utf-8") as fh:
        expected = fh.read().split()[0]
    return sha256_file(path) == expected


def _read_table(raw: bytes, name: str) -> pd.DataFrame:
    lowered = name.lower()
    if lowered.endswith(".csv"):
        return pd.read_csv(io.BytesIO(raw))
    return pd.read_csv(io.BytesIO(raw), sep=r"\s+")


def prepare_psid_frame(path: str) -> pd.DataFrame:
    """
    Load the wage panel as a long-format frame with ID and TIME columns

    Accepts CSV, whitespace-delimited text, or a zip archive holding one of them.
    """
    with open(path, "rb") as fh:
        raw = fh.read()

    if zipfile.is_zipfile(io.BytesIO(raw)):
        with zipfile.ZipFile(io.BytesIO(raw)) as archive:
            members = [m for m in archive.namelist() if m.lower().endswith((".csv", ".txt", ".dat"))]
            if not members:
                raise PanelSpecError(f"{path}: archive holds no csv/txt/dat table")
            frame = _read_table(archive.read(members[0]), members[0])
    else:
        frame = _read_table(raw, path)

    frame.columns = [str(c).strip().upper() for c in frame.columns]
    for col in PSID_COLUMNS:
        if col not in frame.columns:
            raise MissingColumn(col)

    if len(frame) % PSID_PERIODS:
        raise PanelSpecError(f"{path}: {len(frame)} rows is not a multiple of {PSID_PERIODS} periods")
    if "ID" not in frame.columns:
        frame.insert(0, "ID", frame.index // PSID_PERIODS + 1)
    if "TIME" not in frame.columns:
        frame.insert(1, "TIME", frame.index % PSID_PERIODS + 1)

    logger.info(f"Wage panel: {frame['ID'].nunique()} individuals, {PSID_PERIODS} periods")
    return frame
