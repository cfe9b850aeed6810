"""
Balanced panel data model and the fixed-effect eliminating transformations
"""

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import DuplicateCell, MissingColumn, MissingValue, UnbalancedPanel, PanelSpecError
from ..logger import get_logger

logger = get_logger("panelspec.core.panel")

WITHIN = "within"
FIRST_DIFFERENCE = "first_difference"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PanelDataset:
    """Balanced long-format panel, individual-major and time-sorted"""
    ids: np.ndarray
    times: np.ndarray
    y: np.ndarray
    X: np.ndarray
    x_names: Tuple[str, ...]
    y_name: str = "y"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(np.asarray(self.y).ravel()))
        object.__setattr__(self, "x_names", tuple(self.x_names))

        n, T = len(self.ids), len(self.times)
        if n < 2 or T < 2:
            raise UnbalancedPanel(f"need at least 2 individuals and 2 periods, got n={n}, T={T}")
        if self.X.shape[1] < 1:
            raise PanelSpecError("at least one regressor is required")
        if self.X.shape[1] != len(self.x_names):
            raise PanelSpecError("x_names must name every regressor column")
        if self.y.shape[0] != n * T or self.X.shape[0] != n * T:
            raise UnbalancedPanel(f"expected {n * T} rows for n={n}, T={T}")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise MissingValue("outcome and regressors must be finite")

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def T(self) -> int:
        return len(self.times)

    @property
    def d_x(self) -> int:
        return self.X.shape[1]

    def column(self, name: str) -> np.ndarray:
        """Level values of one regressor, individual-major"""
        try:
            return self.X[:, self.x_names.index(name)]
        except ValueError:
            raise MissingColumn(name) from None


def within_demean(A: np.ndarray, n: int, T: int) -> np.ndarray:
    """Subtract each individual's time mean from every period (rows n*T, individual-major)"""
    A = np.asarray(A, dtype=np.float64)
    blocks = A.reshape((n, T) + A.shape[1:])
    return (blocks - blocks.mean(axis=1, keepdims=True)).reshape(A.shape)


def first_differences(A: np.ndarray, n: int, T: int) -> np.ndarray:
    """A_it - A_i,t-1 for t = 2..T, returned with n*(T-1) rows"""
    A = np.asarray(A, dtype=np.float64)
    blocks = A.reshape((n, T) + A.shape[1:])
    diffs = blocks[:, 1:] - blocks[:, :-1]
    return diffs.reshape((n * (T - 1),) + A.shape[1:])


_TRANSFORM_FUNCS = {WITHIN: within_demean, FIRST_DIFFERENCE: first_differences}


@dataclass(frozen=True)
class TransformedPanel:
    """Transformed outcome/regressors with the level panel kept for basis construction"""
    source: PanelDataset
    transform_tag: str
    yhat: np.ndarray = field(repr=False)
    Xhat: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def T(self) -> int:
        return self.source.T

    @property
    def Tprime(self) -> int:
        return self.T if self.transform_tag == WITHIN else self.T - 1

    @property
    def nobs(self) -> int:
        return self.n * self.Tprime

    @property
    def X_level(self) -> np.ndarray:
        return self.source.X

    def transform(self, A: np.ndarray) -> np.ndarray:
        """Apply this panel's transformation to any level array with n*T rows"""
        return _TRANSFORM_FUNCS[self.transform_tag](A, self.n, self.T)

    def blocks(self, A: np.ndarray) -> np.ndarray:
        """Reshape a transformed array (n*T' rows) into per-individual blocks (n, T', ...)"""
        A = np.asarray(A)
        return A.reshape((self.n, self.Tprime) + A.shape[1:])


def _build_transformed(p: PanelDataset, tag: str) -> TransformedPanel:
    func = _TRANSFORM_FUNCS[tag]
    return TransformedPanel(
        source=p,
        transform_tag=tag,
        yhat=_frozen(func(p.y, p.n, p.T)),
        Xhat=_frozen(func(p.X, p.n, p.T)),
    )


def within_transform(p: PanelDataset) -> TransformedPanel:
    return _build_transformed(p, WITHIN)


def first_difference(p: PanelDataset) -> TransformedPanel:
    return _build_transformed(p, FIRST_DIFFERENCE)


def transform_panel(p: PanelDataset, tag: str) -> TransformedPanel:
    """Dispatch on a transform name ("within", "fd" or "first_difference")"""
    if tag in ("fd", FIRST_DIFFERENCE):
        return first_difference(p)
    if tag == WITHIN:
        return within_transform(p)
    raise PanelSpecError(f"Unknown transform '{tag}', expected within or fd")


def pooled_design(p: PanelDataset) -> Tuple[np.ndarray, np.ndarray]:
    """Untransformed stacked outcome and regressors with a leading constant"""
    return np.asarray(p.y), np.column_stack([np.ones(p.n * p.T), p.X])


def load_panel(
    rows: Union[pd.DataFrame, Iterable[Mapping]],
    id_col: str,
    time_col: str,
    y_col: str,
    x_cols: Sequence[str],
) -> PanelDataset:
    """
    Build a validated PanelDataset from long-format records

    Args:
        rows: DataFrame or iterable of dict-like records
        id_col: Individual identifier column
        time_col: Period column
        y_col: Outcome column
        x_cols: Regressor columns, in the order they are stored

    Returns:
        Individual-major, time-sorted balanced panel
    """
    df = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    x_cols = list(x_cols)

    for col in [id_col, time_col, y_col] + x_cols:
        if col not in df.columns:
            raise MissingColumn(col)

    df = df[[id_col, time_col, y_col] + x_cols].copy()
    if df[[id_col, time_col]].isna().any().any():
        raise MissingValue(f"missing labels in '{id_col}' or '{time_col}'")

    for col in [y_col] + x_cols:
        values = pd.to_numeric(df[col], errors="coerce")
        if values.isna().any():
            bad = int(values.isna().sum())
            raise MissingValue(f"column '{col}' has {bad} missing or non-numeric values")
        df[col] = values.astype(np.float64)

    duplicated = df.duplicated(subset=[id_col, time_col])
    if duplicated.any():
        first = df.loc[duplicated, [id_col, time_col]].iloc[0]
        raise DuplicateCell(f"duplicate cell for id={first[id_col]!r}, time={first[time_col]!r}")

    if not pd.api.types.is_numeric_dtype(df[time_col]):
        logger.warning(f"Time column '{time_col}' is not numeric; sorting periods lexicographically")
        df[time_col] = df[time_col].astype(str)

    times = np.sort(df[time_col].unique())
    counts = df.groupby(id_col, sort=False)[time_col].size()
    unbalanced = counts[counts != len(times)]
    if len(unbalanced) > 0:
        who = unbalanced.index[0]
        raise UnbalancedPanel(
            f"individual {who!r} has {unbalanced.iloc[0]} periods, expected {len(times)}"
        )

    df = df.sort_values([id_col, time_col], kind="mergesort")
    ids = df[id_col].drop_duplicates().to_numpy()

    logger.debug(f"Loaded panel with n={len(ids)}, T={len(times)}, d_x={len(x_cols)}")
    return PanelDataset(
        ids=ids,
        times=times,
        y=df[y_col].to_numpy(),
        X=df[x_cols].to_numpy(),
        x_names=tuple(x_cols),
        y_name=y_col,
    )


def load_panel_csv(
    path: str,
    id_col: str,
    time_col: str,
    y_col: str,
    x_cols: Sequence[str],
    columns: Optional[Sequence[str]] = None,
) -> PanelDataset:
    """Read a UTF-8 long-format CSV and validate it as a balanced panel"""
    df = pd.read_csv(path, encoding="utf-8", usecols=columns)
    return load_panel(df, id_col, time_col, y_col, x_cols)
