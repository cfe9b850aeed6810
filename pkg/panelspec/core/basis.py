"""
Series bases for the restricted model (W) and the test directions (Z)

Univariate expansions are power series or truncated-power splines evaluated on
level regressors rescaled to [0, 1]; multivariate terms are tensor products.
Every column carries a label so null and alternative designs can be compared
term by term.
"""

from dataclasses import dataclass, field, replace
from functools import reduce
from itertools import combinations, product
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg

from .errors import (
    DegreeTooSmall,
    EmptyTestSet,
    KnotOutOfRange,
    NestednessViolation,
    PanelSpecError,
)
from .panel import PanelDataset, TransformedPanel
from ..config import (
    DEFAULT_INTERACTION_ORDER,
    DEFAULT_SPLINE_ORDER,
    RANK_TOLERANCE,
    ZERO_COLUMN_TOLERANCE,
)
from ..logger import get_logger

logger = get_logger("panelspec.core.basis")

Role = Literal["linear", "nonparametric", "dummy"]

PSID_CONTINUOUS = ("WKS", "EXP")
PSID_DUMMIES = ("OCC", "IND", "SOUTH", "SMSA", "MS", "UNION")


class BasisSpec(BaseModel):
    """How each raw regressor enters a design"""
    model_config = ConfigDict(frozen=True)

    family: Literal["power", "spline"] = "power"
    a_n: int = Field(default=4, description="terms per univariate expansion, constant included")
    spline_order: int = DEFAULT_SPLINE_ORDER
    knots: Dict[str, List[float]] = Field(default_factory=dict)
    interaction_order: int = DEFAULT_INTERACTION_ORDER
    variable_roles: Dict[str, Role] = Field(default_factory=dict)
    degrees: Dict[str, int] = Field(default_factory=dict)

    @classmethod
    def from_roles(
        cls,
        linear: Sequence[str] = (),
        nonparametric: Sequence[str] = (),
        dummies: Sequence[str] = (),
        **kwargs,
    ) -> "BasisSpec":
        roles: Dict[str, Role] = {}
        roles.update({v: "linear" for v in linear})
        roles.update({v: "nonparametric" for v in nonparametric})
        roles.update({v: "dummy" for v in dummies})
        return cls(variable_roles=roles, **kwargs)

    def degree_for(self, variable: str) -> int:
        return self.degrees.get(variable, self.a_n)

    def with_a_n(self, a_n: int) -> "BasisSpec":
        return self.model_copy(update={"a_n": a_n})


@dataclass(frozen=True)
class BasisTerm:
    """One design column: a product of univariate factors (variable, term)"""
    factors: Tuple[Tuple[str, str], ...]

    @property
    def label(self) -> str:
        if not self.factors:
            return "1"
        return "*".join(f"{var}{term}" for var, term in self.factors)

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(var for var, _ in self.factors)


CONSTANT = BasisTerm(())


def quantile_knots(z: np.ndarray, n_knots: int) -> np.ndarray:
    """Equally spaced empirical quantiles of z, kept strictly inside its support"""
    if n_knots <= 0:
        return np.empty(0)
    z = np.asarray(z, dtype=np.float64)
    probs = np.arange(1, n_knots + 1) / (n_knots + 1)
    knots = np.unique(np.quantile(z, probs))
    lo, hi = z.min(), z.max()
    knots = knots[(knots > lo) & (knots < hi)]
    if len(knots) < n_knots:
        logger.warning(
            f"Only {len(knots)} distinct interior quantile knots available, {n_knots} requested"
        )
    return knots


def _check_knots(z: np.ndarray, knots: np.ndarray) -> None:
    if len(knots) == 0:
        return
    if np.any(np.diff(knots) <= 0):
        raise KnotOutOfRange(f"knots must be strictly increasing, got {knots.tolist()}")
    lo, hi = float(np.min(z)), float(np.max(z))
    if knots[0] <= lo or knots[-1] >= hi:
        raise KnotOutOfRange(f"knots {knots.tolist()} must lie inside ({lo:.6g}, {hi:.6g})")


def _univariate(
    z: np.ndarray,
    family: str,
    a_n: int,
    spline_order: int,
    knots: Optional[np.ndarray],
) -> Tuple[np.ndarray, List[str], np.ndarray]:
    if a_n < 2:
        raise DegreeTooSmall(f"a_n must be at least 2 (constant plus one term), got {a_n}")
    z = np.asarray(z, dtype=np.float64).ravel()

    if family == "power":
        degree, knots = a_n - 1, np.empty(0)
    elif family == "spline":
        degree = min(spline_order, a_n - 1)
        if knots is None:
            knots = quantile_knots(z, max(a_n - spline_order - 1, 0))
        knots = np.asarray(knots, dtype=np.float64)
        _check_knots(z, knots)
    else:
        raise PanelSpecError(f"Unknown basis family '{family}'")

    columns = [np.ones_like(z)]
    for _ in range(degree):
        columns.append(columns[-1] * z)
    labels = ["^0"] + [f"^{j}" for j in range(1, degree + 1)]

    for t in knots:
        shifted = np.maximum(z - t, 0.0)
        term = np.ones_like(z)
        for _ in range(spline_order):
            term = term * shifted
        columns.append(term)
        labels.append(f"(>{t:.6g})^{spline_order}")

    return np.column_stack(columns), labels, knots


def build_univariate(
    z: np.ndarray,
    spec: BasisSpec,
    *,
    knots: Optional[Sequence[float]] = None,
    degree: Optional[int] = None,
) -> np.ndarray:
    """
    Univariate expansion of one column, constant first

    Args:
        z: Values of the variable
        spec: Family, a_n and spline order
        knots: Explicit knots for splines (default: quantile placement)
        degree: Override of spec.a_n for this variable

    Returns:
        Matrix with a_n columns (power) or s + 1 + #knots columns (spline)
    """
    a_n = spec.a_n if degree is None else degree
    matrix, _, _ = _univariate(
        z, spec.family, a_n, spec.spline_order,
        None if knots is None else np.asarray(knots, dtype=np.float64),
    )
    return matrix


class SeriesDesigner:
    """
    Evaluates BasisSpec terms on level regressors

    Holds the [0, 1] rescaling and the knot placement of one panel so that
    every spec (null, alternative, grid candidates) and every evaluation grid
    shares the same scaling and knots.
    """

    def __init__(self, panel: PanelDataset):
        self.x_names = panel.x_names
        self._reference = panel.X
        self._lo = panel.X.min(axis=0)
        self._hi = panel.X.max(axis=0)
        self._knot_cache: Dict[Tuple[str, str, int, int], np.ndarray] = {}

    def _index(self, var: str) -> int:
        try:
            return self.x_names.index(var)
        except ValueError:
            raise PanelSpecError(f"Basis refers to unknown regressor '{var}'") from None

    def scale(self, var: str, values: np.ndarray) -> np.ndarray:
        j = self._index(var)
        width = self._hi[j] - self._lo[j]
        if width <= 0:
            return np.zeros_like(values, dtype=np.float64)
        return (np.asarray(values, dtype=np.float64) - self._lo[j]) / width

    def knots_for(self, spec: BasisSpec, var: str, a_n: int) -> Optional[np.ndarray]:
        """Scaled knots for var; explicit level knots are converted, otherwise quantiles"""
        if spec.family != "spline":
            return None
        if var in spec.knots:
            return self.scale(var, np.asarray(spec.knots[var], dtype=np.float64))
        key = (var, spec.family, a_n, spec.spline_order)
        if key not in self._knot_cache:
            z = self.scale(var, self._reference[:, self._index(var)])
            self._knot_cache[key] = quantile_knots(z, max(a_n - spec.spline_order - 1, 0))
            logger.debug(f"Knots for {var} (a_n={a_n}): {self._knot_cache[key].tolist()}")
        return self._knot_cache[key]

    def _nonparametric_terms(
        self, spec: BasisSpec, var: str, values: np.ndarray
    ) -> List[Tuple[BasisTerm, np.ndarray]]:
        a_n = spec.degree_for(var)
        z = self.scale(var, values)
        knots = self.knots_for(spec, var, a_n)
        if knots is not None and len(knots):
            # Knots were placed on the reference sample; only enforce them there
            _check_knots(self.scale(var, self._reference[:, self._index(var)]), knots)
        matrix, labels, _ = _univariate(
            z, spec.family, a_n, spec.spline_order,
            knots if knots is not None else np.empty(0),
        )
        return [
            (BasisTerm(((var, label),)), matrix[:, j])
            for j, label in enumerate(labels) if label != "^0"
        ]

    def evaluate(
        self, spec: BasisSpec, X_level: Optional[np.ndarray] = None
    ) -> Tuple[List[BasisTerm], np.ndarray]:
        """
        Evaluate every term of spec

        Args:
            spec: Basis specification
            X_level: Level regressors (rows x d_x); defaults to the panel's own

        Returns:
            Terms and the matching column matrix, constant first
        """
        X = self._reference if X_level is None else np.asarray(X_level, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        rows = X.shape[0]

        terms: List[BasisTerm] = [CONSTANT]
        columns: List[np.ndarray] = [np.ones(rows)]
        np_terms: Dict[str, List[Tuple[BasisTerm, np.ndarray]]] = {}

        for var in self.x_names:
            role = spec.variable_roles.get(var)
            if role is None:
                continue
            values = X[:, self._index(var)]
            if role == "dummy":
                terms.append(BasisTerm(((var, ""),)))
                columns.append(np.asarray(values, dtype=np.float64))
            elif role == "linear":
                terms.append(BasisTerm(((var, "^1"),)))
                columns.append(self.scale(var, values))
            else:
                univariate = self._nonparametric_terms(spec, var, values)
                np_terms[var] = univariate
                for term, column in univariate:
                    terms.append(term)
                    columns.append(column)

        for var in spec.variable_roles:
            if var not in self.x_names:
                raise PanelSpecError(f"Basis refers to unknown regressor '{var}'")

        np_vars = list(np_terms)
        for order in range(2, spec.interaction_order + 1):
            for combo in combinations(np_vars, order):
                for parts in product(*(np_terms[v] for v in combo)):
                    factors = tuple(f for term, _ in parts for f in term.factors)
                    terms.append(BasisTerm(factors))
                    columns.append(reduce(np.multiply, [col for _, col in parts]))

        return terms, np.column_stack(columns)


@dataclass(frozen=True)
class DesignSplit:
    """Transformed restricted-model columns W and test directions Z"""
    W: np.ndarray = field(repr=False)
    Z: np.ndarray = field(repr=False)
    w_labels: Tuple[str, ...]
    z_labels: Tuple[str, ...]
    dropped: Tuple[Tuple[str, str], ...] = ()
    spec_null: Optional[BasisSpec] = None
    spec_alt: Optional[BasisSpec] = None
    orthonormalized: bool = False
    parent: Optional["DesignSplit"] = field(default=None, repr=False)
    designer: Optional[SeriesDesigner] = field(default=None, repr=False, compare=False)

    @property
    def m_n(self) -> int:
        return self.W.shape[1]

    @property
    def r_n(self) -> int:
        return self.Z.shape[1]

    @property
    def k_n(self) -> int:
        return self.m_n + self.r_n

    @property
    def column_labels(self) -> Tuple[str, ...]:
        return self.w_labels + self.z_labels

    @property
    def raw(self) -> "DesignSplit":
        """The design before orthonormalization"""
        return self.parent.raw if self.parent is not None else self


def _in_span(column: np.ndarray, A: np.ndarray) -> bool:
    if A.shape[1] == 0:
        return False
    coef, *_ = linalg.lstsq(A, column)
    resid = column - A @ coef
    return np.linalg.norm(resid) <= 1e-6 * max(np.linalg.norm(column), 1e-300)


def build_null_and_test_designs(
    tp: TransformedPanel,
    spec_null: BasisSpec,
    spec_alt: BasisSpec,
    designer: Optional[SeriesDesigner] = None,
) -> DesignSplit:
    """
    Evaluate both specs on level data, transform, and split into W and Z

    Z holds the alternative columns whose terms are not in the null design.
    Columns annihilated by the transformation (the constant, time-invariant
    terms) are dropped and recorded.
    """
    designer = designer or SeriesDesigner(tp.source)
    null_terms, W_level = designer.evaluate(spec_null)
    alt_terms, A_level = designer.evaluate(spec_alt)

    W_hat = tp.transform(W_level)
    A_hat = tp.transform(A_level)

    dropped: List[Tuple[str, str]] = []

    def _keep(terms, level, hat):
        kept = []
        for j, term in enumerate(terms):
            scale = max(np.linalg.norm(level[:, j]), 1e-300)
            if np.linalg.norm(hat[:, j]) <= ZERO_COLUMN_TOLERANCE * scale:
                dropped.append((term.label, f"annihilated by {tp.transform_tag} transform"))
            else:
                kept.append(j)
        return kept

    null_keep = _keep(null_terms, W_level, W_hat)
    alt_labels = {t.label for t in alt_terms}
    null_labels = {t.label for t in null_terms}

    # Dropped null columns reappear among the alternative ones; record them once
    alt_dropped_before = len(dropped)
    alt_keep = _keep(alt_terms, A_level, A_hat)
    dropped = dropped[:alt_dropped_before] + [
        d for d in dropped[alt_dropped_before:] if d[0] not in null_labels
    ]

    missing = [j for j in null_keep if null_terms[j].label not in alt_labels]
    for j in missing:
        if not _in_span(W_hat[:, j], A_hat[:, alt_keep]):
            raise NestednessViolation(
                f"null column '{null_terms[j].label}' is not spanned by the alternative design"
            )

    z_keep = [j for j in alt_keep if alt_terms[j].label not in null_labels]
    if not z_keep:
        raise EmptyTestSet("the alternative adds no columns beyond the null design")

    ds = DesignSplit(
        W=W_hat[:, null_keep],
        Z=A_hat[:, z_keep],
        w_labels=tuple(null_terms[j].label for j in null_keep),
        z_labels=tuple(alt_terms[j].label for j in z_keep),
        dropped=tuple(dropped),
        spec_null=spec_null,
        spec_alt=spec_alt,
        designer=designer,
    )
    for label, reason in ds.dropped:
        logger.debug(f"Dropped column {label}: {reason}")
    logger.info(f"Design built: m_n={ds.m_n}, r_n={ds.r_n}, k_n={ds.k_n}, dropped={len(ds.dropped)}")
    return ds


def orthonormalize(ds: DesignSplit, tol: float = RANK_TOLERANCE) -> DesignSplit:
    """
    Sequential Gram-Schmidt over the columns of W, then Z

    Columns are orthonormal in the sample inner product a'b / (n T'). span(W)
    and span([W Z]) are preserved; columns that are numerically dependent on
    earlier ones are dropped and recorded.
    """
    nobs = ds.W.shape[0]
    A = np.column_stack([ds.W, ds.Z])
    labels = ds.column_labels
    Q = np.empty((nobs, 0))
    kept: List[int] = []
    dropped = list(ds.dropped)

    for j in range(A.shape[1]):
        column = A[:, j]
        v = column.copy()
        # two passes of classical Gram-Schmidt keep orthogonality at round-off level
        for _ in range(2):
            if Q.shape[1]:
                v = v - Q @ (Q.T @ v) / nobs
        norm = np.linalg.norm(v)
        if norm <= tol * max(np.linalg.norm(column), 1e-300):
            dropped.append((labels[j], "collinear with earlier columns"))
            logger.info(f"Dropped collinear column {labels[j]}")
            continue
        Q = np.column_stack([Q, v * (np.sqrt(nobs) / norm)])
        kept.append(j)

    m_kept = sum(1 for j in kept if j < ds.m_n)
    return replace(
        ds,
        W=Q[:, :m_kept],
        Z=Q[:, m_kept:],
        w_labels=tuple(labels[j] for j in kept[:m_kept]),
        z_labels=tuple(labels[j] for j in kept[m_kept:]),
        dropped=tuple(dropped),
        orthonormalized=True,
        parent=ds,
    )


def psid_specs(model: str, a_n: int = 4, family: str = "power") -> Tuple[BasisSpec, BasisSpec]:
    """
    Null and alternative specs of the wage-equation example

    The alternative is nonparametric in weeks worked and experience (tensor
    product of their univariate expansions) and linear in the six dummies.

    Args:
        model: "quadratic", "linear" or "semiparametric"
        a_n: Terms per univariate expansion in the alternative
        family: "power" or "spline"
    """
    alt = BasisSpec.from_roles(
        nonparametric=PSID_CONTINUOUS, dummies=PSID_DUMMIES, a_n=a_n, family=family,
    )
    if model == "quadratic":
        null = BasisSpec.from_roles(
            linear=("WKS",), nonparametric=("EXP",), dummies=PSID_DUMMIES, degrees={"EXP": 3},
        )
    elif model == "linear":
        null = BasisSpec.from_roles(linear=PSID_CONTINUOUS, dummies=PSID_DUMMIES)
    elif model == "semiparametric":
        null = BasisSpec.from_roles(
            linear=("WKS",), nonparametric=("EXP",), dummies=PSID_DUMMIES, degrees={"EXP": 4},
        )
    else:
        raise PanelSpecError(f"Unknown wage-equation model '{model}'")
    return null, alt
