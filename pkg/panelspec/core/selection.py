"""
Data-driven choice of the number of test directions

Candidates share the restricted design and differ in how many alternative
series terms they add; the chosen candidate maximizes

    xi(r) - r - gamma * sqrt(2 (r - r_min)),  gamma = c * sqrt(2 ln #candidates)
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from dataclasses_json import dataclass_json

from .basis import BasisSpec, DesignSplit, SeriesDesigner, build_null_and_test_designs, orthonormalize
from .errors import ConfigError, SingularOmega
from .lm_test import TestResult, run_lm_test
from .panel import TransformedPanel
from .projection import RestrictedFit, with_directions
from ..config import DEFAULT_PENALTY_C
from ..logger import get_logger

logger = get_logger("panelspec.core.selection")


@dataclass(frozen=True)
class Candidate:
    a_n: int
    design: DesignSplit = field(repr=False)

    @property
    def r_n(self) -> int:
        return self.design.r_n

    @property
    def label(self) -> str:
        return f"a_n={self.a_n} (r_n={self.r_n})"


@dataclass(frozen=True)
class SelectionGrid:
    candidates: Tuple[Candidate, ...]
    c: float = DEFAULT_PENALTY_C

    def __post_init__(self):
        if len(self.candidates) < 2:
            raise ConfigError("a selection grid needs at least two candidates")
        ordered = tuple(sorted(self.candidates, key=lambda cand: (cand.r_n, cand.a_n)))
        object.__setattr__(self, "candidates", ordered)

    @property
    def cardinality(self) -> int:
        return len(self.candidates)

    @property
    def r_min(self) -> int:
        return min(cand.r_n for cand in self.candidates)

    @property
    def gamma_n(self) -> float:
        return penalty_gamma(self.cardinality, self.c)


def penalty_gamma(cardinality: int, c: float = DEFAULT_PENALTY_C) -> float:
    return c * math.sqrt(2 * math.log(cardinality))


def criterion(xi: float, r_n: int, r_min: int, gamma_n: float) -> float:
    return xi - r_n - gamma_n * math.sqrt(2 * (r_n - r_min))


@dataclass_json
@dataclass
class CriterionRow:
    a_n: int
    r_n: int
    m_n: int
    xi: float
    penalty: float
    criterion: float
    chosen: bool = False


@dataclass
class SelectionResult:
    chosen: Candidate
    result: TestResult
    table: List[CriterionRow]
    gamma_n: float
    c: float


def build_grid(
    tp: TransformedPanel,
    spec_null: BasisSpec,
    a_min: int,
    a_max: int,
    alt_template: BasisSpec,
    c: float = DEFAULT_PENALTY_C,
    designer: Optional[SeriesDesigner] = None,
) -> SelectionGrid:
    """
    Candidate designs for a_n = a_min..a_max of the alternative

    Args:
        tp: Transformed panel
        spec_null: Restricted-model spec (fixed across candidates)
        a_min, a_max: Inclusive range of univariate terms in the alternative
        alt_template: Alternative spec; its a_n is replaced per candidate
        c: Penalty constant
        designer: Shared scaling/knot state (built from tp when omitted)
    """
    if a_max <= a_min:
        raise ConfigError(f"grid needs a_max > a_min, got {a_min}..{a_max}")
    designer = designer or SeriesDesigner(tp.source)

    candidates = []
    previous_labels = None
    for a_n in range(a_min, a_max + 1):
        ds = build_null_and_test_designs(tp, spec_null, alt_template.with_a_n(a_n), designer)
        if previous_labels is not None and not previous_labels <= set(ds.z_labels):
            # Spline knots move with a_n, so nesting holds for spans only approximately
            logger.warning(f"Candidate a_n={a_n} does not contain the previous candidate's terms")
        previous_labels = set(ds.z_labels)
        candidates.append(Candidate(a_n=a_n, design=orthonormalize(ds)))

    return SelectionGrid(candidates=tuple(candidates), c=c)


def select_rn(fit: RestrictedFit, grid: SelectionGrid, kind: str) -> SelectionResult:
    """
    Evaluate the penalized criterion on every candidate and keep the maximizer

    Ties go to the smallest r_n. The returned TestResult is the plain test at the
    chosen r_n, flagged with nominal post-selection inference.
    """
    r_min, gamma_n = grid.r_min, grid.gamma_n
    results: List[TestResult] = []
    table: List[CriterionRow] = []

    for cand in grid.candidates:
        try:
            result = run_lm_test(with_directions(fit, cand.design), kind)
        except SingularOmega as exc:
            raise SingularOmega(exc.detail, candidate=cand.label) from exc
        penalty = gamma_n * math.sqrt(2 * (result.r_n - r_min))
        results.append(result)
        table.append(CriterionRow(
            a_n=cand.a_n,
            r_n=result.r_n,
            m_n=result.m_n,
            xi=result.xi,
            penalty=penalty,
            criterion=result.xi - result.r_n - penalty,
        ))

    best = 0
    for j in range(1, len(table)):
        if table[j].criterion > table[best].criterion:
            best = j
    table[best].chosen = True

    chosen = grid.candidates[best]
    result = results[best]
    result.post_selection = "nominal"
    logger.info(f"Selected {chosen.label} (gamma_n={gamma_n:.4f}, criterion={table[best].criterion:.3f})")
    return SelectionResult(chosen=chosen, result=result, table=table, gamma_n=gamma_n, c=grid.c)
