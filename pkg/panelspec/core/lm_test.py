"""
LM-type quadratic-form statistics and their asymptotic calibration
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from dataclasses_json import dataclass_json
from scipy import linalg
from scipy.stats import chi2, norm

from .errors import DomainError, EmptyTestSet, PanelSpecError, SingularOmega
from .projection import RestrictedFit, cross_moment, is_degenerate
from ..config import DEFAULT_NOMINAL_LEVEL, OMEGA_TOLERANCE
from ..logger import get_logger

logger = get_logger("panelspec.core.lm_test")

HOMOSKEDASTIC = "homoskedastic"
HETEROSKEDASTIC = "heteroskedastic"

_KIND_ALIASES = {
    "hom": HOMOSKEDASTIC,
    HOMOSKEDASTIC: HOMOSKEDASTIC,
    "hc": HETEROSKEDASTIC,
    HETEROSKEDASTIC: HETEROSKEDASTIC,
}


def normalize_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind.lower()]
    except (KeyError, AttributeError):
        raise PanelSpecError(f"Unknown statistic kind '{kind}', expected hom or hc") from None


@dataclass(frozen=True)
class OmegaEstimate:
    matrix: np.ndarray
    kind: str
    condition_number: float


def omega_matrix(Z_blocks: np.ndarray, e_blocks: np.ndarray, kind: str) -> np.ndarray:
    """
    Un-normalized middle matrix from per-individual blocks

    Args:
        Z_blocks: (n, T', r) annihilated test directions
        e_blocks: (n, T') residuals
        kind: homoskedastic or heteroskedastic
    """
    if normalize_kind(kind) == HOMOSKEDASTIC:
        sigma = e_blocks.T @ e_blocks / e_blocks.shape[0]
        matrix = np.einsum("itr,ts,isq->rq", Z_blocks, sigma, Z_blocks, optimize=True)
    else:
        scores = np.einsum("itr,it->ir", Z_blocks, e_blocks)
        matrix = scores.T @ scores
    return (matrix + matrix.T) / 2


def _checked(matrix: np.ndarray, kind: str) -> OmegaEstimate:
    if matrix.shape[0] == 0:
        raise EmptyTestSet("no test directions left after dropping annihilated or collinear columns")
    eigenvalues = linalg.eigvalsh(matrix)
    smallest, largest = eigenvalues[0], eigenvalues[-1]
    if largest <= 0 or smallest <= OMEGA_TOLERANCE * largest:
        raise SingularOmega(
            f"Omega ({kind}) is not positive definite "
            f"(eigenvalues {smallest:.3e} .. {largest:.3e})"
        )
    return OmegaEstimate(matrix=matrix, kind=kind, condition_number=float(largest / smallest))


def omega(fit: RestrictedFit, kind: str) -> OmegaEstimate:
    """Middle matrix of the quadratic form for the requested kind"""
    kind = normalize_kind(kind)
    return _checked(omega_matrix(fit.Z_blocks, fit.resid_blocks, kind), kind)


def quadratic_form(v: np.ndarray, matrix: np.ndarray) -> float:
    """v' M^{-1} v through a Cholesky factorization, clamped at zero"""
    try:
        factor = linalg.cho_factor(matrix, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularOmega(f"Cholesky factorization failed: {exc}") from None
    return max(float(v @ linalg.cho_solve(factor, v)), 0.0)


def chi2_quantile(df: float, prob: float) -> float:
    """Inverse CDF of the chi-square distribution"""
    if not (np.isfinite(df) and df >= 1):
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    if not (0 < prob < 1):
        raise DomainError(f"probability must lie in (0, 1), got {prob}")
    return float(chi2.ppf(prob, df))


def normal_quantile(prob: float) -> float:
    """Inverse CDF of the standard normal"""
    if not (0 < prob < 1):
        raise DomainError(f"probability must lie in (0, 1), got {prob}")
    return float(norm.ppf(prob))


def normalized_statistic(xi: float, tau: int) -> float:
    return (xi - tau) / math.sqrt(2 * tau)


@dataclass_json
@dataclass
class TestResult:
    """
    One LM-type test

    t_kn and the *_kn p-values normalize by all series terms; they carry no
    degrees-of-freedom correction and are kept for comparison only.
    """
    __test__ = False

    xi: float
    kind: str
    r_n: int
    k_n: int
    m_n: int
    t_rn: float
    t_kn: float
    p_chi2: float
    p_normal: float
    p_chi2_kn: float
    p_normal_kn: float
    crit_chi2_05: float
    crit_chi2_10: float
    crit_normal_05: float
    crit_normal_10: float
    degenerate: bool = False
    omega_condition: Optional[float] = None
    bootstrap_p: Optional[float] = None
    bootstrap_crit_05: Optional[float] = None
    post_selection: Optional[str] = None

    @classmethod
    def from_statistic(
        cls,
        xi: float,
        kind: str,
        r_n: int,
        m_n: int,
        *,
        degenerate: bool = False,
        omega_condition: Optional[float] = None,
    ) -> "TestResult":
        if r_n < 1:
            raise EmptyTestSet("a test needs at least one direction")
        k_n = m_n + r_n
        t_rn = normalized_statistic(xi, r_n)
        t_kn = normalized_statistic(xi, k_n)
        return cls(
            xi=xi,
            kind=normalize_kind(kind),
            r_n=r_n,
            k_n=k_n,
            m_n=m_n,
            t_rn=t_rn,
            t_kn=t_kn,
            p_chi2=float(chi2.sf(xi, r_n)),
            p_normal=float(norm.sf(t_rn)),
            p_chi2_kn=float(chi2.sf(xi, k_n)),
            p_normal_kn=float(norm.sf(t_kn)),
            crit_chi2_05=chi2_quantile(r_n, 0.95),
            crit_chi2_10=chi2_quantile(r_n, 0.90),
            crit_normal_05=normal_quantile(0.95),
            crit_normal_10=normal_quantile(0.90),
            degenerate=degenerate,
            omega_condition=omega_condition,
        )

    def reject(self, level: float = DEFAULT_NOMINAL_LEVEL, rule: str = "chi2") -> bool:
        """
        Decision at `level`

        rule is one of chi2, normal, chi2_kn, normal_kn, bootstrap.
        """
        p_values = {
            "chi2": self.p_chi2,
            "normal": self.p_normal,
            "chi2_kn": self.p_chi2_kn,
            "normal_kn": self.p_normal_kn,
            "bootstrap": self.bootstrap_p,
        }
        if rule not in p_values:
            raise PanelSpecError(f"Unknown decision rule '{rule}'")
        p = p_values[rule]
        if p is None:
            raise PanelSpecError("no bootstrap p-value was computed for this test")
        return p < level

    def summary(self) -> str:
        label = "xi_HC" if self.kind == HETEROSKEDASTIC else "xi"
        text = (
            f"{label}={self.xi:.3f} r_n={self.r_n} t={self.t_rn:.3f} "
            f"p(chi2)={self.p_chi2:.4f} p(normal)={self.p_normal:.4f} "
            f"[t_kn={self.t_kn:.3f}, no df correction (for comparison)]"
        )
        if self.bootstrap_p is not None:
            text += f" p(bootstrap)={self.bootstrap_p:.4f}"
        if self.post_selection:
            text += f" post-selection: {self.post_selection}"
        return text


def xi_statistic(
    fit: RestrictedFit, omega_est: Optional[OmegaEstimate], kind: Optional[str] = None
) -> TestResult:
    """
    xi = v' Omega^{-1} v with v = sum_i Ztilde_i' e_i

    Degenerate residuals give xi = 0 and need no Omega; the result then
    carries `kind` (or the kind of `omega_est` when one is given).
    """
    if fit.degenerate:
        if omega_est is not None:
            kind = omega_est.kind
        elif kind is None:
            raise PanelSpecError("a degenerate fit without an Omega estimate needs the statistic kind")
        return TestResult.from_statistic(0.0, kind, fit.r_n, fit.m_n, degenerate=True)
    if omega_est is None:
        raise PanelSpecError("a non-degenerate fit needs an Omega estimate")
    xi = quadratic_form(cross_moment(fit), omega_est.matrix)
    return TestResult.from_statistic(
        xi, omega_est.kind, fit.r_n, fit.m_n, omega_condition=omega_est.condition_number,
    )


def statistic_from_blocks(
    Z_blocks: np.ndarray,
    e_blocks: np.ndarray,
    kind: str,
    reference: np.ndarray,
) -> float:
    """xi for given residual blocks (0 when they are degenerate relative to `reference`)"""
    if is_degenerate(e_blocks, reference):
        return 0.0
    kind = normalize_kind(kind)
    est = _checked(omega_matrix(Z_blocks, e_blocks, kind), kind)
    v = np.einsum("itr,it->r", Z_blocks, e_blocks)
    return quadratic_form(v, est.matrix)


def run_lm_test(fit: RestrictedFit, kind: str) -> TestResult:
    """Omega plus xi for a restricted fit"""
    kind = normalize_kind(kind)
    if fit.r_n < 1:
        raise EmptyTestSet("no test directions left after dropping annihilated or collinear columns")
    result = xi_statistic(fit, None if fit.degenerate else omega(fit, kind), kind)
    logger.info(result.summary())
    return result
